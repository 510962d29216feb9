//! Writing reports as pretty JSON or CSV to a file, an output directory or stdout.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

/// Where a command's report goes.
#[derive(Debug, Clone)]
pub struct Sink {
    /// Explicit file, if any.
    pub output: Option<PathBuf>,
    /// Directory used with a per-command file name when no file is given.
    pub output_dir: Option<PathBuf>,
}

impl Sink {
    fn destination(&self, command: &str, format: Format) -> Option<PathBuf> {
        match (&self.output, &self.output_dir) {
            (Some(path), _) => Some(path.clone()),
            (None, Some(dir)) => Some(dir.join(format!("{command}.{}", format.extension()))),
            (None, None) => None,
        }
    }

    pub fn write_json<T: Serialize>(&self, command: &str, value: &T) -> CliResult<()> {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| CliError::Serialize(e.to_string()))?;
        text.push('\n');
        self.emit(command, Format::Json, text.as_bytes())
    }

    pub fn write_csv<T: Serialize>(&self, command: &str, rows: &[T]) -> CliResult<()> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        for row in rows {
            writer
                .serialize(row)
                .map_err(|e| CliError::Serialize(e.to_string()))?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| CliError::Serialize(e.to_string()))?;
        self.emit(command, Format::Csv, &bytes)
    }

    pub fn write<T: Serialize, R: Serialize>(
        &self,
        command: &str,
        format: Format,
        value: &T,
        rows: &[R],
    ) -> CliResult<()> {
        match format {
            Format::Json => self.write_json(command, value),
            Format::Csv => self.write_csv(command, rows),
        }
    }

    fn emit(&self, command: &str, format: Format, bytes: &[u8]) -> CliResult<()> {
        match self.destination(command, format) {
            Some(path) => write_file(&path, bytes),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(bytes)
                    .and_then(|_| out.flush())
                    .map_err(|source| CliError::Write {
                        path: "stdout".into(),
                        source,
                    })
            }
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let wrap = |source| CliError::Write {
        path: path.display().to_string(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(wrap)?;
    }
    fs::write(path, bytes).map_err(wrap)?;
    log::info!("wrote {}", path.display());
    Ok(())
}
