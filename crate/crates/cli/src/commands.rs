//! Subcommand implementations. Each returns whether its checks passed; errors
//! carry their own exit code.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use bosonic_wiretap::capacity::{CapacityReport, CapacityRow, EnergyConstraint};
use bosonic_wiretap::channel::StateSet;
use bosonic_wiretap::covering::{
    run_covering_trials, run_covering_trials_with, CoveringConfig, DistanceMethod,
};
use bosonic_wiretap::ensemble::CoherentEnsemble;
use bosonic_wiretap::fock::{truncation_bound_check, FockCutoff, TruncationBoundCheck};
use bosonic_wiretap::gaussian::{discretize, discretize_to};
use bosonic_wiretap::verify::{run_all, run_suite, Suite, SuiteReport, VerifyOptions};
use bosonic_wiretap::wiretap::{simulate, SimConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::output::{Format, Sink};
use crate::{
    CapacityArgs, Cli, Command, CoveringArgs, CutoffArgs, DiscretizeArgs, SimulateArgs, VerifyArgs,
};

/// Cutoff floor used by `covering` when neither flag nor config gives one.
pub const DEFAULT_COVERING_CUTOFF: usize = 12;

pub fn run(cli: Cli) -> CliResult<bool> {
    let sink = Sink {
        output: cli.output,
        output_dir: cli.output_dir,
    };
    let format = cli.format;
    match cli.command {
        Command::Capacity(args) => cmd_capacity(args, &sink, format),
        Command::Discretize(args) => cmd_discretize(args, &sink, format.unwrap_or(Format::Json)),
        Command::Cutoff(args) => cmd_cutoff(args, &sink, format.unwrap_or(Format::Json)),
        Command::Covering(args) => cmd_covering(args, &sink, format.unwrap_or(Format::Json)),
        Command::Simulate(args) => cmd_simulate(args, &sink, format.unwrap_or(Format::Json)),
        Command::Verify(args) => cmd_verify(args, &sink, format.unwrap_or(Format::Json)),
    }
}

fn read_json_file<T: DeserializeOwned>(path: &Path, what: &str) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse {
        what: format!("{what} in {}", path.display()),
        source,
    })
}

/// Inline JSON, or the contents of a file when the argument starts with `@`.
fn read_json_arg<T: DeserializeOwned>(arg: &str, what: &str) -> CliResult<T> {
    match arg.strip_prefix('@') {
        Some(path) => read_json_file(Path::new(path), what),
        None => serde_json::from_str(arg).map_err(|source| CliError::Parse {
            what: what.into(),
            source,
        }),
    }
}

fn missing(flag: &str) -> CliError {
    CliError::Usage(format!("missing {flag} (give it as a flag or in --config)"))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CapacityConfig {
    set: StateSet,
    #[serde(rename = "E", default)]
    energy: Option<f64>,
    #[serde(default)]
    transmissivity: bool,
}

/// Parses `E=a:b:steps` into `steps` evenly spaced energies from `a` to `b`.
pub fn parse_sweep(sweep: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Usage(format!("malformed sweep '{sweep}', expected E=a:b:steps"));
    let range = sweep.strip_prefix("E=").ok_or_else(bad)?;
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let a = f64::from_str(parts[0]).map_err(|_| bad())?;
    let b = f64::from_str(parts[1]).map_err(|_| bad())?;
    let steps = usize::from_str(parts[2]).map_err(|_| bad())?;
    if steps == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if steps == 1 {
        return Ok(vec![a]);
    }
    Ok((0..steps)
        .map(|i| a + (b - a) * i as f64 / (steps - 1) as f64)
        .collect())
}

fn cmd_capacity(args: CapacityArgs, sink: &Sink, format: Option<Format>) -> CliResult<bool> {
    let base: Option<CapacityConfig> = args
        .config
        .as_deref()
        .map(|p| read_json_file(p, "capacity config"))
        .transpose()?;
    let set = match (&args.set, &base) {
        (Some(s), _) => read_json_arg::<StateSet>(s, "state set")?,
        (None, Some(cfg)) => cfg.set.clone(),
        (None, None) => return Err(missing("--set")),
    };
    let transmissivity = args.transmissivity || base.as_ref().is_some_and(|c| c.transmissivity);
    let set = if transmissivity {
        set.from_transmissivities()?
    } else {
        set
    };
    set.validate()?;

    if let Some(sweep) = &args.sweep {
        let reports = parse_sweep(sweep)?
            .into_iter()
            .map(|e| Ok(CapacityReport::compute(&set, EnergyConstraint::new(e)?)?))
            .collect::<CliResult<Vec<_>>>()?;
        let rows: Vec<CapacityRow> = reports.iter().map(CapacityReport::row).collect();
        sink.write("capacity", format.unwrap_or(Format::Csv), &reports, &rows)?;
        return Ok(true);
    }
    let energy = args
        .energy
        .or(base.and_then(|c| c.energy))
        .ok_or_else(|| missing("--E"))?;
    let report = CapacityReport::compute(&set, EnergyConstraint::new(energy)?)?;
    sink.write(
        "capacity",
        format.unwrap_or(Format::Json),
        &report,
        &[report.row()],
    )?;
    Ok(true)
}

/// One ensemble point per CSV row.
#[derive(Debug, Serialize)]
struct PointRow {
    re: f64,
    im: f64,
    prob: f64,
}

fn cmd_discretize(args: DiscretizeArgs, sink: &Sink, format: Format) -> CliResult<bool> {
    let ensemble = match (args.delta, args.outer, args.fineness) {
        (Some(delta), None, None) => discretize_to(args.energy, delta, args.max_patches)?,
        (None, Some(outer), Some(fineness)) => discretize(args.energy, outer, fineness)?,
        _ => {
            return Err(CliError::Usage(
                "give either --delta or both --R and --r".into(),
            ))
        }
    };
    let rows: Vec<PointRow> = ensemble
        .points()
        .iter()
        .zip(ensemble.probs())
        .map(|(x, &prob)| PointRow {
            re: x.value().re,
            im: x.value().im,
            prob,
        })
        .collect();
    sink.write("discretize", format, &ensemble, &rows)?;
    Ok(true)
}

#[derive(Debug, Serialize)]
struct BlockLengthChoice {
    n: usize,
    check: TruncationBoundCheck,
}

/// Cutoffs chosen by the energy rule and, optionally, the block-length rule.
#[derive(Debug, Serialize)]
struct CutoffReport {
    alpha2: f64,
    requested: usize,
    energy_rule: TruncationBoundCheck,
    #[serde(skip_serializing_if = "Option::is_none")]
    block_length: Option<BlockLengthChoice>,
}

#[derive(Debug, Serialize)]
struct CutoffRow {
    rule: &'static str,
    n_max: usize,
    applicable: bool,
    holds: bool,
    log2_tail: f64,
    log2_allowed: f64,
}

impl CutoffRow {
    fn new(rule: &'static str, c: &TruncationBoundCheck) -> Self {
        CutoffRow {
            rule,
            n_max: c.n_max,
            applicable: c.applicable,
            holds: c.holds,
            log2_tail: c.log2_tail,
            log2_allowed: c.log2_allowed,
        }
    }
}

fn cmd_cutoff(args: CutoffArgs, sink: &Sink, format: Format) -> CliResult<bool> {
    if !(args.alpha2 >= 0.0) || !args.alpha2.is_finite() {
        return Err(CliError::Usage(format!(
            "--alpha2 must be finite and >= 0, got {}",
            args.alpha2
        )));
    }
    let energy_rule = truncation_bound_check(
        args.alpha2,
        FockCutoff::energy_rule(args.alpha2, args.requested),
    );
    let block_length = args.block_length.map(|n| BlockLengthChoice {
        n,
        check: truncation_bound_check(args.alpha2, FockCutoff::block_length_rule(n)),
    });
    let mut rows = vec![CutoffRow::new("energy", &energy_rule)];
    if let Some(b) = &block_length {
        rows.push(CutoffRow::new("block_length", &b.check));
    }
    let report = CutoffReport {
        alpha2: args.alpha2,
        requested: args.requested,
        energy_rule,
        block_length,
    };
    sink.write("cutoff", format, &report, &rows)?;
    Ok(report.energy_rule.holds)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoveringFile {
    input: CoherentEnsemble,
    config: CoveringConfig,
    #[serde(default)]
    method: Option<DistanceMethod>,
}

fn parse_method(s: &str) -> CliResult<DistanceMethod> {
    match s {
        "explicit" => Ok(DistanceMethod::Explicit),
        "gram" => Ok(DistanceMethod::Gram),
        _ => Err(CliError::Usage(format!(
            "unknown method '{s}', expected explicit or gram"
        ))),
    }
}

fn cmd_covering(args: CoveringArgs, sink: &Sink, format: Format) -> CliResult<bool> {
    let base: Option<CoveringFile> = args
        .config
        .as_deref()
        .map(|p| read_json_file(p, "covering config"))
        .transpose()?;
    let input: CoherentEnsemble = match (&args.input, &base) {
        (Some(s), _) => read_json_arg(s, "input ensemble")?,
        (None, Some(b)) => b.input.clone(),
        (None, None) => return Err(missing("--input")),
    };
    let from_base = base.as_ref().map(|b| b.config);
    let eta = args
        .eta
        .or(from_base.map(|c| c.eta))
        .ok_or_else(|| missing("--eta"))?;
    let config = CoveringConfig {
        eta,
        n: args.n.or(from_base.map(|c| c.n)).unwrap_or(1),
        l: args
            .l
            .or(from_base.map(|c| c.l))
            .ok_or_else(|| missing("--L"))?,
        trials: args.trials.or(from_base.map(|c| c.trials)).unwrap_or(100),
        eps: args.eps.or(from_base.map(|c| c.eps)).unwrap_or(0.1),
        delta: args.delta.or(from_base.map(|c| c.delta)).unwrap_or(0.1),
        cutoff: args
            .cutoff
            .map(FockCutoff::new)
            .or(from_base.map(|c| c.cutoff))
            .unwrap_or_else(|| {
                FockCutoff::energy_rule(eta * eta * input.max_energy(), DEFAULT_COVERING_CUTOFF)
            }),
        seed: args
            .seed
            .or(from_base.map(|c| c.seed))
            .ok_or_else(|| missing("--seed"))?,
    };
    config.validate()?;
    let method = match (&args.method, base.as_ref().and_then(|b| b.method)) {
        (Some(s), _) => Some(parse_method(s)?),
        (None, m) => m,
    };
    let outcome = match method {
        Some(m) => run_covering_trials_with(&input, &config, m)?,
        None => run_covering_trials(&input, &config)?,
    };
    sink.write("covering", format, &outcome, &outcome.trials())?;
    Ok(outcome.within_bound())
}

fn cmd_simulate(args: SimulateArgs, sink: &Sink, format: Format) -> CliResult<bool> {
    let mut config: SimConfig = read_json_file(&args.config, "simulation config")?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    config.validate()?;
    let report = simulate(&config)?;
    sink.write("simulate", format, &report, &[report.summary_row(&config)])?;
    Ok(report.passed())
}

fn cmd_verify(args: VerifyArgs, sink: &Sink, format: Format) -> CliResult<bool> {
    let opts = VerifyOptions {
        seed: args.seed,
        trials: args.trials,
        alpha2: args.alpha2,
        n_max: args.n_max,
    };
    if args.suite == "all" {
        let report = run_all(&opts)?;
        sink.write("verify", format, &report, &report.suites)?;
        return Ok(report.passed);
    }
    let suite = Suite::from_str(&args.suite).map_err(|_| {
        let names: Vec<&str> = Suite::ALL.iter().map(Suite::name).collect();
        CliError::Usage(format!(
            "unknown suite '{}', expected one of {} or all",
            args.suite,
            names.join(", ")
        ))
    })?;
    let report: SuiteReport = run_suite(suite, &opts)?;
    sink.write("verify", format, &report, std::slice::from_ref(&report))?;
    Ok(report.passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parsing() {
        assert_eq!(
            parse_sweep("E=0:2:5").unwrap(),
            vec![0.0, 0.5, 1.0, 1.5, 2.0]
        );
        assert_eq!(parse_sweep("E=1:3:1").unwrap(), vec![1.0]);
        for bad in ["0:2:5", "E=0:2", "E=0:2:0", "E=a:2:3", "E=0:2:3:4"] {
            assert!(matches!(parse_sweep(bad), Err(CliError::Usage(_))), "{bad}");
        }
    }

    #[test]
    fn method_names() {
        assert_eq!(parse_method("gram").unwrap(), DistanceMethod::Gram);
        assert!(parse_method("fast").is_err());
    }
}
