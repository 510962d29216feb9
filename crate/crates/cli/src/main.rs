//! `bwt`: command-line front end for the bosonic wiretap numerics.
//!
//! Every command writes one report (pretty JSON or CSV) to `--output`, to
//! `<output dir>/<command>.<ext>` when an output directory is configured, or to
//! stdout. Diagnostics go to stderr. Exit codes: 0 success, 1 computation-level
//! failure (a checked bound or threshold did not hold), 2 usage error.

mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};

use crate::error::{EXIT_FAILURE, EXIT_OK, EXIT_USAGE};
use crate::output::Format;

#[derive(Debug, Parser)]
#[command(
    name = "bwt",
    version,
    about = "Lossy bosonic compound wiretap channel numerics"
)]
pub struct Cli {
    /// Report file; overrides the output directory.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Directory receiving `<command>.<json|csv>` when `--output` is absent.
    #[arg(long, global = true, env = "BWT_OUTPUT_DIR")]
    pub output_dir: Option<PathBuf>,

    /// Report format; JSON unless the command says otherwise.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Capacities with and without channel-state information.
    Capacity(CapacityArgs),
    /// Finite coherent ensemble approximating the complex-Gaussian input.
    Discretize(DiscretizeArgs),
    /// Fock cutoff selection and the truncation bound it guarantees.
    Cutoff(CutoffArgs),
    /// Monte Carlo check of the covering concentration bound.
    Covering(CoveringArgs),
    /// Random wiretap codebooks with square-root decoding and leakage.
    Simulate(SimulateArgs),
    /// Run an invariant suite (or `all`).
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct CapacityArgs {
    /// JSON config `{"set": .., "E": .., "transmissivity": ..}`; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// State set as inline JSON or `@file`, e.g. `{"kind":"finite","states":[[1,0]]}`.
    #[arg(long)]
    pub set: Option<String>,

    /// Mean photon number constraint.
    #[arg(long = "E")]
    pub energy: Option<f64>,

    /// Energy sweep `E=a:b:steps`, one CSV row per energy.
    #[arg(long, conflicts_with = "energy")]
    pub sweep: Option<String>,

    /// Read the set's coordinates as power transmissivities instead of amplitudes.
    #[arg(long)]
    pub transmissivity: bool,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["delta", "outer"])))]
pub struct DiscretizeArgs {
    /// Mean photon number of the Gaussian input.
    #[arg(long = "E")]
    pub energy: f64,

    /// Target trace-distance bound; picks `R` and `r` automatically.
    #[arg(long, conflicts_with = "outer")]
    pub delta: Option<f64>,

    /// Outer radius.
    #[arg(long = "R", requires = "fineness")]
    pub outer: Option<f64>,

    /// Patch fineness.
    #[arg(long = "r", requires = "outer")]
    pub fineness: Option<f64>,

    /// Refuse partitions with more patches than this.
    #[arg(long, default_value_t = bosonic_wiretap::gaussian::DEFAULT_MAX_PATCHES)]
    pub max_patches: usize,
}

#[derive(Debug, Args)]
pub struct CutoffArgs {
    /// Largest `|alpha|^2` the cutoff must accommodate.
    #[arg(long)]
    pub alpha2: f64,

    /// Lower limit on the cutoff.
    #[arg(long, default_value_t = 0)]
    pub requested: usize,

    /// Also report the block-length rule for this block length.
    #[arg(long)]
    pub block_length: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CoveringArgs {
    /// JSON config `{"input": .., "config": {..}, "method": ..}`; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Input ensemble as inline JSON or `@file` (`{"points":[[re,im,p],..]}`).
    #[arg(long)]
    pub input: Option<String>,

    /// Eavesdropper amplitude transmission.
    #[arg(long)]
    pub eta: Option<f64>,

    /// Block length.
    #[arg(long)]
    pub n: Option<usize>,

    /// Fake ensemble size.
    #[arg(long = "L")]
    pub l: Option<u64>,

    /// Number of independent fake ensembles [default: 100].
    #[arg(long)]
    pub trials: Option<usize>,

    /// Relative deviation `eps` in the concentration bound [default: 0.1].
    #[arg(long)]
    pub eps: Option<f64>,

    /// Typicality width [default: 0.1].
    #[arg(long)]
    pub delta: Option<f64>,

    /// Fock cutoff `N`.
    #[arg(long)]
    pub cutoff: Option<usize>,

    /// Base seed of the per-trial random streams.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Distance evaluation: `explicit`, `gram`, or the cheaper one when absent.
    #[arg(long)]
    pub method: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulation config JSON.
    #[arg(long)]
    pub config: PathBuf,

    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Overrides the number of codebooks.
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Suite name or `all`.
    pub suite: String,

    /// Random instances per suite; each suite has its own default.
    #[arg(long)]
    pub trials: Option<usize>,

    /// Base seed of the random instances.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Single `|alpha|^2` for the truncation suite.
    #[arg(long)]
    pub alpha2: Option<f64>,

    /// Single cutoff for the truncation suite.
    #[arg(long = "N")]
    pub n_max: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match commands::run(cli) {
        Ok(true) => ExitCode::from(EXIT_OK),
        Ok(false) => ExitCode::from(EXIT_FAILURE),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
