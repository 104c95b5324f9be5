//! `dsesc` command-line interface: run one experiment described by a JSON
//! config, with optional flag overrides.
//!
//! Exit codes: 0 success, 2 invalid config or arguments, 3 training
//! divergence, 1 anything else.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use dsesc::experiment::{run, ExperimentConfig, Mode};
use dsesc::Error;

#[derive(Parser)]
#[command(
    name = "dsesc",
    about = "Double self-expressive subspace clustering experiment runner"
)]
struct Cli {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,

    /// Override the config's mode (pretrain|train|cluster|ablate|sweep-gamma).
    #[arg(long)]
    mode: Option<String>,

    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn execute(cli: Cli) -> Result<(), Error> {
    let mut config = ExperimentConfig::from_file(&cli.config)?;
    if let Some(mode) = &cli.mode {
        config.mode = mode.parse::<Mode>()?;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.out {
        config.out_dir = out;
    }
    config.validate()?;

    let results = run(&config)?;
    let n_evals = results.evaluations.len();
    eprintln!(
        "dsesc: wrote {} ({} affinity evaluation{}) to {}",
        dsesc::experiment::RESULTS_FILE,
        n_evals,
        if n_evals == 1 { "" } else { "s" },
        config.out_dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("dsesc: error: {err}");
            let code = match err {
                Error::Config(_)
                | Error::InvalidArgument(_)
                | Error::Parse { .. }
                | Error::Dimension(_)
                | Error::Constraint(_) => 2,
                Error::Training { .. } => 3,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}
