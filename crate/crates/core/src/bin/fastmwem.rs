use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::{error, info, warn};

use fastmwem::harness::{emit_csv, run_experiment, Experiment, ExperimentConfig};

/// Runs a private query-release or LP-solving experiment and writes its
/// measurements as CSV.
#[derive(Debug, Parser)]
#[command(name = "fastmwem", version)]
struct Cli {
    experiment: Experiment,
    /// JSON experiment configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path (standard output when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the large default grids instead of the desk-sized ones.
    #[arg(long)]
    paper_scale: bool,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, String> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            ExperimentConfig::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(e) = config.experiment.filter(|&e| e != cli.experiment) {
        warn!("config names experiment {e}; running {} as requested", cli.experiment);
    }
    config.experiment = Some(cli.experiment);
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.paper_scale |= cli.paper_scale;
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let config = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            error!("invalid configuration: {e}");
            return ExitCode::from(2);
        }
    };
    info!("running {} (config {})", cli.experiment, config.hash());
    let result = run_experiment(&config).and_then(|rows| {
        let sink: Box<dyn Write> = match &cli.out {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(io::stdout().lock()),
        };
        emit_csv(&rows, sink)?;
        Ok(rows.len())
    });
    match result {
        Ok(n) => {
            info!("wrote {n} records");
            ExitCode::SUCCESS
        }
        Err(e) => {
            error!("{e}");
            ExitCode::from(1)
        }
    }
}
