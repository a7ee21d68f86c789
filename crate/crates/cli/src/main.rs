use calderon_cli::config::{parse_config, ExperimentConfig};
use calderon_cli::run::{run, CliError, Command};
use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "calderon", version, about = "Fractional semilinear Calderón experiments in 1D")]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON configuration; the built-in minimal problem when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` from the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
}

fn execute(args: &Args) -> Result<(), CliError> {
    let (config, bytes) = match &args.config {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|source| CliError::Read { path: path.clone(), source })?;
            let text = String::from_utf8_lossy(&bytes);
            (parse_config(&text)?, bytes)
        }
        None => {
            let config = ExperimentConfig::minimal();
            let bytes = config.to_json().into_bytes();
            (config, bytes)
        }
    };
    let outcome = run(args.command, &config, &bytes)?;
    let dir = args.out.clone().unwrap_or_else(|| config.output_dir.clone());
    outcome.artifacts.write_to(&dir).map_err(CliError::Write)?;
    if !args.quiet {
        for name in &outcome.artifacts.manifest.outputs {
            println!("{}", dir.join(name).display());
        }
        println!("{}", dir.join("manifest.json").display());
    }
    if outcome.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invariants(outcome.failures))
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
