use std::path::PathBuf;
use std::process::ExitCode;

use cfpp::{run, CliError, Command, Overrides, PipelineConfig};
use clap::Parser;

#[derive(Debug, Parser)]
#[command(
    name = "cfpp",
    version,
    about = "Car-following segment analysis and reward recovery"
)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// TOML pipeline configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated LV speeds (m/s) for reward maps.
    #[arg(long, value_delimiter = ',')]
    fixed_speeds: Option<Vec<f64>>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cfpp {}: {e}", args.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(args: &Args) -> Result<Vec<PathBuf>, CliError> {
    let config = match &args.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    let resolved = config.resolve(&Overrides {
        seed: args.seed,
        out: args.out.clone(),
        fixed_speeds: args.fixed_speeds.clone(),
    })?;
    run(args.command, &resolved)
}
