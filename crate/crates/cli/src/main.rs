use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gabor_fio_cli::{run, CliError, Command, ConfigSource, ExperimentConfig};

/// Gabor-frame experiments on Fourier integral operators.
///
/// Worker threads default to the number of CPUs; set GFIO_THREADS to override.
#[derive(Debug, Parser)]
#[command(name = "gfio", version)]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment config; every field has a default.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Override grid.n.
    #[arg(long, global = true)]
    grid_n: Option<usize>,
    /// Override the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

fn load(args: &Args) -> Result<(ExperimentConfig, ConfigSource), CliError> {
    let mut source = ConfigSource::default();
    let mut config = match &args.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let config = ExperimentConfig::parse(&text)?;
            source = ConfigSource { path: Some(path.clone()), text: Some(text) };
            config
        }
        None => ExperimentConfig::default(),
    };
    if let Some(n) = args.grid_n {
        config.grid.n = n;
    }
    if let Some(out) = &args.out {
        config.out = out.clone();
    }
    Ok((config, source))
}

fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("GFIO_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("GFIO_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result =
        init_threads().and_then(|_| load(&args)).and_then(|(config, source)| run(&args.command, &config, &source));
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("gfio: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
