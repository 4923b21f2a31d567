//! Experiment driver: each subcommand runs one experiment from an
//! [`ExperimentConfig`] and writes its CSV/JSON artifacts plus `manifest.json`.

pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

pub use commands::Command;
pub use config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Module(#[from] gabor_fio::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("acceptance criterion {0} failed")]
    CriterionFailed(usize),
}

impl CliError {
    /// 2 for configuration errors, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use gabor_fio::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Module(e) if e.is_numerical() => 3,
            CliError::Module(E::InvalidInput(_) | E::UnknownOperator(_) | E::GridMismatch(_)) => 2,
            _ => 1,
        }
    }
}

/// A file produced by a run, written under the output directory.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn json<T: Serialize>(name: &str, value: &T) -> Artifact {
        let mut bytes = serde_json::to_vec_pretty(value).expect("artifact serializes");
        bytes.push(b'\n');
        Artifact { name: name.to_string(), bytes }
    }

    pub fn text(name: &str, bytes: Vec<u8>) -> Artifact {
        Artifact { name: name.to_string(), bytes }
    }
}

#[derive(Debug, Serialize)]
struct Versions {
    gfio: &'static str,
    gabor_fio: &'static str,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_path: Option<&'a Path>,
    /// The config file exactly as read.
    config_text: Option<&'a str>,
    /// The configuration after defaults and overrides.
    config: &'a ExperimentConfig,
    versions: Versions,
    artifacts: Vec<&'a str>,
    /// The only field that differs between identical runs.
    wall_clock_seconds: f64,
}

/// Where the config came from, for the manifest.
#[derive(Debug, Clone, Default)]
pub struct ConfigSource {
    pub path: Option<PathBuf>,
    pub text: Option<String>,
}

/// Runs `command`, then writes its artifacts and the manifest into `config.out`.
/// Returns the paths written. Nothing is written when a module fails; a failed
/// acceptance criterion still writes its verdict before reporting the failure.
pub fn run(command: &Command, config: &ExperimentConfig, source: &ConfigSource) -> Result<Vec<PathBuf>, CliError> {
    config.validate()?;
    let start = Instant::now();
    let outcome = commands::execute(command, config)?;
    let manifest = Manifest {
        command: command.name(),
        config_path: source.path.as_deref(),
        config_text: source.text.as_deref(),
        config,
        versions: Versions { gfio: env!("CARGO_PKG_VERSION"), gabor_fio: gabor_fio::VERSION },
        artifacts: outcome.artifacts.iter().map(|a| a.name.as_str()).collect(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    let manifest = Artifact::json("manifest.json", &manifest);
    std::fs::create_dir_all(&config.out)?;
    let mut written = Vec::new();
    for a in outcome.artifacts.iter().chain(std::iter::once(&manifest)) {
        let path = config.out.join(&a.name);
        std::fs::write(&path, &a.bytes)?;
        written.push(path);
    }
    match outcome.failed_criterion {
        Some(n) => Err(CliError::CriterionFailed(n)),
        None => Ok(written),
    }
}
