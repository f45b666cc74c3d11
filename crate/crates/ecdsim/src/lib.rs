//! Experiment runner for ECD circuit gradient studies.
//!
//! Each subcommand turns an [`ExperimentConfig`] into a [`Table`]. Numbers
//! depend only on the config and seed: sample `i` of every Monte Carlo loop
//! draws from its own ChaCha8 stream, so the thread count does not matter.

pub mod config;
pub mod experiments;
pub mod output;
pub mod validate;

use ecdsim_core::error::ErrorClass;

pub use config::{Command, ExperimentConfig};
pub use output::{load_csv, load_json, Cell, Table};

/// Environment variable that sets the worker thread count.
pub const THREADS_ENV: &str = "ECDSIM_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] ecdsim_core::Error),
    #[error("i/o: {0}")]
    Io(String),
    #[error("{0} validation check(s) failed")]
    ValidationFailed(usize),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Core(e) => match e.class() {
                ErrorClass::Config => 2,
                ErrorClass::Capacity => 3,
                ErrorClass::Numerical => 4,
            },
            CliError::ValidationFailed(_) => 4,
        }
    }
}

fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["-C", env!("CARGO_MANIFEST_DIR"), "describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

/// Header entries shared by every output file.
pub fn header(cmd: Command, cfg: &ExperimentConfig) -> Vec<(String, String)> {
    let config = serde_json::to_value(cfg).expect("config serialises");
    let config: serde_json::Map<String, serde_json::Value> =
        config.as_object().unwrap().iter().filter(|(_, v)| !v.is_null()).map(|(k, v)| (k.clone(), v.clone())).collect();
    vec![
        ("ecdsim".into(), env!("CARGO_PKG_VERSION").into()),
        ("command".into(), cmd.name().into()),
        ("config".into(), serde_json::Value::Object(config).to_string()),
        ("seed".into(), cfg.seed().to_string()),
        ("git".into(), git_describe()),
        ("timestamp".into(), chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
        (
            "rng".into(),
            "ChaCha8; per-experiment key = 128-bit SplitMix hash of (seed, domain); stream id = sample index".into(),
        ),
    ]
}

/// Runs `cmd` and returns its table with the metadata header filled in.
pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let mut t = match cmd {
        Command::Variance => experiments::variance(cfg)?,
        Command::Correlators => experiments::correlators(cfg)?,
        Command::BoundsMap => experiments::bounds_map(cfg)?,
        Command::RandomVariance => experiments::random_variance(cfg)?,
        Command::Train => experiments::train(cfg)?,
        Command::Validate => validate::run(cfg.seed()),
    };
    let mut meta = header(cmd, cfg);
    meta.append(&mut t.metadata);
    t.metadata = meta;
    Ok(t)
}

/// Writes `t` to the configured output (stdout when unset).
pub fn emit(t: &Table, cfg: &ExperimentConfig) -> Result<(), CliError> {
    let write = |w: &mut dyn std::io::Write| if cfg.is_json() { t.write_json(w) } else { t.write_csv(w) };
    match &cfg.output {
        Some(p) => {
            let mut f = std::io::BufWriter::new(std::fs::File::create(p).map_err(|e| CliError::Io(format!("{p}: {e}")))?);
            write(&mut f)?;
            std::io::Write::flush(&mut f)?;
        }
        None => write(&mut std::io::stdout().lock())?,
    }
    Ok(())
}
