use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ecdsim::{validate, CliError, Command, ExperimentConfig, THREADS_ENV};

/// Gradient-variance experiments for ECD circuits.
///
/// Configuration is read from a flat TOML file and `--set key=value`
/// overrides. Results go to stdout or the `output` key, as CSV with a `#`
/// metadata header or as JSON (`format = "json"`). Block indices `k` are
/// one-based. Set ECDSIM_THREADS to fix the worker count.
#[derive(Parser)]
#[command(name = "ecdsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Monte Carlo gradient variance, bounds and shallow formula over an energy grid
    Variance(Args),
    /// Closed-form and Monte Carlo C1, C2, C3 over energies or mode counts
    Correlators(Args),
    /// log10 variance bounds over a (layers, energy) grid with the crossover depth
    BoundsMap(Args),
    /// Gradient variance for sampled random Fock-space targets
    RandomVariance(Args),
    /// Training histories, one block of rows per seed
    Train(Args),
    /// Quick oracle and invariant checks
    Validate(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML file of flat key = value pairs
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set layers=8` or `--set target=fock:3`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Shorthand for `--set output=PATH`
    #[arg(long, short)]
    output: Option<String>,
    /// Shorthand for `--set format=...`
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v.parse().map_err(|_| CliError::Config(format!("{THREADS_ENV}={v} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let (cmd, args) = match cli.command {
        Sub::Variance(a) => (Command::Variance, a),
        Sub::Correlators(a) => (Command::Correlators, a),
        Sub::BoundsMap(a) => (Command::BoundsMap, a),
        Sub::RandomVariance(a) => (Command::RandomVariance, a),
        Sub::Train(a) => (Command::Train, a),
        Sub::Validate(a) => (Command::Validate, a),
    };
    let mut set = args.set;
    if let Some(o) = args.output {
        set.push(format!("output={}", toml::Value::String(o)));
    }
    if let Some(f) = args.format {
        set.push(format!("format=\"{f}\""));
    }
    let cfg = ExperimentConfig::load(cmd, args.config.as_deref(), &set)?;
    let table = ecdsim::run(cmd, &cfg)?;
    ecdsim::emit(&table, &cfg)?;
    if cmd == Command::Validate {
        let failed = validate::failures(&table);
        if cfg.output.is_some() {
            for r in &table.rows {
                eprintln!("{} {}: {}", r[1], r[0], r[2]);
            }
        }
        if failed > 0 {
            return Err(CliError::ValidationFailed(failed));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ecdsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
