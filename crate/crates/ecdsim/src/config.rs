//! Flat key-value experiment configuration.
//!
//! A config is a TOML file of top-level keys, optionally overridden by
//! `--set key=value` pairs. Keys that are unknown, or that the chosen
//! subcommand does not read, are rejected before anything runs.

use std::collections::BTreeSet;
use std::path::Path;

use ecdsim_core::correlators::{CorrelatorKind, EtaMode};
use ecdsim_core::gaussian::random_distributed_squeezed;
use ecdsim_core::stats::log_space;
use ecdsim_core::targets::WindowRule;
use ecdsim_core::trainer::Optimizer;
use ecdsim_core::variance::Backend;
use ecdsim_core::{OneModeGaussianParams, TargetSpec, C64};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Variance,
    Correlators,
    BoundsMap,
    RandomVariance,
    Train,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Variance => "variance",
            Command::Correlators => "correlators",
            Command::BoundsMap => "bounds-map",
            Command::RandomVariance => "random-variance",
            Command::Train => "train",
            Command::Validate => "validate",
        }
    }

    fn allowed(self) -> &'static [&'static str] {
        match self {
            Command::Variance => &[
                "output", "format", "energy", "energies", "e_min", "e_max", "e_points", "modes", "layers", "target",
                "samples", "k", "seed", "backend", "cutoff",
            ],
            Command::Correlators => &[
                "output", "format", "energy", "energies", "e_min", "e_max", "e_points", "target", "kinds", "z", "zt",
                "eta", "samples", "seed", "mode_grid",
            ],
            Command::BoundsMap => {
                &["output", "format", "energy", "energies", "e_min", "e_max", "e_points", "target", "modes", "layer_grid"]
            }
            Command::RandomVariance => &[
                "output", "format", "energy", "energies", "e_min", "e_max", "e_points", "layers", "samples", "k",
                "seed", "backend", "cutoff", "target_modes", "target_energy", "target_count", "epsilon",
                "target_cutoff", "window",
            ],
            Command::Train => &[
                "output", "format", "modes", "layers", "energy", "target", "steps", "optimizer", "learning_rate",
                "fd_step", "backend", "cutoff", "freeze_beta", "seeds",
            ],
            Command::Validate => &["output", "format", "seed"],
        }
    }
}

/// Every recognised key; `None` means "use the default".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output: Option<String>,
    pub format: Option<String>,
    pub modes: Option<usize>,
    pub layers: Option<usize>,
    pub energy: Option<f64>,
    pub energies: Option<Vec<f64>>,
    pub e_min: Option<f64>,
    pub e_max: Option<f64>,
    pub e_points: Option<usize>,
    pub target: Option<String>,
    pub samples: Option<usize>,
    /// One-based block index.
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub backend: Option<String>,
    pub cutoff: Option<usize>,
    pub kinds: Option<Vec<String>>,
    pub z: Option<Vec<f64>>,
    pub zt: Option<Vec<f64>>,
    pub eta: Option<String>,
    pub mode_grid: Option<Vec<usize>>,
    pub layer_grid: Option<Vec<usize>>,
    pub target_modes: Option<usize>,
    pub target_energy: Option<Vec<f64>>,
    pub target_count: Option<usize>,
    pub epsilon: Option<f64>,
    pub target_cutoff: Option<usize>,
    pub window: Option<String>,
    pub steps: Option<usize>,
    pub optimizer: Option<String>,
    pub learning_rate: Option<f64>,
    pub fd_step: Option<f64>,
    pub freeze_beta: Option<bool>,
    pub seeds: Option<Vec<u64>>,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses one `key=value` override. The value is read as a TOML value and
/// falls back to a bare string.
fn parse_override(item: &str) -> Result<(String, toml::Value), CliError> {
    let (k, v) = item.split_once('=').ok_or_else(|| bad(format!("override `{item}` is not key=value")))?;
    let (k, v) = (k.trim(), v.trim());
    let value = match format!("x = {v}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("x").unwrap(),
        Err(_) => toml::Value::String(v.to_string()),
    };
    Ok((k.to_string(), value))
}

impl ExperimentConfig {
    /// Merges a config file with overrides and checks the key set against
    /// `cmd`.
    pub fn load(cmd: Command, file: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig, CliError> {
        let mut table = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| bad(format!("{}: {e}", p.display())))?;
                text.parse::<toml::Table>().map_err(|e| bad(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            let (k, v) = parse_override(o)?;
            table.insert(k, v);
        }
        // integers are accepted wherever a float is expected
        let cfg: ExperimentConfig =
            toml::Value::Table(table.clone()).try_into().map_err(|e: toml::de::Error| bad(e.message().to_string()))?;
        let allowed: BTreeSet<&str> = cmd.allowed().iter().copied().collect();
        let unused: Vec<&String> = table.keys().filter(|k| !allowed.contains(k.as_str())).collect();
        if !unused.is_empty() {
            return Err(bad(format!("keys not used by `{}`: {unused:?}", cmd.name())));
        }
        cfg.check_values()?;
        Ok(cfg)
    }

    fn check_values(&self) -> Result<(), CliError> {
        if let Some(f) = &self.format {
            if f != "csv" && f != "json" {
                return Err(bad("format must be csv or json"));
            }
        }
        if self.energies.is_some() as u8 + self.energy.is_some() as u8 + self.e_min.is_some() as u8 > 1 {
            return Err(bad("give only one of energy, energies and e_min/e_max"));
        }
        if self.e_min.is_some() != self.e_max.is_some() {
            return Err(bad("e_min and e_max go together"));
        }
        if self.e_points.is_some() && self.e_min.is_none() {
            return Err(bad("e_points needs e_min and e_max"));
        }
        if self.k == Some(0) {
            return Err(bad("k is one-based"));
        }
        if let Some(t) = &self.target {
            parse_target(t)?;
        }
        self.backend()?;
        self.kinds()?;
        self.eta()?;
        self.window()?;
        self.optimizer()?;
        Ok(())
    }

    pub fn is_json(&self) -> bool {
        self.format.as_deref() == Some("json")
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn energy_grid(&self, default: &[f64]) -> Result<Vec<f64>, CliError> {
        let grid = if let Some(e) = self.energy {
            vec![e]
        } else if let Some(v) = &self.energies {
            v.clone()
        } else if let (Some(a), Some(b)) = (self.e_min, self.e_max) {
            let n = self.e_points.unwrap_or(8);
            if !(a > 0.0 && b >= a && n >= 1) {
                return Err(bad("need 0 < e_min ≤ e_max and e_points ≥ 1"));
            }
            log_space(a, b, n)
        } else {
            default.to_vec()
        };
        if grid.is_empty() || grid.iter().any(|e| !e.is_finite() || *e <= 0.0) {
            return Err(bad("energies must be positive and finite"));
        }
        Ok(grid)
    }

    pub fn target_spec(&self, default: &str) -> Result<TargetSpec, CliError> {
        parse_target(self.target.as_deref().unwrap_or(default))
    }

    /// Branch unless `backend = "fock"` or a cutoff is given.
    pub fn backend(&self) -> Result<Backend, CliError> {
        let default = if self.cutoff.is_some() { "fock" } else { "branch" };
        match self.backend.as_deref().unwrap_or(default) {
            "branch" if self.cutoff.is_some() => Err(bad("cutoff applies to the fock backend only")),
            "branch" => Ok(Backend::Branch),
            "fock" => Ok(Backend::Fock { cutoff: self.cutoff }),
            other => Err(bad(format!("unknown backend `{other}`"))),
        }
    }

    /// Zero-based block index; the default is `⌈ML/2⌉`.
    pub fn block(&self, modes: usize, layers: usize) -> Result<usize, CliError> {
        match self.k {
            None => Ok(ecdsim_core::variance::default_k(modes, layers)),
            Some(k) if k <= modes * layers => Ok(k - 1),
            Some(k) => Err(bad(format!("k = {k} exceeds ML = {}", modes * layers))),
        }
    }

    pub fn kinds(&self) -> Result<Vec<CorrelatorKind>, CliError> {
        let Some(ks) = &self.kinds else { return Ok(vec![CorrelatorKind::C1, CorrelatorKind::C2, CorrelatorKind::C3]) };
        ks.iter()
            .map(|k| match k.to_ascii_lowercase().as_str() {
                "c1" => Ok(CorrelatorKind::C1),
                "c2" => Ok(CorrelatorKind::C2),
                "c3" => Ok(CorrelatorKind::C3),
                other => Err(bad(format!("unknown correlator `{other}`"))),
            })
            .collect()
    }

    pub fn eta(&self) -> Result<EtaMode, CliError> {
        match self.eta.as_deref().unwrap_or("upper") {
            "upper" => Ok(EtaMode::Upper),
            "lower" => Ok(EtaMode::Lower),
            other => Err(bad(format!("eta must be lower or upper, not `{other}`"))),
        }
    }

    pub fn window(&self) -> Result<WindowRule, CliError> {
        match self.window.as_deref().unwrap_or("mean") {
            "mean" => Ok(WindowRule::Mean),
            "each" => Ok(WindowRule::EachMode),
            other => Err(bad(format!("window must be mean or each, not `{other}`"))),
        }
    }

    pub fn optimizer(&self) -> Result<Optimizer, CliError> {
        match self.optimizer.as_deref().unwrap_or("adam") {
            "adam" => Ok(Optimizer::default()),
            "sgd" => Ok(Optimizer::PlainSgd),
            other => Err(bad(format!("optimizer must be adam or sgd, not `{other}`"))),
        }
    }
}

fn numbers(s: &str, n: usize, what: &str) -> Result<Vec<f64>, CliError> {
    let v: Result<Vec<f64>, _> = s.split(',').map(|x| x.trim().parse::<f64>()).collect();
    match v {
        Ok(v) if v.len() == n => Ok(v),
        _ => Err(bad(format!("{what} takes {n} comma-separated numbers, got `{s}`"))),
    }
}

/// Target grammar, factors joined by `*` form a product state:
///
/// ```text
/// vacuum | coherent:RE,IM | dsv:RE,IM,ZETA | gaussian:RE,IM,TAU,ZETA
/// fock:N | tmsv:ZETA | squeezed:M,R,SEED
/// ```
pub fn parse_target(s: &str) -> Result<TargetSpec, CliError> {
    if s.contains('*') {
        let parts: Result<Vec<_>, _> = s.split('*').map(|p| parse_target(p.trim())).collect();
        let t = TargetSpec::Product(parts?);
        t.validate().map_err(|e| bad(e.to_string()))?;
        return Ok(t);
    }
    let (name, args) = s.split_once(':').unwrap_or((s, ""));
    let t = match name.trim() {
        "vacuum" => TargetSpec::vacuum(),
        "coherent" => {
            let v = numbers(args, 2, "coherent")?;
            TargetSpec::coherent(C64::new(v[0], v[1]))
        }
        "dsv" => {
            let v = numbers(args, 3, "dsv")?;
            TargetSpec::dsv(C64::new(v[0], v[1]), v[2])
        }
        "gaussian" => {
            let v = numbers(args, 4, "gaussian")?;
            TargetSpec::OneModeGaussian(OneModeGaussianParams::new(C64::new(v[0], v[1]), v[2], v[3]))
        }
        "fock" => TargetSpec::Fock(args.trim().parse().map_err(|_| bad(format!("fock needs a photon number, got `{args}`")))?),
        "tmsv" => TargetSpec::Tmsv(numbers(args, 1, "tmsv")?[0]),
        "squeezed" => {
            let v = numbers(args, 3, "squeezed")?;
            if v[0] < 1.0 || v[0].fract() != 0.0 || v[2] < 0.0 || v[2].fract() != 0.0 {
                return Err(bad("squeezed:M,R,SEED needs integer M ≥ 1 and SEED ≥ 0"));
            }
            let g = random_distributed_squeezed(v[0] as usize, v[1], v[2] as u64).map_err(|e| bad(e.to_string()))?;
            TargetSpec::MultiModeGaussian(g)
        }
        other => return Err(bad(format!("unknown target family `{other}`"))),
    };
    t.validate().map_err(|e| bad(e.to_string()))?;
    Ok(t)
}

/// Squeezed target with a different number of modes, for mode sweeps.
pub fn with_modes(target: &str, modes: usize) -> Result<TargetSpec, CliError> {
    let args = target
        .strip_prefix("squeezed:")
        .ok_or_else(|| bad("mode_grid needs a squeezed:M,R,SEED target"))?;
    let v = numbers(args, 3, "squeezed")?;
    parse_target(&format!("squeezed:{modes},{},{}", v[1], v[2]))
}
