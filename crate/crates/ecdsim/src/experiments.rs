use ecdsim_core::correlators::{c1_closed, c2_closed, c3_closed_gaussian, mc_correlator, CorrelatorKind, EtaMode};
use ecdsim_core::targets::sample_random_target;
use ecdsim_core::trainer::{self, TrainConfig};
use ecdsim_core::variance::{critical_depth, critical_energy, mc_gradient_variance, shallow_variance, variance_bounds};
use ecdsim_core::{EnsembleSpec, Error, SimConfig, TargetSpec};

use crate::config::{with_modes, ExperimentConfig};
use crate::output::{Cell, Table};
use crate::CliError;

/// Quantities that some target families do not define come out as NaN.
fn or_nan(r: ecdsim_core::Result<f64>) -> Result<f64, CliError> {
    match r {
        Ok(x) => Ok(x),
        Err(Error::Unsupported { .. }) => Ok(f64::NAN),
        Err(e) => Err(e.into()),
    }
}

/// Same as [`or_nan`], also for depths where bounds are undefined (L < 2).
fn bound_or_nan(r: ecdsim_core::Result<f64>) -> Result<f64, CliError> {
    match r {
        Err(Error::Invalid(_)) => Ok(f64::NAN),
        r => or_nan(r),
    }
}

fn spec(modes: usize, layers: usize, e: f64) -> Result<EnsembleSpec, CliError> {
    Ok(EnsembleSpec::new(modes, layers, e)?)
}

pub fn variance(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let target = cfg.target_spec("vacuum")?;
    let modes = cfg.modes.unwrap_or(target.modes());
    let layers = cfg.layers.unwrap_or(4);
    let k = cfg.block(modes, layers)?;
    let n = cfg.samples.unwrap_or(1000);
    let backend = cfg.backend()?;
    let sim = SimConfig::default();
    let energies = cfg.energy_grid(&ecdsim_core::stats::log_space(1.0, 1000.0, 10))?;
    let ec = or_nan(critical_energy(layers as f64, &target, EtaMode::Upper))?;

    let mut t = Table::new(&[
        "energy", "samples", "k", "grad_mean", "grad_mean_se", "variance", "variance_se", "lower_bound",
        "upper_bound", "shallow_formula", "critical_energy",
    ]);
    t.meta("target", target.family());
    t.meta("critical_energy", format!("{ec:.16e}"));
    for &e in &energies {
        let v = mc_gradient_variance(&spec(modes, layers, e)?, &target, k, n, backend, cfg.seed(), &sim)?;
        let (lo, hi) = match variance_bounds(modes, layers, &target, e) {
            Ok(b) => (b.lower, b.upper),
            Err(err) => {
                let nan = bound_or_nan(Err(err))?;
                (nan, nan)
            }
        };
        let shallow = or_nan(shallow_variance(modes, layers, &target, e))?;
        t.push(vec![
            e.into(),
            n.into(),
            (k + 1).into(),
            v.mean.into(),
            v.se_mean.into(),
            v.variance.into(),
            v.se_variance.into(),
            lo.into(),
            hi.into(),
            shallow.into(),
            ec.into(),
        ]);
    }
    Ok(t)
}

fn label(k: CorrelatorKind) -> &'static str {
    match k {
        CorrelatorKind::C1 => "C1",
        CorrelatorKind::C2 => "C2",
        CorrelatorKind::C3 => "C3",
    }
}

fn per_mode(v: &Option<Vec<f64>>, default: f64, modes: usize, what: &str) -> Result<Vec<f64>, CliError> {
    match v {
        None => Ok(vec![default; modes]),
        Some(v) if v.len() == 1 => Ok(vec![v[0]; modes]),
        Some(v) if v.len() == modes => Ok(v.clone()),
        Some(_) => Err(CliError::Config(format!("{what} needs one value or one per mode"))),
    }
}

pub fn correlators(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let name = cfg.target.clone().unwrap_or_else(|| "vacuum".into());
    let targets: Vec<TargetSpec> = match &cfg.mode_grid {
        Some(ms) => ms.iter().map(|&m| with_modes(&name, m)).collect::<Result<_, _>>()?,
        None => vec![cfg.target_spec("vacuum")?],
    };
    let energies = cfg.energy_grid(&ecdsim_core::stats::log_space(1.0, 1000.0, 10))?;
    let kinds = cfg.kinds()?;
    let eta = cfg.eta()?;
    let n = cfg.samples.unwrap_or(0);

    let mut t = Table::new(&["modes", "energy", "kind", "closed_form", "mc", "mc_se"]);
    t.meta("eta", format!("{eta:?}"));
    t.meta("samples", if n == 0 { "none (closed forms only)".to_string() } else { n.to_string() });
    for (ti, target) in targets.iter().enumerate() {
        let m = target.modes();
        let z = per_mode(&cfg.z, 0.5, m, "z")?;
        let zt = per_mode(&cfg.zt, 1.0 / 3.0, m, "zt")?;
        for (ei, &e) in energies.iter().enumerate() {
            for (ki, &kind) in kinds.iter().enumerate() {
                let closed = match kind {
                    CorrelatorKind::C1 => or_nan(c1_closed(target, e))?,
                    CorrelatorKind::C2 => or_nan(c2_closed(target, e, &z, eta))?,
                    CorrelatorKind::C3 => or_nan(c3_closed_gaussian(target, e, &z, &zt))?,
                };
                let (mc, se) = if n == 0 {
                    (f64::NAN, f64::NAN)
                } else {
                    // one stream per grid point, fixed by its position
                    let point = ((ti * energies.len() + ei) * kinds.len() + ki) as u64;
                    let est = mc_correlator(kind, target, e, &z, &zt, n, cfg.seed().wrapping_add(point))?;
                    (est.value, est.std_error)
                };
                t.push(vec![m.into(), e.into(), label(kind).into(), closed.into(), mc.into(), se.into()]);
            }
        }
    }
    Ok(t)
}

pub fn bounds_map(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let target = cfg.target_spec("vacuum")?;
    let modes = cfg.modes.unwrap_or(target.modes());
    let layers = cfg.layer_grid.clone().unwrap_or_else(|| (2..=20).collect());
    let energies = cfg.energy_grid(&ecdsim_core::stats::log_space(1.0, 1e4, 25))?;

    let mut t = Table::new(&["layers", "energy", "log10_upper", "log10_lower", "critical_depth"]);
    t.meta("contour", "critical_depth is the crossover depth at each energy; L below it is the shallow regime");
    for &l in &layers {
        for &e in &energies {
            let b = variance_bounds(modes, l, &target, e)?;
            let lc = or_nan(critical_depth(e, &target, EtaMode::Upper))?;
            t.push(vec![l.into(), e.into(), b.upper.log10().into(), b.lower.log10().into(), lc.into()]);
        }
    }
    Ok(t)
}

pub fn random_variance(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let tm = cfg.target_modes.unwrap_or(1);
    let layers = cfg.layers.unwrap_or(4);
    let k = cfg.block(tm, layers)?;
    let n = cfg.samples.unwrap_or(1000);
    let backend = cfg.backend()?;
    let count = cfg.target_count.unwrap_or(5);
    let eps = cfg.epsilon.unwrap_or(0.1);
    let rule = cfg.window()?;
    let sim = SimConfig::default();
    let target_energies = cfg.target_energy.clone().unwrap_or_else(|| vec![2.0, 6.0]);

    let mut t = Table::new(&[
        "target_energy", "target_index", "target_seed", "target_cutoff", "actual_energy", "energy", "variance",
        "variance_se", "grad_mean", "grad_mean_se",
    ]);
    t.meta("target_seeds", "seed + target_index");
    t.meta("window", format!("{rule:?}, half-width {eps}"));
    for &et in &target_energies {
        let cutoff = cfg.target_cutoff.unwrap_or((2.0 * et).ceil() as usize);
        let energies = cfg.energy_grid(&ecdsim_core::stats::log_space(et.max(0.5), 20.0 * et.max(0.5), 8))?;
        for j in 0..count {
            let ts = cfg.seed().wrapping_add(j as u64);
            let expansion = sample_random_target(tm, et, eps, cutoff, ts, rule)?;
            let actual = expansion.energy_per_mode().iter().sum::<f64>() / tm as f64;
            let target = TargetSpec::RandomFock(expansion);
            for &e in &energies {
                let v = mc_gradient_variance(&spec(tm, layers, e)?, &target, k, n, backend, cfg.seed(), &sim)?;
                t.push(vec![
                    et.into(),
                    j.into(),
                    ts.into(),
                    cutoff.into(),
                    actual.into(),
                    e.into(),
                    v.variance.into(),
                    v.se_variance.into(),
                    v.mean.into(),
                    v.se_mean.into(),
                ]);
            }
        }
    }
    Ok(t)
}

pub fn train(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let target = cfg.target_spec("fock:2")?;
    let modes = cfg.modes.unwrap_or(target.modes());
    let e = cfg.energy.unwrap_or_else(|| target.energy_per_mode().iter().cloned().fold(1.0, f64::max));
    let mut tc = TrainConfig::new(spec(modes, cfg.layers.unwrap_or(10), e)?, target);
    if let Some(s) = cfg.steps {
        tc.steps = s;
    }
    tc.optimizer = cfg.optimizer()?;
    if let Some(lr) = cfg.learning_rate {
        tc.learning_rate = lr;
    }
    if let Some(h) = cfg.fd_step {
        tc.beta_fd_step = h;
    }
    if cfg.backend.is_some() || cfg.cutoff.is_some() {
        tc.backend = cfg.backend()?;
    }
    tc.freeze_beta = cfg.freeze_beta.unwrap_or(false);
    if let Some(s) = &cfg.seeds {
        tc.seeds = s.clone();
    }
    let histories = trainer::train(&tc, &SimConfig::default())?;

    let mut cols = vec!["step".to_string(), "infidelity".into()];
    cols.extend((0..modes).map(|j| format!("state_energy_mode_{j}")));
    cols.extend(["circuit_energy".into(), "seed".into()]);
    let mut t = Table { columns: cols, ..Table::default() };
    t.meta("initial_energy", e);
    t.meta("median_final_infidelity", format!("{:.16e}", trainer::median_final_infidelity(&histories)));
    for h in &histories {
        let c = h.cutoff.map_or("none".to_string(), |c| c.to_string());
        t.meta(&format!("seed_{}", h.seed), format!("final cutoff {c}, circuit-energy drift {:.6}", h.circuit_energy_drift()));
    }
    for h in &histories {
        for (step, r) in h.records.iter().enumerate() {
            let mut row: Vec<Cell> = vec![step.into(), r.infidelity.into()];
            row.extend(r.state_energy.iter().map(|&x| Cell::from(x)));
            row.push(r.circuit_energy.iter().sum::<f64>().into());
            row.push(h.seed.into());
            t.push(row);
        }
    }
    Ok(t)
}
