//! Gradient-based state preparation: rotation angles by shift rules,
//! displacements by central finite differences.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

use crate::circuit::{self, sample_circuit, CircuitParams, EnsembleSpec};
use crate::error::{invalid, Error, Result};
use crate::fock::{default_cutoff, run_circuit_fock, FockSweep};
use crate::math;
use crate::rng::{self, domain};
use crate::stats;
use crate::targets::{auto_cutoff, fock_expand, FockExpansion, PreparedTarget, TargetSpec};
use crate::variance::Backend;
use crate::{SimConfig, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Optimizer {
    PlainSgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    /// Initialization ensemble.
    pub spec: EnsembleSpec,
    pub target: TargetSpec,
    pub steps: usize,
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub beta_fd_step: f64,
    pub backend: Backend,
    pub freeze_beta: bool,
    pub seeds: Vec<u64>,
}

impl TrainConfig {
    pub fn new(spec: EnsembleSpec, target: TargetSpec) -> TrainConfig {
        TrainConfig {
            spec,
            target,
            steps: 200,
            optimizer: Optimizer::default(),
            learning_rate: 0.01,
            beta_fd_step: 1e-5,
            backend: Backend::Fock { cutoff: None },
            freeze_beta: false,
            seeds: vec![0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(invalid("steps must be at least 1"));
        }
        if self.learning_rate < 0.0 || !self.learning_rate.is_finite() {
            return Err(invalid("learning rate must be finite and non-negative"));
        }
        if self.beta_fd_step.is_nan() || self.beta_fd_step <= 0.0 {
            return Err(invalid("beta_fd_step must be positive"));
        }
        if self.target.modes() != self.spec.modes {
            return Err(invalid("target and ensemble mode counts differ"));
        }
        if self.seeds.is_empty() {
            return Err(invalid("no seeds given"));
        }
        self.target.validate()
    }

    /// Starting point of the cutoff search for `Backend::Fock { cutoff: None }`.
    /// Also large enough for the target expansion to meet the leak bound.
    pub fn base_cutoff(&self, sim: &SimConfig) -> Result<usize> {
        let et = self.target.energy_per_mode().iter().cloned().fold(0.0, f64::max);
        let t = auto_cutoff(&self.target, sim.fock_leak_bound, MAX_TRAIN_CUTOFF)?;
        Ok(default_cutoff(self.spec.energy.max(et)).max(t))
    }
}

/// Largest cutoff [`training_cutoff`] will try.
pub const MAX_TRAIN_CUTOFF: usize = 4000;

/// Smallest cutoff on the grid `c₀, ⌈1.25c₀⌉, …` at which the initial
/// circuit leaks at most `bound / 100`, leaving room for the displacements
/// to grow during training.
pub fn training_cutoff(init: &CircuitParams, start: usize, sim: &SimConfig) -> Result<usize> {
    let probe = SimConfig { fock_leak_bound: f64::INFINITY, ..*sim };
    let goal = sim.fock_leak_bound / 100.0;
    let mut c = start.max(1);
    loop {
        let leak = run_circuit_fock(init, c, &probe)?.leak;
        if leak <= goal {
            return Ok(c);
        }
        if c >= MAX_TRAIN_CUTOFF {
            return Err(Error::Leak { leak, bound: goal });
        }
        c = (math::ceil(c as f64 * 1.25) as usize).min(MAX_TRAIN_CUTOFF);
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepRecord {
    pub infidelity: f64,
    pub state_energy: Vec<f64>,
    /// `Σ_ℓ |β_{ℓ,j}|²` per mode.
    pub circuit_energy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainHistory {
    pub seed: u64,
    /// Final Fock cutoff (automatic cutoffs grow when the state outgrows
    /// them), `None` for the branch backend.
    pub cutoff: Option<usize>,
    /// `steps + 1` entries; entry 0 is the initial circuit.
    pub records: Vec<StepRecord>,
    pub initial: CircuitParams,
    pub final_params: CircuitParams,
}

impl TrainHistory {
    pub fn final_infidelity(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.infidelity)
    }

    /// Relative change of the total circuit energy between the first and
    /// last record.
    pub fn circuit_energy_drift(&self) -> f64 {
        let total = |r: &StepRecord| r.circuit_energy.iter().sum::<f64>();
        let (a, b) = (total(&self.records[0]), total(self.records.last().unwrap()));
        if a == 0.0 {
            return if b == 0.0 { 0.0 } else { f64::INFINITY };
        }
        (b - a).abs() / a
    }
}

enum Model {
    Fock { target: FockExpansion, cutoff: usize },
    Branch { target: PreparedTarget },
}

struct Eval {
    amplitude: C64,
    state_energy: Vec<f64>,
    grad: Vec<f64>,
}

const DIVERGENCE: f64 = 1e-6;

/// `df/dφ` from shifted differences for a function with frequencies 1 and
/// 2 in the angle; `d(x) = (f(φ+x) − f(φ−x))/2`.
fn two_frequency_shift(d_half: f64, d_quarter: f64) -> f64 {
    (1.0 - SQRT_2) * d_half + 2.0 * d_quarter
}

impl Model {
    fn new(cfg: &TrainConfig, cutoff: Option<usize>, sim: &SimConfig) -> Result<Model> {
        match cutoff {
            Some(c) => Ok(Model::Fock { target: fock_expand(&cfg.target, c, sim.fock_leak_bound)?, cutoff: c }),
            None => Ok(Model::Branch { target: PreparedTarget::auto(&cfg.target, sim)? }),
        }
    }

    /// Amplitude, output energy and the cost gradient in the flat layout
    /// `[θ…, φ…, Re β…, Im β…]`.
    fn eval(&self, p: &CircuitParams, h: f64, with_beta: bool, sim: &SimConfig) -> Result<Eval> {
        let kk = p.blocks();
        let mut grad = vec![0.0; 4 * kk];
        match self {
            Model::Fock { target, cutoff } => {
                let sw = FockSweep::new(p, target, *cutoff, sim)?;
                for k in 0..kk {
                    let (t, f) = (p.thetas[k], p.phis[k]);
                    let c = |t: f64, f: f64| sw.amplitude_rotation(k, t, f).norm_sqr();
                    grad[k] = 0.5 * (c(t + FRAC_PI_2, f) - c(t - FRAC_PI_2, f));
                    let dh = 0.5 * (c(t, f + FRAC_PI_2) - c(t, f - FRAC_PI_2));
                    let dq = 0.5 * (c(t, f + FRAC_PI_4) - c(t, f - FRAC_PI_4));
                    grad[kk + k] = two_frequency_shift(dh, dq);
                    if with_beta {
                        let b = p.betas[k];
                        let cb = |db: C64| sw.amplitude_beta(k, t, f, b + db).norm_sqr();
                        grad[2 * kk + k] = (cb(C64::new(h, 0.0)) - cb(C64::new(-h, 0.0))) / (2.0 * h);
                        grad[3 * kk + k] = (cb(C64::new(0.0, h)) - cb(C64::new(0.0, -h))) / (2.0 * h);
                    }
                }
                Ok(Eval { amplitude: sw.amplitude(), state_energy: sw.output().energy_per_mode(), grad })
            }
            Model::Branch { target } => {
                let cost = |q: &CircuitParams| -> Result<f64> {
                    Ok(circuit::overlap_prepared(&circuit::run_circuit(q, sim)?, target)?.norm_sqr())
                };
                let mut q = p.clone();
                for k in 0..kk {
                    let t = p.thetas[k];
                    q.thetas[k] = t + FRAC_PI_2;
                    let a = cost(&q)?;
                    q.thetas[k] = t - FRAC_PI_2;
                    grad[k] = 0.5 * (a - cost(&q)?);
                    q.thetas[k] = t;
                    let f = p.phis[k];
                    let mut shifted = |x: f64| -> Result<f64> {
                        q.phis[k] = f + x;
                        let a = cost(&q)?;
                        q.phis[k] = f - x;
                        let b = cost(&q)?;
                        q.phis[k] = f;
                        Ok(0.5 * (a - b))
                    };
                    let dh = shifted(FRAC_PI_2)?;
                    let dq = shifted(FRAC_PI_4)?;
                    grad[kk + k] = two_frequency_shift(dh, dq);
                    if with_beta {
                        let b = p.betas[k];
                        for (slot, unit) in [(2 * kk + k, C64::new(h, 0.0)), (3 * kk + k, C64::new(0.0, h))] {
                            q.betas[k] = b + unit;
                            let a = cost(&q)?;
                            q.betas[k] = b - unit;
                            grad[slot] = (a - cost(&q)?) / (2.0 * h);
                            q.betas[k] = b;
                        }
                    }
                }
                let s = circuit::run_circuit(p, sim)?;
                let amplitude = circuit::overlap_prepared(&s, target)?;
                let state_energy = circuit::state_energy(&s);
                Ok(Eval { amplitude, state_energy, grad })
            }
        }
    }
}

struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

fn apply_update(p: &mut CircuitParams, grad_infid: &[f64], opt: Optimizer, lr: f64, mom: &mut Moments, with_beta: bool) {
    let kk = p.blocks();
    let step: Vec<f64> = match opt {
        Optimizer::PlainSgd => grad_infid.iter().map(|g| lr * g).collect(),
        Optimizer::Adam { beta1, beta2, eps } => {
            mom.t += 1;
            let c1 = 1.0 - math::powi(beta1, mom.t);
            let c2 = 1.0 - math::powi(beta2, mom.t);
            grad_infid
                .iter()
                .enumerate()
                .map(|(i, &g)| {
                    mom.m[i] = beta1 * mom.m[i] + (1.0 - beta1) * g;
                    mom.v[i] = beta2 * mom.v[i] + (1.0 - beta2) * g * g;
                    lr * (mom.m[i] / c1) / (math::sqrt(mom.v[i] / c2) + eps)
                })
                .collect()
        }
    };
    for k in 0..kk {
        p.thetas[k] -= step[k];
        p.phis[k] -= step[kk + k];
        if with_beta {
            p.betas[k] -= C64::new(step[2 * kk + k], step[3 * kk + k]);
        }
    }
}

/// Initial circuit for `seed`: one draw from the ensemble on the
/// training-initialization stream.
pub fn initial_circuit(spec: &EnsembleSpec, seed: u64) -> CircuitParams {
    let mut r = rng::stream(seed, domain::TRAIN_INIT, 0);
    sample_circuit(spec, &mut r)
}

/// Trains from the given circuit.
pub fn train_from(cfg: &TrainConfig, init: CircuitParams, seed: u64, sim: &SimConfig) -> Result<TrainHistory> {
    cfg.validate()?;
    let adaptive = cfg.backend == Backend::Fock { cutoff: None };
    let mut cutoff = match cfg.backend {
        Backend::Branch => None,
        Backend::Fock { cutoff: Some(c) } => Some(c),
        Backend::Fock { cutoff: None } => Some(training_cutoff(&init, cfg.base_cutoff(sim)?, sim)?),
    };
    let mut model = Model::new(cfg, cutoff, sim)?;
    let with_beta = !cfg.freeze_beta;
    let mut p = init.clone();
    let n = 4 * p.blocks();
    let mut mom = Moments { m: vec![0.0; n], v: vec![0.0; n], t: 0 };
    let mut records = Vec::with_capacity(cfg.steps + 1);
    for step in 0..=cfg.steps {
        let last = step == cfg.steps;
        let ev = loop {
            match model.eval(&p, cfg.beta_fd_step, with_beta && !last, sim) {
                Err(Error::Leak { .. }) if adaptive && cutoff.is_some_and(|c| c < MAX_TRAIN_CUTOFF) => {
                    // the displacements outgrew the cutoff
                    let c = cutoff.unwrap();
                    let grown = (math::ceil(c as f64 * 1.25) as usize).min(MAX_TRAIN_CUTOFF);
                    cutoff = Some(training_cutoff(&p, grown, sim)?);
                    model = Model::new(cfg, cutoff, sim)?;
                }
                other => break other?,
            }
        };
        let infidelity = 1.0 - ev.amplitude.norm_sqr();
        if !infidelity.is_finite() || !(-DIVERGENCE..=1.0 + DIVERGENCE).contains(&infidelity) {
            return Err(Error::Numerical(alloc::format!("infidelity {infidelity} at step {step}")));
        }
        records.push(StepRecord { infidelity, state_energy: ev.state_energy, circuit_energy: p.circuit_energy() });
        if last {
            break;
        }
        let g: Vec<f64> = ev.grad.iter().map(|g| -g).collect();
        apply_update(&mut p, &g, cfg.optimizer, cfg.learning_rate, &mut mom, with_beta);
    }
    Ok(TrainHistory { seed, cutoff, records, initial: init, final_params: p })
}

pub fn train_seed(cfg: &TrainConfig, seed: u64, sim: &SimConfig) -> Result<TrainHistory> {
    train_from(cfg, initial_circuit(&cfg.spec, seed), seed, sim)
}

/// One history per seed, in seed order.
pub fn train(cfg: &TrainConfig, sim: &SimConfig) -> Result<Vec<TrainHistory>> {
    cfg.validate()?;
    let out = stats::map_indexed(cfg.seeds.len(), |i| train_seed(cfg, cfg.seeds[i], sim));
    out.into_iter().collect()
}

/// Seed average of each step's record.
pub fn seed_average(histories: &[TrainHistory]) -> Vec<StepRecord> {
    let Some(first) = histories.first() else { return Vec::new() };
    let n = histories.len() as f64;
    (0..first.records.len())
        .map(|s| {
            let mut acc = first.records[s].clone();
            for h in &histories[1..] {
                let r = &h.records[s];
                acc.infidelity += r.infidelity;
                acc.state_energy.iter_mut().zip(&r.state_energy).for_each(|(a, b)| *a += b);
                acc.circuit_energy.iter_mut().zip(&r.circuit_energy).for_each(|(a, b)| *a += b);
            }
            acc.infidelity /= n;
            acc.state_energy.iter_mut().for_each(|a| *a /= n);
            acc.circuit_energy.iter_mut().for_each(|a| *a /= n);
            acc
        })
        .collect()
}

/// Median of the final infidelities.
pub fn median_final_infidelity(histories: &[TrainHistory]) -> f64 {
    let mut v: Vec<f64> = histories.iter().map(|h| h.final_infidelity()).collect();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
