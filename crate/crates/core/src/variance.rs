//! Gradient statistics: parameter-shift gradients, Monte Carlo variance
//! estimates, analytic bounds and the shallow/deep crossover.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::circuit::{self, sample_circuit_indexed, CircuitParams, EnsembleSpec};
use crate::correlators::{c1_closed, c2_closed, hyp2f1_eta, EtaMode};
use crate::error::{invalid, Error, Result};
use crate::fock::{self, default_cutoff};
use crate::math;
use crate::stats;
use crate::targets::{auto_cutoff, fock_expand, FockExpansion, PreparedTarget, TargetSpec};
use crate::{SimConfig, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Backend {
    Branch,
    /// Fock-space simulation; `None` picks `max(20, ⌈4E + 6√E⌉)`, raised if
    /// the target expansion needs more.
    Fock { cutoff: Option<usize> },
}

/// A target prepared for repeated cost evaluations on one backend.
#[derive(Debug, Clone)]
pub enum Evaluator {
    Branch { target: PreparedTarget, cfg: SimConfig },
    Fock { target: FockExpansion, cutoff: usize, cfg: SimConfig },
}

impl Evaluator {
    /// `energy` sizes the automatic Fock cutoff.
    pub fn new(target: &TargetSpec, backend: Backend, energy: f64, cfg: &SimConfig) -> Result<Evaluator> {
        match backend {
            Backend::Branch => Ok(Evaluator::Branch { target: PreparedTarget::auto(target, cfg)?, cfg: *cfg }),
            Backend::Fock { cutoff } => {
                let target_energy = target.energy_per_mode().iter().cloned().fold(0.0, f64::max);
                let c = match cutoff {
                    Some(c) => c,
                    None => default_cutoff(energy.max(target_energy))
                        .max(auto_cutoff(target, cfg.fock_leak_bound, cfg.max_target_cutoff)?),
                };
                let t = fock_expand(target, c, cfg.fock_leak_bound)?;
                Ok(Evaluator::Fock { target: t, cutoff: c, cfg: *cfg })
            }
        }
    }

    pub fn amplitude(&self, p: &CircuitParams) -> Result<C64> {
        match self {
            Evaluator::Branch { target, cfg } => {
                let s = circuit::run_circuit(p, cfg)?;
                circuit::overlap_prepared(&s, target)
            }
            Evaluator::Fock { target, cutoff, cfg } => {
                let s = fock::run_circuit_fock(p, *cutoff, cfg)?;
                fock::overlap_fock(&s, target)
            }
        }
    }

    /// `C = |⟨0,ψ|U|0,0⟩|²`
    pub fn cost(&self, p: &CircuitParams) -> Result<f64> {
        Ok(self.amplitude(p)?.norm_sqr())
    }
}

fn check_k(p: &CircuitParams, k: usize) -> Result<()> {
    if k >= p.blocks() {
        return Err(invalid("rotation index out of range"));
    }
    Ok(())
}

/// Zero-based index `⌈ML/2⌉ − 1` of the middle rotation.
pub fn default_k(modes: usize, layers: usize) -> usize {
    (modes * layers).div_ceil(2).saturating_sub(1)
}

/// `(C(θ_k + π/2) − C(θ_k − π/2)) / 2`, `k` zero-based.
pub fn parameter_shift_gradient_with(p: &CircuitParams, eval: &Evaluator, k: usize) -> Result<f64> {
    check_k(p, k)?;
    let mut q = p.clone();
    q.thetas[k] = p.thetas[k] + FRAC_PI_2;
    let plus = eval.cost(&q)?;
    q.thetas[k] = p.thetas[k] - FRAC_PI_2;
    let minus = eval.cost(&q)?;
    Ok(0.5 * (plus - minus))
}

pub fn parameter_shift_gradient(
    p: &CircuitParams,
    target: &TargetSpec,
    k: usize,
    backend: Backend,
    cfg: &SimConfig,
) -> Result<f64> {
    let energy = p.circuit_energy().iter().cloned().fold(0.0, f64::max);
    let eval = Evaluator::new(target, backend, energy, cfg)?;
    parameter_shift_gradient_with(p, &eval, k)
}

/// Central difference in `θ_k` with step `h`.
pub fn finite_difference_gradient(p: &CircuitParams, eval: &Evaluator, k: usize, h: f64) -> Result<f64> {
    check_k(p, k)?;
    let mut q = p.clone();
    q.thetas[k] = p.thetas[k] + h;
    let plus = eval.cost(&q)?;
    q.thetas[k] = p.thetas[k] - h;
    let minus = eval.cost(&q)?;
    Ok((plus - minus) / (2.0 * h))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VarianceEstimate {
    pub mean: f64,
    pub variance: f64,
    pub se_mean: f64,
    pub se_variance: f64,
    pub samples: usize,
    /// Zero-based rotation index.
    pub k: usize,
}

pub const BOOTSTRAP_RESAMPLES: usize = 200;

impl VarianceEstimate {
    pub fn from_samples(grads: &[f64], k: usize, seed: u64) -> VarianceEstimate {
        let (se_mean, se_variance) = stats::bootstrap_mean_variance(grads, BOOTSTRAP_RESAMPLES, seed);
        VarianceEstimate {
            mean: stats::mean(grads),
            variance: stats::variance(grads),
            se_mean,
            se_variance,
            samples: grads.len(),
            k,
        }
    }
}

/// Parameter-shift gradients of `n` circuits drawn from the ensemble;
/// circuit `i` comes from stream `(seed, circuit domain, i)`.
pub fn mc_gradients(
    spec: &EnsembleSpec,
    target: &TargetSpec,
    k: usize,
    n: usize,
    backend: Backend,
    seed: u64,
    cfg: &SimConfig,
) -> Result<Vec<f64>> {
    if k >= spec.modes * spec.layers {
        return Err(invalid("rotation index out of range"));
    }
    if target.modes() != spec.modes {
        return Err(invalid("target and ensemble mode counts differ"));
    }
    let eval = Evaluator::new(target, backend, spec.energy, cfg)?;
    let out = stats::map_indexed(n, |i| {
        let p = sample_circuit_indexed(spec, seed, i as u64);
        parameter_shift_gradient_with(&p, &eval, k).map_err(|e| e.at_sample(i))
    });
    out.into_iter().collect()
}

pub fn mc_gradient_variance(
    spec: &EnsembleSpec,
    target: &TargetSpec,
    k: usize,
    n: usize,
    backend: Backend,
    seed: u64,
    cfg: &SimConfig,
) -> Result<VarianceEstimate> {
    if n < 30 {
        return Err(invalid("at least 30 samples are required"));
    }
    let g = mc_gradients(spec, target, k, n, backend, seed, cfg)?;
    Ok(VarianceEstimate::from_samples(&g, k, seed))
}

/// Coefficient `3^{K−1}/4^K` of `C1`, `K = ML`.
pub fn c1_coefficient(k_all: usize) -> f64 {
    math::powi(0.75, k_all as i32) / 3.0
}

/// Lower-bound coefficient `1/4 − 3^K/4^K` of `min C2`.
pub fn lower_c2_coefficient(k_all: usize) -> f64 {
    0.25 - math::powi(0.75, k_all as i32)
}

/// Upper-bound coefficient `1/4 + 2^{K−1}/4^K` of `max C2`.
pub fn upper_c2_coefficient(k_all: usize) -> f64 {
    0.25 + 0.5 * math::powi(0.5, k_all as i32)
}

/// Exact coefficient `1/4 − (2·3^{K−1} − 2^{K−1})/4^K`.
pub fn exact_c2_coefficient(k_all: usize) -> f64 {
    0.25 - (2.0 * math::powi(0.75, k_all as i32) / 3.0 - 0.5 * math::powi(0.5, k_all as i32))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundsResult {
    pub lower: f64,
    pub upper: f64,
    pub c1: f64,
    pub c2_min: f64,
    pub c2_max: f64,
    pub argmin_z: Vec<f64>,
    pub argmax_z: Vec<f64>,
}

pub const DEFAULT_SCAN_BUDGET: u64 = 1_000_000;

/// Bounds by exhaustive scan of `C2(ℓ/L)` over `ℓ ∈ {1..L−1}^M`. Fock
/// targets use the lower η for the minimum and `η = 1` for the maximum.
pub fn variance_bounds(modes: usize, layers: usize, target: &TargetSpec, e: f64) -> Result<BoundsResult> {
    variance_bounds_with_budget(modes, layers, target, e, DEFAULT_SCAN_BUDGET)
}

pub fn variance_bounds_with_budget(
    modes: usize,
    layers: usize,
    target: &TargetSpec,
    e: f64,
    budget: u64,
) -> Result<BoundsResult> {
    if layers < 2 {
        return Err(invalid("bounds need L ≥ 2"));
    }
    if target.modes() != modes {
        return Err(invalid("target and ensemble mode counts differ"));
    }
    let per = (layers - 1) as u64;
    let mut needed: u64 = 1;
    for _ in 0..modes {
        needed = needed.saturating_mul(per);
    }
    if needed > budget {
        return Err(Error::ScanBudget { needed, limit: budget });
    }
    let c1 = c1_closed(target, e)?;
    let mut ell = vec![1usize; modes];
    let mut z = vec![0.0; modes];
    let (mut c2_min, mut c2_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut argmin, mut argmax) = (Vec::new(), Vec::new());
    loop {
        for j in 0..modes {
            z[j] = ell[j] as f64 / layers as f64;
        }
        let lo = c2_closed(target, e, &z, EtaMode::Lower)?;
        let hi = if matches!(target, TargetSpec::Fock(_)) { c2_closed(target, e, &z, EtaMode::Upper)? } else { lo };
        if lo < c2_min {
            c2_min = lo;
            argmin = z.clone();
        }
        if hi > c2_max {
            c2_max = hi;
            argmax = z.clone();
        }
        let mut j = 0;
        loop {
            if j == modes {
                let k_all = modes * layers;
                let lower = 0.5 * (c1_coefficient(k_all) * c1 + lower_c2_coefficient(k_all) * c2_min);
                let upper = 0.5 * (c1_coefficient(k_all) * c1 + upper_c2_coefficient(k_all) * c2_max);
                return Ok(BoundsResult { lower, upper, c1, c2_min, c2_max, argmin_z: argmin, argmax_z: argmax });
            }
            ell[j] += 1;
            if ell[j] < layers {
                break;
            }
            ell[j] = 1;
            j += 1;
        }
    }
}

/// `(1/6)(3/4)^{ML} C1`
pub fn shallow_variance(modes: usize, layers: usize, target: &TargetSpec, e: f64) -> Result<f64> {
    Ok(0.5 * c1_coefficient(modes * layers) * c1_closed(target, e)?)
}

/// Crossover constant: 1 for Gaussian targets, `η(1 + 2E_t)` for Fock.
fn crossover_constant(target: &TargetSpec, eta: EtaMode) -> Result<f64> {
    match target {
        TargetSpec::OneModeGaussian(_) | TargetSpec::MultiModeGaussian(_) | TargetSpec::Tmsv(_) => Ok(1.0),
        TargetSpec::Fock(n) => {
            let h = match eta {
                EtaMode::Lower => hyp2f1_eta(*n),
                EtaMode::Upper => 1.0,
            };
            Ok(h * (1.0 + 2.0 * *n as f64))
        }
        _ => Err(Error::Unsupported { op: "critical_energy", family: target.family() }),
    }
}

/// `E_c(L) = c_t (3/2)(4/3)^L` with the order-one constant set to one
/// (indicative only).
pub fn critical_energy(layers: f64, target: &TargetSpec, eta: EtaMode) -> Result<f64> {
    Ok(crossover_constant(target, eta)? * 1.5 * math::exp(layers * math::ln(4.0 / 3.0)))
}

/// Inverse of [`critical_energy`].
pub fn critical_depth(e: f64, target: &TargetSpec, eta: EtaMode) -> Result<f64> {
    let c = crossover_constant(target, eta)?;
    Ok(math::ln(2.0 * e / (3.0 * c)) / math::ln(4.0 / 3.0))
}

/// Per-mode number of layers where the sign vectors agree; entry `k` of a
/// sign vector belongs to layer `k / M`, mode `k % M`.
pub fn agreement_counts(s: &[i8], r: &[i8], modes: usize) -> Vec<usize> {
    let mut out = vec![0; modes];
    for (k, (a, b)) in s.iter().zip(r).enumerate() {
        if a == b {
            out[k % modes] += 1;
        }
    }
    out
}

/// `p(N_z = M) = (2^L − 2)^M / (2^{ML} − 2)`, the chance that every mode of
/// a random pair `r ≠ ±s` has `z_j ∈ (0, 1)`, as `(numerator, denominator)`.
pub fn full_support_probability(modes: u32, layers: u32) -> (u128, u128) {
    let num = (2u128.pow(layers) - 2).pow(modes);
    let den = 2u128.pow(modes * layers) - 2;
    (num, den)
}
