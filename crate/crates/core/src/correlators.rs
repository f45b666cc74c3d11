//! Correlators `C1`, `C2`, `C3`: ensemble averages of products of
//! target/coherent-state fidelities.
//!
//! ```text
//! C1    = E_α |⟨ψ|α⟩|⁴,                              α ~ N^C_E
//! C2(z) = E Π_{h=0,1} |⟨ψ|α_z + (−1)^h α_{1−z}⟩|²,   α_y ~ N^C_{yE}
//! C3    = E Π_{h=0,1} |⟨ψ|α_z ± α_z̃ ± α_r⟩| |⟨α_z ± α_z̃ ∓ α_r|ψ⟩|,  r = 1−z−z̃
//! ```

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::gaussian::{GaussianState, OneModeGaussianParams};
use crate::linalg::Mat;
use crate::math;
use crate::rng::{self, domain};
use crate::stats;
use crate::targets::{CoherentMagnitude, TargetSpec};
use crate::C64;

/// Choice of η in the Fock-state `C2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum EtaMode {
    /// `η = ₂F₁(1/2, −E_t; 1; 1)`
    Lower,
    /// `η = 1`
    #[default]
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum CorrelatorKind {
    C1,
    C2,
    C3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorrelatorEstimate {
    pub value: f64,
    pub std_error: f64,
    /// Zero for closed forms.
    pub samples: usize,
}

impl CorrelatorEstimate {
    pub fn exact(value: f64) -> Self {
        CorrelatorEstimate { value, std_error: 0.0, samples: 0 }
    }
}

/// `₂F₁(1/2, −E_t; 1; 1) = (1/2)_{E_t} / E_t!` (Chu–Vandermonde).
pub fn hyp2f1_eta(et: u32) -> f64 {
    (0..et).map(|k| (k as f64 + 0.5) / (k as f64 + 1.0)).product()
}

fn check_energy(e: f64) -> Result<()> {
    if e.is_nan() || e <= 0.0 || !e.is_finite() {
        return Err(invalid("ensemble energy must be positive and finite"));
    }
    Ok(())
}

fn check_open_unit(z: &[f64]) -> Result<()> {
    if z.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
        return Err(invalid("z components must lie strictly inside (0, 1)"));
    }
    Ok(())
}

fn unsupported(op: &'static str, t: &TargetSpec) -> Error {
    Error::Unsupported { op, family: t.family() }
}

/// `G1(x) = 1 + 4x + 4 sech²ζ x²`
pub fn g1(zeta: f64, x: f64) -> f64 {
    let s = math::sech(zeta);
    1.0 + 4.0 * x + 4.0 * s * s * x * x
}

/// `R(x) = 2|γ|² + 4 sech²ζ |γ|² x + 2 tanh ζ |γ|² cos(2(φ_γ + τ))`
pub fn r_term(p: &OneModeGaussianParams, x: f64) -> f64 {
    let g2 = p.gamma.norm_sqr();
    if g2 == 0.0 {
        return 0.0;
    }
    let s = math::sech(p.zeta);
    let phi = math::atan2(p.gamma.im, p.gamma.re);
    2.0 * g2 + 4.0 * s * s * g2 * x + 2.0 * math::tanh(p.zeta) * g2 * math::cos(2.0 * (phi + p.tau))
}

fn gauss1_c1(p: &OneModeGaussianParams, e: f64) -> f64 {
    let s = math::sech(p.zeta);
    let g = g1(p.zeta, e);
    s * s * math::exp(-r_term(p, e) / g) / math::sqrt(g)
}

fn gauss1_c2(p: &OneModeGaussianParams, e: f64, z: f64) -> f64 {
    let s = math::sech(p.zeta);
    let gz = g1(p.zeta, z * e);
    s * s * math::exp(-r_term(p, z * e) / gz) / math::sqrt(g1(p.zeta, (1.0 - z) * e) * gz)
}

fn gauss1_c3(p: &OneModeGaussianParams, e: f64, z: f64, zt: f64) -> f64 {
    let s = math::sech(p.zeta);
    let gz = g1(p.zeta, z * e);
    s * s * math::exp(-r_term(p, z * e) / gz) / math::sqrt(gz * g1(p.zeta, zt * e) * g1(p.zeta, (1.0 - z - zt) * e))
}

/// `ln[(2n)! / (2^n n!)²]`
fn ln_fock_prefactor(n: u32) -> f64 {
    let n = n as u64;
    math::ln_factorial(2 * n) - 2.0 * (n as f64 * core::f64::consts::LN_2 + math::ln_factorial(n))
}

fn fock_c1(n: u32, e: f64) -> f64 {
    let nf = n as f64;
    math::exp(ln_fock_prefactor(n) - 2.0 * nf * math::ln(1.0 + 1.0 / (2.0 * e))) / (1.0 + 2.0 * e)
}

/// The bracket of the full Fock `C2` divided by `1 − 2z`:
/// `f(z) = 1 + A Σ_{k≥1} C(2n,k) t^{k−1} / h^k` with `t = 1 − 2z`,
/// `A = (1−z)(1+2zE)`, `h = z + 2(1−z)zE`. Equal to `1 + 2n` at `z = 1/2`.
fn fock_bracket(n: u32, e: f64, z: f64) -> f64 {
    let t = 1.0 - 2.0 * z;
    let a = (1.0 - z) * (1.0 + 2.0 * z * e);
    let h = z + 2.0 * (1.0 - z) * z * e;
    let two_n = 2 * n as u64;
    if t.abs() >= 1e-6 {
        let b = 2.0 * (1.0 - z) * z * e + z;
        return (a * math::powf(1.0 + t / h, two_n as f64) - b) / t;
    }
    // series branch near the removable singularity
    let mut sum = 0.0;
    let mut binom_over_h = 1.0;
    let mut tp = 1.0;
    for k in 1..=two_n {
        binom_over_h *= (two_n - k + 1) as f64 / (k as f64 * h);
        sum += binom_over_h * tp;
        tp *= t;
        if binom_over_h * tp.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    1.0 + a * sum
}

fn fock_eta(n: u32, eta: EtaMode) -> f64 {
    match eta {
        EtaMode::Lower => hyp2f1_eta(n),
        EtaMode::Upper => 1.0,
    }
}

fn fock_c2_tail(n: u32, e: f64, z: f64) -> f64 {
    let nf = n as f64;
    math::exp(ln_fock_prefactor(n) - 2.0 * nf * math::ln(1.0 + 1.0 / (2.0 * z * e)))
        / ((1.0 + 2.0 * (1.0 - z) * e) * (1.0 + 2.0 * z * e))
}

/// Full Fock-state `C2(z)`.
pub fn c2_fock_full(n: u32, e: f64, z: f64, eta: EtaMode) -> f64 {
    fock_eta(n, eta) * fock_bracket(n, e, z) * fock_c2_tail(n, e, z)
}

/// Fock-state `C2(z)` with the bracket replaced by its `z = 1/2` value
/// `1 + 2E_t`.
pub fn c2_fock_asymptotic(n: u32, e: f64, z: f64, eta: EtaMode) -> f64 {
    fock_eta(n, eta) * (1.0 + 2.0 * n as f64) * fock_c2_tail(n, e, z)
}

/// `K = (V + I)⁻¹`, `ξ = X̄ / 2`.
struct GaussData {
    m: usize,
    k: Mat,
    xi: Vec<f64>,
    ln_det_k: f64,
}

impl GaussData {
    fn new(g: &GaussianState) -> Result<GaussData> {
        let m = g.modes();
        let k = g.cov().add(&Mat::identity(2 * m)).inverse()?;
        let (ln_det_k, sign) = k.lu()?.ln_abs_det();
        if sign <= 0.0 {
            return Err(Error::Singular);
        }
        Ok(GaussData { m, k, xi: g.mean().iter().map(|x| x / 2.0).collect(), ln_det_k })
    }

    /// `S_y = ⊕ I₂ / (y_j E)`
    fn s(&self, y: &[f64], e: f64) -> Mat {
        let d: Vec<f64> = (0..2 * self.m).map(|i| 1.0 / (y[i / 2] * e)).collect();
        Mat::diag(&d)
    }

    /// `ln det(4K + S)` and the exponent `−4ξᵀ[K − 4K(4K+S)⁻¹K]ξ`.
    fn block(&self, s: &Mat) -> Result<(f64, f64)> {
        let a = self.k.scale(4.0).add(s);
        let lu = a.lu()?;
        let (ln_det, sign) = lu.ln_abs_det();
        if sign <= 0.0 {
            return Err(Error::Singular);
        }
        let kxi = self.k.mul_vec(&self.xi);
        let sol = lu.solve(&kxi);
        let xkx: f64 = self.xi.iter().zip(&kxi).map(|(a, b)| a * b).sum();
        let cross: f64 = kxi.iter().zip(&sol).map(|(a, b)| a * b).sum();
        Ok((ln_det, -4.0 * (xkx - 4.0 * cross)))
    }

    /// General term: `4^M det K exp(mean term of y₀) / (Π_i √det(4K+S_{y_i}) Π y_i E^M)`.
    fn correlator(&self, e: f64, parts: &[&[f64]]) -> Result<f64> {
        let mf = self.m as f64;
        let mut ln = mf * math::ln(4.0) + self.ln_det_k;
        for (i, y) in parts.iter().enumerate() {
            let (ln_det, expo) = self.block(&self.s(y, e))?;
            if i == 0 {
                ln += expo;
            }
            ln -= 0.5 * ln_det;
            ln -= y.iter().map(|v| math::ln(*v)).sum::<f64>() + mf * math::ln(e);
        }
        Ok(math::exp(ln))
    }
}

fn gauss_multi_c1(g: &GaussianState, e: f64) -> Result<f64> {
    let d = GaussData::new(g)?;
    let ones = vec![1.0; d.m];
    d.correlator(e, &[&ones])
}

fn gauss_multi_c2(g: &GaussianState, e: f64, z: &[f64]) -> Result<f64> {
    let d = GaussData::new(g)?;
    let rest: Vec<f64> = z.iter().map(|x| 1.0 - x).collect();
    d.correlator(e, &[z, &rest])
}

fn gauss_multi_c3(g: &GaussianState, e: f64, z: &[f64], zt: &[f64]) -> Result<f64> {
    let d = GaussData::new(g)?;
    let rest: Vec<f64> = z.iter().zip(zt).map(|(a, b)| 1.0 - a - b).collect();
    d.correlator(e, &[z, zt, &rest])
}

/// `G2(a, b) = 1 + 2(a + b) + 4 sech²ζ ab` with `a = z₁E`, `b = z₂E`.
pub fn g2(zeta: f64, a: f64, b: f64) -> f64 {
    let s = math::sech(zeta);
    1.0 + 2.0 * (a + b) + 4.0 * s * s * a * b
}

/// Closed-form `C1`.
pub fn c1_closed(target: &TargetSpec, e: f64) -> Result<f64> {
    check_energy(e)?;
    target.validate()?;
    match target {
        TargetSpec::OneModeGaussian(p) => Ok(gauss1_c1(p, e)),
        TargetSpec::Fock(n) => Ok(fock_c1(*n, e)),
        TargetSpec::Product(parts) => parts.iter().try_fold(1.0, |acc, p| Ok(acc * c1_closed(p, e)?)),
        TargetSpec::MultiModeGaussian(g) => gauss_multi_c1(g, e),
        TargetSpec::Tmsv(z) => {
            let s = math::sech(*z);
            Ok(s * s * s * s / g1(*z, e))
        }
        TargetSpec::RandomFock(_) => Err(unsupported("c1_closed", target)),
    }
}

/// Closed-form `C2(z)`; `z` has one entry per mode.
pub fn c2_closed(target: &TargetSpec, e: f64, z: &[f64], eta: EtaMode) -> Result<f64> {
    check_energy(e)?;
    target.validate()?;
    if z.len() != target.modes() {
        return Err(invalid("z must have one entry per mode"));
    }
    check_open_unit(z)?;
    match target {
        TargetSpec::OneModeGaussian(p) => Ok(gauss1_c2(p, e, z[0])),
        TargetSpec::Fock(n) => Ok(c2_fock_full(*n, e, z[0], eta)),
        TargetSpec::Product(parts) => {
            let mut off = 0;
            let mut acc = 1.0;
            for p in parts {
                let m = p.modes();
                acc *= c2_closed(p, e, &z[off..off + m], eta)?;
                off += m;
            }
            Ok(acc)
        }
        TargetSpec::MultiModeGaussian(g) => gauss_multi_c2(g, e, z),
        TargetSpec::Tmsv(zeta) => {
            let s = math::sech(*zeta);
            let a = g2(*zeta, z[0] * e, z[1] * e);
            let b = g2(*zeta, (1.0 - z[0]) * e, (1.0 - z[1]) * e);
            Ok(s * s * s * s / (a * b))
        }
        TargetSpec::RandomFock(_) => Err(unsupported("c2_closed", target)),
    }
}

/// Closed-form `C3(z, z̃)` for Gaussian targets.
pub fn c3_closed_gaussian(target: &TargetSpec, e: f64, z: &[f64], zt: &[f64]) -> Result<f64> {
    check_energy(e)?;
    target.validate()?;
    let m = target.modes();
    if z.len() != m || zt.len() != m {
        return Err(invalid("z and z̃ must have one entry per mode"));
    }
    let rest: Vec<f64> = z.iter().zip(zt).map(|(a, b)| 1.0 - a - b).collect();
    check_open_unit(z)?;
    check_open_unit(zt)?;
    check_open_unit(&rest)?;
    match target {
        TargetSpec::OneModeGaussian(p) => Ok(gauss1_c3(p, e, z[0], zt[0])),
        _ => match target.gaussian_state() {
            Some(g) => gauss_multi_c3(&g, e, z, zt),
            None => Err(unsupported("c3_closed_gaussian", target)),
        },
    }
}

/// Monte Carlo estimate from `n` samples; sample `i` uses stream
/// `(seed, correlator domain, i)`.
pub fn mc_correlator(
    kind: CorrelatorKind,
    target: &TargetSpec,
    e: f64,
    z: &[f64],
    zt: &[f64],
    n: usize,
    seed: u64,
) -> Result<CorrelatorEstimate> {
    check_energy(e)?;
    if n < 100 {
        return Err(invalid("at least 100 samples are required"));
    }
    let m = target.modes();
    match kind {
        CorrelatorKind::C1 => {}
        CorrelatorKind::C2 => {
            if z.len() != m {
                return Err(invalid("z must have one entry per mode"));
            }
            check_open_unit(z)?;
        }
        CorrelatorKind::C3 => {
            if z.len() != m || zt.len() != m {
                return Err(invalid("z and z̃ must have one entry per mode"));
            }
            let rest: Vec<f64> = z.iter().zip(zt).map(|(a, b)| 1.0 - a - b).collect();
            check_open_unit(z)?;
            check_open_unit(zt)?;
            check_open_unit(&rest)?;
        }
    }
    let probe = CoherentMagnitude::new(target)?;
    let values = stats::map_indexed(n, |i| {
        let mut r = rng::stream(seed, domain::CORRELATOR, i as u64);
        sample_integrand(kind, &probe, m, e, z, zt, &mut r)
    });
    Ok(CorrelatorEstimate { value: stats::mean(&values), std_error: stats::std_error(&values), samples: n })
}

fn sample_integrand<R: rand::Rng>(
    kind: CorrelatorKind,
    probe: &CoherentMagnitude,
    m: usize,
    e: f64,
    z: &[f64],
    zt: &[f64],
    r: &mut R,
) -> f64 {
    let mut buf = [C64::new(0.0, 0.0); 64];
    let mut heap;
    let pts: &mut [C64] = if 4 * m <= 64 {
        &mut buf[..4 * m]
    } else {
        heap = vec![C64::new(0.0, 0.0); 4 * m];
        &mut heap
    };
    match kind {
        CorrelatorKind::C1 => {
            for j in 0..m {
                pts[j] = rng::complex_normal(r, e);
            }
            let f = probe.prob(&pts[..m]);
            f * f
        }
        CorrelatorKind::C2 => {
            for j in 0..m {
                let u = rng::complex_normal(r, z[j] * e);
                let w = rng::complex_normal(r, (1.0 - z[j]) * e);
                pts[j] = u + w;
                pts[m + j] = u - w;
            }
            probe.prob(&pts[..m]) * probe.prob(&pts[m..2 * m])
        }
        CorrelatorKind::C3 => {
            for j in 0..m {
                let u = rng::complex_normal(r, z[j] * e);
                let b = rng::complex_normal(r, zt[j] * e);
                let c = rng::complex_normal(r, (1.0 - z[j] - zt[j]) * e);
                pts[j] = u + b + c;
                pts[m + j] = u + b - c;
                pts[2 * m + j] = u - b - c;
                pts[3 * m + j] = u - b + c;
            }
            let p: f64 = (0..4).map(|q| probe.prob(&pts[q * m..(q + 1) * m])).product();
            math::sqrt(p)
        }
    }
}
