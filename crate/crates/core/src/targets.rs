//! Target states and their truncated Fock expansions.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::circuit::coherent_coeffs;
use crate::error::{invalid, Error, Result};
use crate::gaussian::{self, CoherentProbe, GaussianState, OneModeGaussianParams};
use crate::math;
use crate::rng;
use crate::{SimConfig, C64};

/// Coefficients `b_n` of `|ψ⟩ = Σ b_n |n⟩` over `n ∈ {0..=cutoff}^M`,
/// row-major with mode 1 most significant.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FockExpansion {
    pub modes: usize,
    /// Highest retained photon number per mode.
    pub cutoff: usize,
    pub coeffs: Vec<C64>,
    /// `1 − ‖coeffs‖²`.
    pub leak: f64,
}

impl FockExpansion {
    pub fn new(modes: usize, cutoff: usize, coeffs: Vec<C64>) -> Result<FockExpansion> {
        let dim = dense_len(modes, cutoff)?;
        if coeffs.len() != dim {
            return Err(invalid(format!("expected {dim} coefficients")));
        }
        let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if norm > 1.0 + 1e-12 {
            return Err(invalid("coefficients must have norm at most one"));
        }
        Ok(FockExpansion { modes, cutoff, coeffs, leak: 1.0 - norm })
    }

    pub fn dim(&self) -> usize {
        self.cutoff + 1
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Mean photon number of each mode, normalised by the retained norm.
    pub fn energy_per_mode(&self) -> Vec<f64> {
        let d = self.dim();
        let norm = self.norm_sqr();
        let mut e = vec![0.0; self.modes];
        for (idx, c) in self.coeffs.iter().enumerate() {
            let p = c.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let mut rest = idx;
            for j in (0..self.modes).rev() {
                e[j] += (rest % d) as f64 * p;
                rest /= d;
            }
        }
        e.iter().map(|x| x / norm).collect()
    }

    /// Same state at another cutoff (zero-padded or truncated).
    pub fn recut(&self, cutoff: usize) -> Result<FockExpansion> {
        let d_old = self.dim();
        let d_new = cutoff + 1;
        let len = dense_len(self.modes, cutoff)?;
        let mut coeffs = vec![C64::new(0.0, 0.0); len];
        for (idx, c) in self.coeffs.iter().enumerate() {
            let mut rest = idx;
            let mut new_idx = 0;
            let mut stride = 1;
            let mut keep = true;
            for _ in 0..self.modes {
                let n = rest % d_old;
                rest /= d_old;
                if n >= d_new {
                    keep = false;
                    break;
                }
                new_idx += n * stride;
                stride *= d_new;
            }
            if keep {
                coeffs[new_idx] = *c;
            }
        }
        let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        Ok(FockExpansion { modes: self.modes, cutoff, coeffs, leak: 1.0 - norm })
    }

    /// Tensor product, mode order `self` then `other`.
    pub fn tensor(&self, other: &FockExpansion) -> Result<FockExpansion> {
        let cutoff = self.cutoff.max(other.cutoff);
        let a = self.recut(cutoff)?;
        let b = other.recut(cutoff)?;
        let mut coeffs = Vec::with_capacity(dense_len(a.modes + b.modes, cutoff)?);
        for x in &a.coeffs {
            for y in &b.coeffs {
                coeffs.push(x * y);
            }
        }
        let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        Ok(FockExpansion { modes: a.modes + b.modes, cutoff, coeffs, leak: 1.0 - norm })
    }

    /// `⟨ψ|α⟩` for a coherent product state.
    pub fn coherent_overlap(&self, alpha: &[C64], scratch: &mut Vec<C64>) -> C64 {
        let d = self.dim();
        let m = self.modes;
        scratch.clear();
        scratch.resize(d * m, C64::new(0.0, 0.0));
        for j in 0..m {
            coherent_coeffs(alpha[j], &mut scratch[j * d..(j + 1) * d]);
        }
        match m {
            1 => self.coeffs.iter().zip(scratch.iter()).map(|(b, c)| b.conj() * c).sum(),
            2 => {
                let (c1, c2) = scratch.split_at(d);
                let mut acc = C64::new(0.0, 0.0);
                for n1 in 0..d {
                    if c1[n1] == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let row = &self.coeffs[n1 * d..(n1 + 1) * d];
                    let inner: C64 = row.iter().zip(c2).map(|(b, c)| b.conj() * c).sum();
                    acc += c1[n1] * inner;
                }
                acc
            }
            _ => {
                let mut acc = C64::new(0.0, 0.0);
                for (idx, b) in self.coeffs.iter().enumerate() {
                    let mut rest = idx;
                    let mut prod = b.conj();
                    for j in (0..m).rev() {
                        prod *= scratch[j * d + rest % d];
                        rest /= d;
                    }
                    acc += prod;
                }
                acc
            }
        }
    }

    /// `⟨ψ|x⟩` for a state with the same layout but possibly a different
    /// cutoff; indices outside the common range are dropped.
    pub fn inner(&self, other_cutoff: usize, amps: &[C64]) -> C64 {
        if other_cutoff == self.cutoff {
            return self.coeffs.iter().zip(amps).map(|(b, x)| b.conj() * x).sum();
        }
        let d_self = self.dim();
        let d_other = other_cutoff + 1;
        let mut acc = C64::new(0.0, 0.0);
        'outer: for (idx, b) in self.coeffs.iter().enumerate() {
            if *b == C64::new(0.0, 0.0) {
                continue;
            }
            let mut rest = idx;
            let mut o = 0;
            let mut stride = 1;
            for _ in 0..self.modes {
                let n = rest % d_self;
                rest /= d_self;
                if n >= d_other {
                    continue 'outer;
                }
                o += n * stride;
                stride *= d_other;
            }
            acc += b.conj() * amps[o];
        }
        acc
    }
}

fn dense_len(modes: usize, cutoff: usize) -> Result<usize> {
    let mut n: usize = 1;
    for _ in 0..modes {
        n = n.checked_mul(cutoff + 1).ok_or_else(|| invalid("expansion too large"))?;
    }
    if n > 1 << 28 {
        return Err(Error::MemoryBudget { needed: n as u64, limit: 1 << 28 });
    }
    Ok(n)
}

/// Target state families.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TargetSpec {
    OneModeGaussian(OneModeGaussianParams),
    Fock(u32),
    Product(Vec<TargetSpec>),
    MultiModeGaussian(GaussianState),
    Tmsv(f64),
    RandomFock(FockExpansion),
}

impl TargetSpec {
    pub fn coherent(gamma: C64) -> TargetSpec {
        TargetSpec::OneModeGaussian(OneModeGaussianParams::coherent(gamma))
    }

    pub fn vacuum() -> TargetSpec {
        TargetSpec::OneModeGaussian(OneModeGaussianParams::vacuum())
    }

    /// Displaced squeezed vacuum `D(γ)S(ζ)|0⟩`.
    pub fn dsv(gamma: C64, zeta: f64) -> TargetSpec {
        TargetSpec::OneModeGaussian(OneModeGaussianParams::new(gamma, 0.0, zeta))
    }

    pub fn family(&self) -> &'static str {
        match self {
            TargetSpec::OneModeGaussian(_) => "one-mode-gaussian",
            TargetSpec::Fock(_) => "fock",
            TargetSpec::Product(_) => "product",
            TargetSpec::MultiModeGaussian(_) => "multi-mode-gaussian",
            TargetSpec::Tmsv(_) => "tmsv",
            TargetSpec::RandomFock(_) => "random-fock",
        }
    }

    pub fn modes(&self) -> usize {
        match self {
            TargetSpec::OneModeGaussian(_) | TargetSpec::Fock(_) => 1,
            TargetSpec::Product(parts) => parts.iter().map(|p| p.modes()).sum(),
            TargetSpec::MultiModeGaussian(g) => g.modes(),
            TargetSpec::Tmsv(_) => 2,
            TargetSpec::RandomFock(e) => e.modes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TargetSpec::OneModeGaussian(p) if !p.is_finite() => Err(invalid("Gaussian parameters must be finite")),
            TargetSpec::Tmsv(z) if !z.is_finite() => Err(invalid("squeezing must be finite")),
            TargetSpec::Product(parts) if parts.is_empty() => Err(invalid("empty product")),
            TargetSpec::Product(parts) => parts.iter().try_for_each(|p| p.validate()),
            TargetSpec::RandomFock(e) if e.norm_sqr() <= 0.0 => Err(invalid("zero state")),
            _ => Ok(()),
        }
    }

    pub fn energy_per_mode(&self) -> Vec<f64> {
        match self {
            TargetSpec::OneModeGaussian(p) => vec![p.energy()],
            TargetSpec::Fock(n) => vec![*n as f64],
            TargetSpec::Product(parts) => parts.iter().flat_map(|p| p.energy_per_mode()).collect(),
            TargetSpec::MultiModeGaussian(g) => g.energy_per_mode(),
            TargetSpec::Tmsv(z) => {
                let s = math::sinh(*z);
                vec![s * s; 2]
            }
            TargetSpec::RandomFock(e) => e.energy_per_mode(),
        }
    }

    /// Gaussian description, when the target is Gaussian.
    pub fn gaussian_state(&self) -> Option<GaussianState> {
        match self {
            TargetSpec::OneModeGaussian(p) => Some(gaussian::one_mode_gaussian(p)),
            TargetSpec::MultiModeGaussian(g) => Some(g.clone()),
            TargetSpec::Tmsv(z) => Some(gaussian::tmsv(*z)),
            TargetSpec::Product(parts) => {
                let gs: Option<Vec<GaussianState>> = parts.iter().map(|p| p.gaussian_state()).collect();
                gs.map(|g| GaussianState::direct_sum(&g))
            }
            _ => None,
        }
    }
}

/// Coefficients of `D(γ)R(τ)S(ζ)|0⟩` for `n = 0..=cutoff`, from the
/// eigenvalue relation `(μ m + ν m†)|ψ⟩ = (μγ + νγ*)|ψ⟩`, `μ = cosh ζ`,
/// `ν = e^{−2iτ} sinh ζ`.
pub fn one_mode_gaussian_coeffs(p: &OneModeGaussianParams, cutoff: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(cutoff + 1);
    gaussian_recursion(p, |c| {
        out.push(c);
        out.len() <= cutoff
    });
    out
}

/// Runs the coefficient recursion, feeding each `c_n` to `sink` until it
/// returns false.
fn gaussian_recursion(p: &OneModeGaussianParams, mut sink: impl FnMut(C64) -> bool) {
    let mu = math::cosh(p.zeta);
    let e = math::cis(-2.0 * p.tau);
    let nu = e * math::sinh(p.zeta);
    let g = p.gamma;
    let lambda = g * mu + g.conj() * nu;
    let log_c0 = C64::new(-0.5 * math::ln(mu), 0.0) - 0.5 * g.norm_sqr() - 0.5 * g.conj() * g.conj() * e * math::tanh(p.zeta);
    let mut prev = C64::new(0.0, 0.0);
    let mut cur = log_c0.exp();
    let mut n = 0usize;
    loop {
        if !sink(cur) {
            return;
        }
        let next = (lambda * cur - nu * math::sqrt(n as f64) * prev) / (mu * math::sqrt(n as f64 + 1.0));
        prev = cur;
        cur = next;
        n += 1;
    }
}

fn leak_check(e: FockExpansion, bound: f64) -> Result<FockExpansion> {
    if e.leak > bound {
        Err(Error::Leak { leak: e.leak, bound })
    } else {
        Ok(e)
    }
}

/// Truncated expansion at photon cutoff `cutoff` (per mode).
pub fn fock_expand(target: &TargetSpec, cutoff: usize, leak_bound: f64) -> Result<FockExpansion> {
    target.validate()?;
    let e = expand_unchecked(target, cutoff)?;
    leak_check(e, leak_bound)
}

fn expand_unchecked(target: &TargetSpec, cutoff: usize) -> Result<FockExpansion> {
    match target {
        TargetSpec::OneModeGaussian(p) => {
            let coeffs = one_mode_gaussian_coeffs(p, cutoff);
            let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
            Ok(FockExpansion { modes: 1, cutoff, coeffs, leak: 1.0 - norm })
        }
        TargetSpec::Fock(n) => {
            let mut coeffs = vec![C64::new(0.0, 0.0); cutoff + 1];
            let leak = if (*n as usize) <= cutoff {
                coeffs[*n as usize] = C64::new(1.0, 0.0);
                0.0
            } else {
                1.0
            };
            Ok(FockExpansion { modes: 1, cutoff, coeffs, leak })
        }
        TargetSpec::Tmsv(z) => {
            let d = cutoff + 1;
            let mut coeffs = vec![C64::new(0.0, 0.0); dense_len(2, cutoff)?];
            let t = math::tanh(*z);
            let mut c = math::sech(*z);
            let mut norm = 0.0;
            for n in 0..d {
                coeffs[n * d + n] = C64::new(c, 0.0);
                norm += c * c;
                c *= t;
            }
            Ok(FockExpansion { modes: 2, cutoff, coeffs, leak: 1.0 - norm })
        }
        TargetSpec::Product(parts) => {
            let mut acc: Option<FockExpansion> = None;
            for p in parts {
                let e = expand_unchecked(p, cutoff)?;
                acc = Some(match acc {
                    None => e,
                    Some(a) => a.tensor(&e)?,
                });
            }
            acc.ok_or_else(|| invalid("empty product"))
        }
        TargetSpec::MultiModeGaussian(g) if g.modes() == 1 => {
            expand_unchecked(&TargetSpec::OneModeGaussian(g.one_mode_params()?), cutoff)
        }
        TargetSpec::MultiModeGaussian(_) => Err(Error::Unsupported { op: "fock_expand", family: "multi-mode-gaussian" }),
        TargetSpec::RandomFock(e) => e.recut(cutoff),
    }
}

/// Smallest photon cutoff whose expansion leak is below `bound`.
pub fn auto_cutoff(target: &TargetSpec, bound: f64, max_cutoff: usize) -> Result<usize> {
    let too_big = || Error::Leak { leak: f64::NAN, bound };
    match target {
        TargetSpec::OneModeGaussian(p) => {
            let mut norm = 0.0;
            let mut n = 0usize;
            let mut found = None;
            gaussian_recursion(p, |c| {
                norm += c.norm_sqr();
                if 1.0 - norm <= bound {
                    found = Some(n);
                    return false;
                }
                n += 1;
                n <= max_cutoff
            });
            found.ok_or_else(too_big)
        }
        TargetSpec::Fock(n) => Ok(*n as usize),
        TargetSpec::Tmsv(z) => {
            let t2 = math::tanh(*z) * math::tanh(*z);
            if t2 == 0.0 {
                return Ok(0);
            }
            // tail after cutoff N is tanh^{2(N+1)}
            let n = math::ceil(math::ln(bound) / math::ln(t2)) as usize;
            if n > max_cutoff + 1 {
                return Err(too_big());
            }
            Ok(n.saturating_sub(1))
        }
        TargetSpec::Product(parts) => {
            let share = bound / parts.len() as f64;
            parts.iter().try_fold(0, |m, p| Ok(m.max(auto_cutoff(p, share, max_cutoff)?)))
        }
        TargetSpec::MultiModeGaussian(g) if g.modes() == 1 => {
            auto_cutoff(&TargetSpec::OneModeGaussian(g.one_mode_params()?), bound, max_cutoff)
        }
        TargetSpec::MultiModeGaussian(_) => Err(Error::Unsupported { op: "auto_cutoff", family: "multi-mode-gaussian" }),
        TargetSpec::RandomFock(e) => Ok(e.cutoff),
    }
}

pub fn fock_expand_auto(target: &TargetSpec, bound: f64, max_cutoff: usize) -> Result<FockExpansion> {
    let c = auto_cutoff(target, bound, max_cutoff)?;
    fock_expand(target, c, bound.max(0.0))
}

/// Target prepared for repeated coherent-state overlaps.
#[derive(Debug, Clone)]
pub enum PreparedTarget {
    /// Closed form `⟨ψ|α⟩` of `D(γ)R(τ)S(ζ)|0⟩`.
    OneModeGaussian(OneModeGaussianParams),
    /// Closed form `⟨n|α⟩`.
    Fock(u32),
    Dense(FockExpansion),
    /// Independent factors, one or more modes each.
    Product(Vec<PreparedTarget>),
}

impl PreparedTarget {
    /// Closed forms where available, otherwise an expansion with an
    /// automatic cutoff; product targets keep their factors separate.
    pub fn auto(target: &TargetSpec, cfg: &SimConfig) -> Result<PreparedTarget> {
        target.validate()?;
        match target {
            TargetSpec::OneModeGaussian(p) => Ok(PreparedTarget::OneModeGaussian(*p)),
            TargetSpec::Fock(n) => Ok(PreparedTarget::Fock(*n)),
            TargetSpec::Product(parts) => {
                let share = SimConfig { target_leak_bound: cfg.target_leak_bound / parts.len() as f64, ..*cfg };
                let factors = parts.iter().map(|p| PreparedTarget::auto(p, &share)).collect::<Result<Vec<_>>>()?;
                Ok(PreparedTarget::Product(factors))
            }
            _ => Ok(PreparedTarget::Dense(fock_expand_auto(target, cfg.target_leak_bound, cfg.max_target_cutoff)?)),
        }
    }

    pub fn modes(&self) -> usize {
        match self {
            PreparedTarget::OneModeGaussian(_) | PreparedTarget::Fock(_) => 1,
            PreparedTarget::Dense(e) => e.modes,
            PreparedTarget::Product(f) => f.iter().map(|e| e.modes()).sum(),
        }
    }

    pub fn leak(&self) -> f64 {
        match self {
            PreparedTarget::OneModeGaussian(_) | PreparedTarget::Fock(_) => 0.0,
            PreparedTarget::Dense(e) => e.leak,
            PreparedTarget::Product(f) => 1.0 - f.iter().map(|e| 1.0 - e.leak()).product::<f64>(),
        }
    }

    /// `⟨ψ|α⟩`
    pub fn coherent_overlap(&self, alpha: &[C64], scratch: &mut Vec<C64>) -> C64 {
        match self {
            PreparedTarget::OneModeGaussian(p) => gaussian_coherent_amplitude(p, alpha[0]).conj(),
            PreparedTarget::Fock(n) => fock_coherent_amplitude(*n, alpha[0]),
            PreparedTarget::Dense(e) => e.coherent_overlap(alpha, scratch),
            PreparedTarget::Product(f) => {
                let mut off = 0;
                let mut prod = C64::new(1.0, 0.0);
                for e in f {
                    let m = e.modes();
                    prod *= e.coherent_overlap(&alpha[off..off + m], scratch);
                    off += m;
                }
                prod
            }
        }
    }
}

/// `⟨α|D(γ)R(τ)S(ζ)|0⟩ = e^{(γα* − γ*α)/2} ⟨δ|S(ζ)|0⟩`, `δ = (α − γ)e^{iτ}`,
/// with `⟨δ|S(ζ)|0⟩ = (cosh ζ)^{-1/2} exp(−|δ|²/2 − tanh ζ · δ*²/2)`.
pub fn gaussian_coherent_amplitude(p: &OneModeGaussianParams, alpha: C64) -> C64 {
    let g = p.gamma;
    let d = (alpha - g) * math::cis(p.tau);
    let dc = d.conj();
    let expo = (g * alpha.conj() - g.conj() * alpha) * 0.5 - 0.5 * d.norm_sqr() - 0.5 * math::tanh(p.zeta) * dc * dc;
    expo.exp() / math::sqrt(math::cosh(p.zeta))
}

/// `⟨n|α⟩ = e^{−|α|²/2} αⁿ/√n!`
pub fn fock_coherent_amplitude(n: u32, alpha: C64) -> C64 {
    let r2 = alpha.norm_sqr();
    if n == 0 {
        return C64::new(math::exp(-0.5 * r2), 0.0);
    }
    if r2 == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let ln_mag = -0.5 * r2 + 0.5 * n as f64 * math::ln(r2) - 0.5 * math::ln_factorial(n as u64);
    C64::from_polar(math::exp(ln_mag), n as f64 * math::atan2(alpha.im, alpha.re))
}

/// `|⟨ψ|α⟩|²` evaluator for Monte Carlo correlators.
#[derive(Debug, Clone)]
pub enum CoherentMagnitude {
    OneMode(OneModeGaussianParams),
    Gaussian(CoherentProbe),
    Fock(u32),
    Expansion(FockExpansion),
    Product(Vec<(usize, CoherentMagnitude)>),
}

impl CoherentMagnitude {
    pub fn new(target: &TargetSpec) -> Result<CoherentMagnitude> {
        target.validate()?;
        Ok(match target {
            TargetSpec::OneModeGaussian(p) => CoherentMagnitude::OneMode(*p),
            TargetSpec::Fock(n) => CoherentMagnitude::Fock(*n),
            TargetSpec::MultiModeGaussian(g) => CoherentMagnitude::Gaussian(CoherentProbe::new(g)?),
            TargetSpec::Tmsv(z) => CoherentMagnitude::Gaussian(CoherentProbe::new(&gaussian::tmsv(*z))?),
            TargetSpec::RandomFock(e) => CoherentMagnitude::Expansion(e.clone()),
            TargetSpec::Product(parts) => CoherentMagnitude::Product(
                parts.iter().map(|p| Ok((p.modes(), CoherentMagnitude::new(p)?))).collect::<Result<Vec<_>>>()?,
            ),
        })
    }

    pub fn prob(&self, alpha: &[C64]) -> f64 {
        match self {
            CoherentMagnitude::OneMode(p) => p.coherent_fidelity(alpha[0]),
            CoherentMagnitude::Gaussian(g) => g.fidelity(alpha),
            CoherentMagnitude::Fock(n) => {
                let r2 = alpha[0].norm_sqr();
                if *n == 0 {
                    return math::exp(-r2);
                }
                if r2 == 0.0 {
                    return 0.0;
                }
                math::exp(-r2 + *n as f64 * math::ln(r2) - math::ln_factorial(*n as u64))
            }
            CoherentMagnitude::Expansion(e) => {
                let mut scratch = Vec::new();
                e.coherent_overlap(alpha, &mut scratch).norm_sqr()
            }
            CoherentMagnitude::Product(parts) => {
                let mut off = 0;
                let mut prod = 1.0;
                for (m, p) in parts {
                    prod *= p.prob(&alpha[off..off + m]);
                    off += m;
                }
                prod
            }
        }
    }
}

/// How the energy window is applied to two-mode random targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum WindowRule {
    /// Mean of the per-mode energies lies in the window.
    #[default]
    Mean,
    /// Every mode's energy lies in the window.
    EachMode,
}

pub const MAX_REJECTIONS: u64 = 100_000;

/// Rejection-samples `ψ ∝ Σ b_n |n⟩` with `b_n ~ N^C_2` over
/// `n ∈ {0..=cutoff}^M` until the energy lies in `[E_t − ε, E_t + ε]`.
pub fn sample_random_target(
    modes: usize,
    energy: f64,
    epsilon: f64,
    cutoff: usize,
    seed: u64,
    rule: WindowRule,
) -> Result<FockExpansion> {
    if !(1..=2).contains(&modes) {
        return Err(invalid("random targets support one or two modes"));
    }
    if epsilon.is_nan() || epsilon <= 0.0 || energy < 0.0 || energy > cutoff as f64 {
        return Err(invalid("need ε > 0 and 0 ≤ E_t ≤ cutoff"));
    }
    let len = dense_len(modes, cutoff)?;
    let mut r = rng::stream(seed, rng::domain::TARGET, 0);
    let mut coeffs = vec![C64::new(0.0, 0.0); len];
    let mut rejected = 0u64;
    loop {
        for c in coeffs.iter_mut() {
            *c = rng::complex_normal(&mut r, 2.0);
        }
        let norm = math::sqrt(coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>());
        coeffs.iter_mut().for_each(|c| *c /= norm);
        let e = FockExpansion { modes, cutoff, coeffs: coeffs.clone(), leak: 0.0 };
        let per_mode = e.energy_per_mode();
        let inside = |x: f64| (x - energy).abs() <= epsilon;
        let ok = match rule {
            WindowRule::Mean => inside(per_mode.iter().sum::<f64>() / modes as f64),
            WindowRule::EachMode => per_mode.iter().all(|&x| inside(x)),
        };
        if ok {
            let norm: f64 = e.coeffs.iter().map(|c| c.norm_sqr()).sum();
            return Ok(FockExpansion { leak: 1.0 - norm, ..e });
        }
        rejected += 1;
        if rejected >= MAX_REJECTIONS {
            return Err(Error::InfeasibleWindow(rejected));
        }
    }
}
