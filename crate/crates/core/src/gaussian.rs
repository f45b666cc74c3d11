//! Pure Gaussian states in the quadrature picture.
//!
//! Quadratures are `q = m + m†`, `p = i(m† − m)`, ordered
//! `(q1, p1, …, qM, pM)`; the vacuum covariance matrix is the identity.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::linalg::{CMat, Mat};
use crate::math;
use crate::rng;
use crate::C64;

/// Parameters of `D(γ) R(τ) S(ζ)|0⟩` with `R(τ) = exp(−iτ m†m)` and
/// `S(ζ) = exp[ζ(m² − m†²)/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OneModeGaussianParams {
    pub gamma: C64,
    pub tau: f64,
    pub zeta: f64,
}

impl OneModeGaussianParams {
    pub fn new(gamma: C64, tau: f64, zeta: f64) -> Self {
        OneModeGaussianParams { gamma, tau, zeta }
    }

    pub fn coherent(gamma: C64) -> Self {
        Self::new(gamma, 0.0, 0.0)
    }

    pub fn vacuum() -> Self {
        Self::coherent(C64::new(0.0, 0.0))
    }

    pub fn is_finite(&self) -> bool {
        self.gamma.re.is_finite() && self.gamma.im.is_finite() && self.tau.is_finite() && self.zeta.is_finite()
    }

    /// Mean photon number `|γ|² + sinh²ζ`.
    pub fn energy(&self) -> f64 {
        let s = math::sinh(self.zeta);
        self.gamma.norm_sqr() + s * s
    }

    /// `|⟨α|ψ⟩|²` by the one-mode closed form
    /// `sech ζ · exp(−(1+κ₁)x² − (1−κ₁)y² + 2κ₂xy)`.
    pub fn coherent_fidelity(&self, alpha: C64) -> f64 {
        let t = math::tanh(self.zeta);
        let (s2, c2) = math::sin_cos(2.0 * self.tau);
        let k1 = c2 * t;
        let k2 = s2 * t;
        let x = self.gamma.re - alpha.re;
        let y = self.gamma.im - alpha.im;
        math::sech(self.zeta) * math::exp(-(1.0 + k1) * x * x - (1.0 - k1) * y * y + 2.0 * k2 * x * y)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaussianState {
    modes: usize,
    mean: Vec<f64>,
    cov: Mat,
}

impl GaussianState {
    pub fn new(mean: Vec<f64>, cov: Mat) -> Result<GaussianState> {
        if !mean.len().is_multiple_of(2) || mean.is_empty() || cov.dim() != mean.len() {
            return Err(invalid("mean and covariance dimensions must be 2M and 2M×2M"));
        }
        let s = GaussianState { modes: mean.len() / 2, mean, cov };
        s.check_symmetric(1e-12)?;
        Ok(s)
    }

    pub fn vacuum(modes: usize) -> GaussianState {
        GaussianState { modes, mean: vec![0.0; 2 * modes], cov: Mat::identity(2 * modes) }
    }

    pub fn coherent(alpha: &[C64]) -> GaussianState {
        let mut s = GaussianState::vacuum(alpha.len());
        for (j, a) in alpha.iter().enumerate() {
            s.mean[2 * j] = 2.0 * a.re;
            s.mean[2 * j + 1] = 2.0 * a.im;
        }
        s
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &Mat {
        &self.cov
    }

    /// Mean photon number of each mode,
    /// `(q̄² + p̄²)/4 + (V_qq + V_pp − 2)/4`.
    pub fn energy_per_mode(&self) -> Vec<f64> {
        (0..self.modes)
            .map(|j| {
                let (q, p) = (self.mean[2 * j], self.mean[2 * j + 1]);
                (q * q + p * p) / 4.0 + (self.cov[(2 * j, 2 * j)] + self.cov[(2 * j + 1, 2 * j + 1)] - 2.0) / 4.0
            })
            .collect()
    }

    pub fn total_energy(&self) -> f64 {
        self.energy_per_mode().iter().sum()
    }

    fn check_symmetric(&self, rel: f64) -> Result<()> {
        let n = self.cov.dim();
        let scale = self.cov.max_abs().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (self.cov[(i, j)] - self.cov[(j, i)]).abs() > rel * scale {
                    return Err(invalid(format!("covariance not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(())
    }

    pub fn is_pure(&self, rel: f64) -> bool {
        (self.cov.det() - 1.0).abs() <= rel
    }

    /// `max |(ΩV)² + I|`; zero exactly when every symplectic eigenvalue is one.
    pub fn purity_defect(&self) -> f64 {
        let n = 2 * self.modes;
        let mut omega_v = Mat::zeros(n);
        for j in 0..self.modes {
            for c in 0..n {
                // Ω = ⊕ [[0, 1], [−1, 0]]
                omega_v[(2 * j, c)] = self.cov[(2 * j + 1, c)];
                omega_v[(2 * j + 1, c)] = -self.cov[(2 * j, c)];
            }
        }
        omega_v.mul(&omega_v).add(&Mat::identity(n)).max_abs()
    }

    /// Applies the symplectic-orthogonal image of the passive unitary
    /// `m_i → Σ_j U_ij m_j`.
    pub fn apply_passive(&self, u: &CMat) -> GaussianState {
        let m = self.modes;
        let mut s = Mat::zeros(2 * m);
        for i in 0..m {
            for j in 0..m {
                let x = u.at(i, j);
                s[(2 * i, 2 * j)] = x.re;
                s[(2 * i, 2 * j + 1)] = -x.im;
                s[(2 * i + 1, 2 * j)] = x.im;
                s[(2 * i + 1, 2 * j + 1)] = x.re;
            }
        }
        let cov = s.mul(&self.cov).mul(&s.transpose());
        let cov = cov.add(&cov.transpose()).scale(0.5);
        GaussianState { modes: m, mean: s.mul_vec(&self.mean), cov }
    }

    /// Direct sum of product-state factors.
    pub fn direct_sum(parts: &[GaussianState]) -> GaussianState {
        let modes: usize = parts.iter().map(|p| p.modes).sum();
        let mut mean = Vec::with_capacity(2 * modes);
        let mut cov = Mat::zeros(2 * modes);
        let mut off = 0;
        for p in parts {
            mean.extend_from_slice(&p.mean);
            let n = 2 * p.modes;
            for i in 0..n {
                for j in 0..n {
                    cov[(off + i, off + j)] = p.cov[(i, j)];
                }
            }
            off += n;
        }
        GaussianState { modes, mean, cov }
    }

    /// One-mode parameters `(γ, τ, ζ)` of a single-mode pure state, with
    /// `ζ ≥ 0`.
    pub fn one_mode_params(&self) -> Result<OneModeGaussianParams> {
        if self.modes != 1 {
            return Err(invalid("one-mode parameters need a single-mode state"));
        }
        let (a, b, c) = (self.cov[(0, 0)], self.cov[(1, 1)], self.cov[(0, 1)]);
        let ch = 0.5 * (a + b);
        let zeta = 0.5 * math::ln(ch + math::sqrt((ch * ch - 1.0).max(0.0)));
        // V22 − V11 = 2 sinh2ζ cos2τ, V12 = sinh2ζ sin2τ
        let tau = if zeta > 0.0 { 0.5 * math::atan2(c, 0.5 * (b - a)) } else { 0.0 };
        Ok(OneModeGaussianParams::new(C64::new(self.mean[0] / 2.0, self.mean[1] / 2.0), tau, zeta))
    }
}

pub fn one_mode_gaussian(p: &OneModeGaussianParams) -> GaussianState {
    let (z2, t2) = (2.0 * p.zeta, 2.0 * p.tau);
    let (ch, sh) = (math::cosh(z2), math::sinh(z2));
    let (s, c) = math::sin_cos(t2);
    let cov = Mat::from_rows(2, vec![ch - sh * c, s * sh, s * sh, ch + sh * c]);
    GaussianState { modes: 1, mean: vec![2.0 * p.gamma.re, 2.0 * p.gamma.im], cov }
}

/// Two-mode squeezed vacuum.
pub fn tmsv(zeta: f64) -> GaussianState {
    let (ch, sh) = (math::cosh(2.0 * zeta), math::sinh(2.0 * zeta));
    let mut cov = Mat::identity(4).scale(ch);
    cov[(0, 2)] = sh;
    cov[(2, 0)] = sh;
    cov[(1, 3)] = -sh;
    cov[(3, 1)] = -sh;
    GaussianState { modes: 2, mean: vec![0.0; 4], cov }
}

/// Haar-random `n×n` unitary.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    loop {
        let mut z = CMat::zeros(n);
        for x in z.data.iter_mut() {
            *x = rng::complex_normal(rng, 1.0);
        }
        if let Ok(q) = z.qr_unitary() {
            return q;
        }
    }
}

/// Squeezed vacuum of strength `r` on mode 1, vacua elsewhere, mixed by a
/// Haar-random passive unitary.
pub fn random_distributed_squeezed(modes: usize, r: f64, seed: u64) -> Result<GaussianState> {
    if modes == 0 {
        return Err(invalid("mode count must be positive"));
    }
    let mut parts = vec![one_mode_gaussian(&OneModeGaussianParams::new(C64::new(0.0, 0.0), 0.0, r))];
    parts.extend((1..modes).map(|_| GaussianState::vacuum(1)));
    let base = GaussianState::direct_sum(&parts);
    let mut g = rng::stream(seed, rng::domain::GAUSSIAN, 0);
    let u = haar_unitary(modes, &mut g);
    Ok(base.apply_passive(&u))
}

/// Fidelity of two Gaussian states, at least one of them pure:
/// `2^M / √det(Va+Vb) · exp(−½ dᵀ(Va+Vb)⁻¹ d)`.
pub fn fidelity_pure(a: &GaussianState, b: &GaussianState) -> Result<f64> {
    if a.modes != b.modes {
        return Err(invalid("mode counts differ"));
    }
    let sum = a.cov.add(&b.cov);
    let lu = sum.lu()?;
    let det = lu.det();
    if det <= 0.0 {
        return Err(Error::Singular);
    }
    let d: Vec<f64> = a.mean.iter().zip(&b.mean).map(|(x, y)| x - y).collect();
    let x = lu.solve(&d);
    let q: f64 = d.iter().zip(&x).map(|(u, v)| u * v).sum();
    let f = math::powi(2.0, a.modes as i32) / math::sqrt(det) * math::exp(-0.5 * q);
    Ok(f.min(1.0))
}

/// Precomputed `|⟨ψ|α⟩|²` for a fixed pure Gaussian `ψ` and coherent probes.
#[derive(Debug, Clone)]
pub struct CoherentProbe {
    mean: Vec<f64>,
    inv: Mat,
    prefactor: f64,
}

impl CoherentProbe {
    pub fn new(psi: &GaussianState) -> Result<CoherentProbe> {
        let sum = psi.cov.add(&Mat::identity(2 * psi.modes));
        let lu = sum.lu()?;
        let det = lu.det();
        if det <= 0.0 {
            return Err(Error::Singular);
        }
        Ok(CoherentProbe {
            mean: psi.mean.clone(),
            inv: lu.inverse(),
            prefactor: math::powi(2.0, psi.modes as i32) / math::sqrt(det),
        })
    }

    pub fn fidelity(&self, alpha: &[C64]) -> f64 {
        let n = self.mean.len();
        let mut d = [0.0f64; 128];
        let d = if n <= 128 { &mut d[..n] } else { return self.fidelity_slow(alpha) };
        for (j, a) in alpha.iter().enumerate() {
            d[2 * j] = self.mean[2 * j] - 2.0 * a.re;
            d[2 * j + 1] = self.mean[2 * j + 1] - 2.0 * a.im;
        }
        self.prefactor * math::exp(-0.5 * self.inv.quad_form(d))
    }

    fn fidelity_slow(&self, alpha: &[C64]) -> f64 {
        let d: Vec<f64> = (0..self.mean.len())
            .map(|i| self.mean[i] - 2.0 * if i % 2 == 0 { alpha[i / 2].re } else { alpha[i / 2].im })
            .collect();
        self.prefactor * math::exp(-0.5 * self.inv.quad_form(&d))
    }
}
