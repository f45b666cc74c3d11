//! Exact branch simulation of ECD circuits.
//!
//! A layer applies, for each mode `j` in turn, a qubit rotation
//! `U_R(θ_k, φ_k)` followed by `U_ECD(β_ℓ^{(j)})` on mode `j`, with
//! `k = M·ℓ + j` (zero-based). The output is a superposition of coherent
//! states labelled by a sign vector `s ∈ {±1}^{ML}` with `s_{ML} = −1` and
//! the final qubit bit `a`.
//!
//! φ is stored relabelled: the physical rotation axis angle is `φ + π/2`, so
//! `U_R = [[cos θ/2, −e^{−iφ} sin θ/2], [e^{iφ} sin θ/2, cos θ/2]]`. Do not
//! add π/2 again when building rotations from stored parameters.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::rng;
use crate::targets::PreparedTarget;
use crate::{SimConfig, C64};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CircuitParams {
    pub modes: usize,
    pub layers: usize,
    /// `β_ℓ^{(j)}` at `ℓ·M + j`.
    pub betas: Vec<C64>,
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
}

impl CircuitParams {
    pub fn new(modes: usize, layers: usize, betas: Vec<C64>, thetas: Vec<f64>, phis: Vec<f64>) -> Result<Self> {
        let p = CircuitParams { modes, layers, betas, thetas, phis };
        p.validate()?;
        Ok(p)
    }

    pub fn zeros(modes: usize, layers: usize) -> Self {
        let k = modes * layers;
        CircuitParams { modes, layers, betas: vec![C64::new(0.0, 0.0); k], thetas: vec![0.0; k], phis: vec![0.0; k] }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.modes * self.layers;
        if self.modes == 0 || self.layers == 0 {
            return Err(invalid("mode and layer counts must be positive"));
        }
        if self.betas.len() != k || self.thetas.len() != k || self.phis.len() != k {
            return Err(invalid(format!("expected {k} betas, thetas and phis")));
        }
        let finite = self.betas.iter().all(|b| b.re.is_finite() && b.im.is_finite())
            && self.thetas.iter().chain(&self.phis).all(|x| x.is_finite());
        if !finite {
            return Err(invalid("circuit parameters must be finite"));
        }
        Ok(())
    }

    /// Number of rotation (and ECD) blocks, `ML`.
    pub fn blocks(&self) -> usize {
        self.modes * self.layers
    }

    pub fn beta(&self, layer: usize, mode: usize) -> C64 {
        self.betas[layer * self.modes + mode]
    }

    /// `Σ_ℓ |β_ℓ^{(j)}|²` for each mode.
    pub fn circuit_energy(&self) -> Vec<f64> {
        (0..self.modes).map(|j| (0..self.layers).map(|l| self.beta(l, j).norm_sqr()).sum()).collect()
    }
}

/// Qubit rotation in the stored (relabelled) φ convention.
#[inline]
pub fn rotation(theta: f64, phi: f64) -> [[C64; 2]; 2] {
    let (s, c) = math::sin_cos(0.5 * theta);
    let e = math::cis(phi);
    [[C64::new(c, 0.0), -e.conj() * s], [e * s, C64::new(c, 0.0)]]
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsembleSpec {
    pub modes: usize,
    pub layers: usize,
    /// Mean output energy per mode.
    pub energy: f64,
}

impl EnsembleSpec {
    pub fn new(modes: usize, layers: usize, energy: f64) -> Result<Self> {
        if modes == 0 || layers == 0 || energy.is_nan() || energy <= 0.0 || !energy.is_finite() {
            return Err(invalid("ensemble needs M ≥ 1, L ≥ 1 and E > 0"));
        }
        Ok(EnsembleSpec { modes, layers, energy })
    }
}

/// Draws a circuit: `Re β, Im β ~ N(0, E/2L)`, θ and φ uniform on `[0, 2π)`.
pub fn sample_circuit<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> CircuitParams {
    let k = spec.modes * spec.layers;
    let var = spec.energy / spec.layers as f64;
    let betas = (0..k).map(|_| rng::complex_normal(rng, var)).collect();
    let thetas = (0..k).map(|_| rng::uniform_angle(rng)).collect();
    let phis = (0..k).map(|_| rng::uniform_angle(rng)).collect();
    CircuitParams { modes: spec.modes, layers: spec.layers, betas, thetas, phis }
}

/// Circuit number `index` of the stream `seed`.
pub fn sample_circuit_indexed(spec: &EnsembleSpec, seed: u64, index: u64) -> CircuitParams {
    let mut r = rng::stream(seed, rng::domain::CIRCUIT, index);
    sample_circuit(spec, &mut r)
}

/// Output state as `Σ_{s,a} v_{s,a} |a⟩ ⊗ |α_{s,a}⟩`, stored by sign
/// pattern index then qubit bit: entry `2·idx + a`. Bit `ML−2−k` of `idx` is
/// set when `s_k = +1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchState {
    pub modes: usize,
    pub bits: Vec<u8>,
    pub v: Vec<C64>,
    /// Displacements, `modes` entries per branch.
    pub alpha: Vec<C64>,
}

impl BranchState {
    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn alpha_of(&self, i: usize) -> &[C64] {
        &self.alpha[i * self.modes..(i + 1) * self.modes]
    }

    pub fn weight_norm_sqr(&self) -> f64 {
        self.v.iter().map(|x| x.norm_sqr()).sum()
    }
}

fn check_budget(blocks: usize, cfg: &SimConfig) -> Result<()> {
    let needed = if blocks >= 64 { u64::MAX } else { 1u64 << (blocks - 1) };
    if needed > cfg.branch_budget {
        return Err(Error::BranchBudget { needed, limit: cfg.branch_budget });
    }
    Ok(())
}

/// Sequential evolution of `U(x)|0⟩_q ⊗ |0⟩^M`.
pub fn run_circuit(p: &CircuitParams, cfg: &SimConfig) -> Result<BranchState> {
    p.validate()?;
    let kk = p.blocks();
    check_budget(kk, cfg)?;
    let m = p.modes;
    let total = 1usize << kk;
    let mut v = Vec::with_capacity(total);
    let mut alpha = Vec::with_capacity(total * m);
    v.push(C64::new(1.0, 0.0));
    alpha.extend(core::iter::repeat_n(C64::new(0.0, 0.0), m));
    let mut v2: Vec<C64> = Vec::with_capacity(total);
    let mut alpha2: Vec<C64> = Vec::with_capacity(total * m);
    for k in 0..kk {
        let j = k % m;
        let beta = p.betas[k];
        let r = rotation(p.thetas[k], p.phis[k]);
        let n = v.len();
        v2.clear();
        alpha2.clear();
        for i in 0..n {
            // After the first block the qubit bit is the last step sign.
            let a = if k == 0 { 0 } else { i & 1 };
            let amp = v[i];
            let al = &alpha[i * m..(i + 1) * m];
            let x = al[j];
            let ph = (beta * x.conj()).im;
            // σ = −1: rotated component 1 displaced by −β onto qubit 0.
            v2.push(amp * r[1][a] * math::cis(-ph));
            alpha2.extend_from_slice(al);
            let last = alpha2.len() - m + j;
            alpha2[last] = x - beta;
            // σ = +1: rotated component 0 displaced by +β onto qubit 1.
            v2.push(amp * r[0][a] * math::cis(ph));
            alpha2.extend_from_slice(al);
            let last = alpha2.len() - m + j;
            alpha2[last] = x + beta;
        }
        core::mem::swap(&mut v, &mut v2);
        core::mem::swap(&mut alpha, &mut alpha2);
    }
    let mask = (1usize << (kk - 1)) - 1;
    let mut out_v = vec![C64::new(0.0, 0.0); total];
    let mut out_a = vec![C64::new(0.0, 0.0); total * m];
    let mut bits = vec![0u8; total];
    for i in 0..total {
        let a = i & 1;
        let prefix = i >> 1;
        let s_idx = if a == 0 { prefix } else { !prefix & mask };
        let pos = 2 * s_idx + a;
        out_v[pos] = v[i];
        out_a[pos * m..(pos + 1) * m].copy_from_slice(&alpha[i * m..(i + 1) * m]);
        bits[pos] = a as u8;
    }
    Ok(BranchState { modes: m, bits, v: out_v, alpha: out_a })
}

/// Sign vector of length `len` for pattern index `idx` (last entry −1).
pub fn sign_vector(idx: usize, len: usize) -> Vec<i8> {
    (0..len)
        .map(|k| if k + 1 == len { -1 } else if (idx >> (len - 2 - k)) & 1 == 1 { 1 } else { -1 })
        .collect()
}

/// Closed-form weight `w_{s,a} = e^{iΦ_{s,a}} T_{s,a}` of the branch with
/// sign vector `s` and final bit `a`, for a one-mode circuit of depth
/// `s.len()` (or a multi-mode circuit flattened in block order).
pub fn closed_form_weight(s: &[i8], a: u8, thetas: &[f64], phis: &[f64]) -> Result<C64> {
    let n = s.len();
    if n == 0 || thetas.len() != n || phis.len() != n {
        return Err(invalid("sign vector and angle lengths must match"));
    }
    if s[n - 1] != -1 {
        return Err(Error::Contract("the last sign must be −1".into()));
    }
    if s.iter().any(|&x| x != 1 && x != -1) || a > 1 {
        return Err(invalid("signs must be ±1 and the bit 0 or 1"));
    }
    let pa = if a == 0 { 1.0 } else { -1.0 };
    let mut phase = 0.0;
    let mut t = 1.0;
    let mut n_s = (n - 1) as f64;
    for l in 0..n {
        let sl = s[l] as f64;
        let ds = if l == 0 { (sl + 1.0) / 2.0 } else { (s[l] - s[l - 1]).unsigned_abs() as f64 / 2.0 };
        if l > 0 {
            n_s -= ds;
            t *= math::sin((thetas[l] + ds * PI) / 2.0);
        }
        let delta = if s[l] == 1 { PI } else { 0.0 };
        phase += pa * (ds - 1.0) * (sl * phis[l] - delta);
    }
    t *= math::sin(thetas[0] / 2.0 + (pa * s[0] as f64 + 1.0) * PI / 4.0);
    if a == 1 {
        phase += n_s * PI + phis[0];
    }
    Ok(math::cis(phase) * t)
}

/// Braiding phase `χ_s = Σ_{ℓ<ℓ'} s_ℓ s_ℓ' (Re β_ℓ Im β_ℓ' − Im β_ℓ Re β_ℓ')`.
pub fn branch_phase(s: &[i8], betas: &[C64]) -> Result<f64> {
    if s.len() != betas.len() {
        return Err(invalid("sign vector and displacement lengths must match"));
    }
    // Prefix sums turn the double sum into a single pass.
    let mut acc = C64::new(0.0, 0.0);
    let mut chi = 0.0;
    for (sl, b) in s.iter().zip(betas) {
        let sb = *b * *sl as f64;
        chi += acc.re * sb.im - acc.im * sb.re;
        acc += sb;
    }
    Ok(chi)
}

/// Branch state assembled from the closed-form weights and phases.
pub fn closed_form_state(p: &CircuitParams, cfg: &SimConfig) -> Result<BranchState> {
    p.validate()?;
    let kk = p.blocks();
    check_budget(kk, cfg)?;
    let m = p.modes;
    let total = 1usize << kk;
    let mut out = BranchState { modes: m, bits: vec![0; total], v: vec![C64::new(0.0, 0.0); total], alpha: vec![C64::new(0.0, 0.0); total * m] };
    let mut sub_s = vec![0i8; p.layers];
    let mut sub_b = vec![C64::new(0.0, 0.0); p.layers];
    for idx in 0..total / 2 {
        let s = sign_vector(idx, kk);
        let mut chi = 0.0;
        let mut disp = vec![C64::new(0.0, 0.0); m];
        for j in 0..m {
            for l in 0..p.layers {
                sub_s[l] = s[l * m + j];
                sub_b[l] = p.beta(l, j);
                disp[j] += sub_b[l] * sub_s[l] as f64;
            }
            chi += branch_phase(&sub_s, &sub_b)?;
        }
        for a in 0..2u8 {
            let w = closed_form_weight(&s, a, &p.thetas, &p.phis)?;
            let pos = 2 * idx + a as usize;
            let sign = if a == 0 { 1.0 } else { -1.0 };
            out.bits[pos] = a;
            out.v[pos] = w * math::cis(chi);
            for j in 0..m {
                out.alpha[pos * m + j] = disp[j] * sign;
            }
        }
    }
    Ok(out)
}

/// `⟨n|α⟩` for `n = 0..out.len()`.
pub fn coherent_coeffs(alpha: C64, out: &mut [C64]) {
    if out.is_empty() {
        return;
    }
    let half = 0.5 * alpha.norm_sqr();
    if half < 700.0 {
        let mut c = C64::new(math::exp(-half), 0.0);
        out[0] = c;
        for k in 1..out.len() {
            c = c * alpha / math::sqrt(k as f64);
            out[k] = c;
        }
        return;
    }
    // e^{−|α|²/2} underflows; walk the log-magnitude until terms are
    // representable, then continue linearly.
    let la = math::ln(alpha.norm());
    let arg = math::atan2(alpha.im, alpha.re);
    let mut lm = -half;
    let mut k = 0;
    while k < out.len() {
        if k > 0 {
            lm += la - 0.5 * math::ln(k as f64);
        }
        if lm > -700.0 {
            let mut c = math::cis(k as f64 * arg) * math::exp(lm);
            out[k] = c;
            for q in k + 1..out.len() {
                c = c * alpha / math::sqrt(q as f64);
                out[q] = c;
            }
            return;
        }
        out[k] = C64::new(0.0, 0.0);
        k += 1;
    }
}

/// `(⟨0|_q ⊗ ⟨ψ|) |state⟩`.
pub fn overlap_prepared(state: &BranchState, target: &PreparedTarget) -> Result<C64> {
    if target.modes() != state.modes {
        return Err(invalid("target and circuit mode counts differ"));
    }
    let mut scratch = Vec::new();
    let mut acc = C64::new(0.0, 0.0);
    for i in (0..state.len()).step_by(2) {
        debug_assert_eq!(state.bits[i], 0);
        let v = state.v[i];
        if v == C64::new(0.0, 0.0) {
            continue;
        }
        acc += v * target.coherent_overlap(state.alpha_of(i), &mut scratch);
    }
    Ok(acc)
}

/// Overlap with a target expanded at an automatically chosen cutoff.
pub fn overlap(state: &BranchState, target: &crate::targets::TargetSpec, cfg: &SimConfig) -> Result<C64> {
    let prepared = PreparedTarget::auto(target, cfg)?;
    overlap_prepared(state, &prepared)
}

/// Coherent-state overlap `⟨b|a⟩` of multi-mode displacements.
#[inline]
fn coherent_inner(b: &[C64], a: &[C64]) -> C64 {
    let mut e = C64::new(0.0, 0.0);
    for (x, y) in b.iter().zip(a) {
        e += -0.5 * x.norm_sqr() - 0.5 * y.norm_sqr() + x.conj() * y;
    }
    e.exp()
}

/// Per-mode `⟨m_j† m_j⟩` of the branch state, including cross terms.
pub fn state_energy(state: &BranchState) -> Vec<f64> {
    let m = state.modes;
    let mut e = vec![0.0; m];
    let n = state.len();
    for i in 0..n {
        let ai = state.alpha_of(i);
        for k in (i..n).step_by(2) {
            let ak = state.alpha_of(k);
            let w = state.v[k].conj() * state.v[i] * coherent_inner(ak, ai);
            let factor = if k == i { 1.0 } else { 2.0 };
            for j in 0..m {
                e[j] += factor * (w * ak[j].conj() * ai[j]).re;
            }
        }
    }
    e
}
