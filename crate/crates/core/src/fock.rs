//! Truncated Fock-space simulation of ECD circuits.
//!
//! States live in `C² ⊗ (C^{n_c+1})^{⊗M}`, qubit index most significant.
//! Norm lost to the cutoff at each ECD gate is accumulated as `leak`.

use alloc::vec;
use alloc::vec::Vec;

use crate::circuit::{rotation, CircuitParams};
use crate::error::{invalid, Error, Result};
use crate::math;
use crate::targets::FockExpansion;
use crate::{SimConfig, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// `⟨m|D(β)|n⟩` for `m, n ≤ cutoff`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementMatrix {
    pub beta: C64,
    pub cutoff: usize,
    pub entries: Vec<C64>,
}

impl DisplacementMatrix {
    /// For `m = n + k ≥ n`,
    /// `d_{m,n} = √(n!/m!) β^k e^{−|β|²/2} L_n^{(k)}(|β|²)`, evaluated along
    /// each subdiagonal with the normalised Laguerre recurrence
    /// `√((n+1)(n+k+1)) f_{n+1} = (2n+1+k−x) f_n − √(n(n+k)) f_{n−1}`;
    /// the upper triangle follows from `d_{m,n} = (−1)^{n−m} conj(d_{n,m})`.
    pub fn new(beta: C64, cutoff: usize) -> DisplacementMatrix {
        let d = cutoff + 1;
        let mut e = vec![ZERO; d * d];
        let x = beta.norm_sqr();
        let (ln_r, arg) = if x > 0.0 { (0.5 * math::ln(x), math::atan2(beta.im, beta.re)) } else { (f64::NEG_INFINITY, 0.0) };
        for k in 0..d {
            let kf = k as f64;
            // β^k e^{−x/2} / √k!
            let ln_mag = if k == 0 { -0.5 * x } else { kf * ln_r - 0.5 * x - 0.5 * math::ln_factorial(k as u64) };
            let lead = C64::from_polar(math::exp(ln_mag), kf * arg);
            let (mut prev, mut cur) = (0.0, 1.0);
            for n in 0..d - k {
                e[(n + k) * d + n] = lead * cur;
                let nf = n as f64;
                let next = ((2.0 * nf + 1.0 + kf - x) * cur - math::sqrt(nf * (nf + kf)) * prev)
                    / math::sqrt((nf + 1.0) * (nf + kf + 1.0));
                prev = cur;
                cur = next;
            }
        }
        for m in 0..d {
            for n in m + 1..d {
                let v = e[n * d + m].conj();
                e[m * d + n] = if (n - m) % 2 == 0 { v } else { -v };
            }
        }
        DisplacementMatrix { beta, cutoff, entries: e }
    }

    pub fn dim(&self) -> usize {
        self.cutoff + 1
    }

    #[inline]
    pub fn at(&self, m: usize, n: usize) -> C64 {
        self.entries[m * self.dim() + n]
    }

    /// True when `|β|² > cutoff/4`, where truncation error is severe.
    pub fn severely_truncated(&self) -> bool {
        self.beta.norm_sqr() > self.cutoff as f64 / 4.0
    }
}

/// Applies `D` (or `D†`) along one mode axis of a tensor with layout
/// `(outer, dim, inner)`.
fn apply_axis(dm: &DisplacementMatrix, adjoint: bool, x: &[C64], out: &mut [C64], inner: usize) {
    let d = dm.dim();
    let e = &dm.entries;
    let block = d * inner;
    for (xb, ob) in x.chunks_exact(block).zip(out.chunks_exact_mut(block)) {
        ob.iter_mut().for_each(|o| *o = ZERO);
        if inner == 1 {
            if adjoint {
                for n in 0..d {
                    let xn = xb[n];
                    if xn == ZERO {
                        continue;
                    }
                    let row = &e[n * d..(n + 1) * d];
                    for (o, r) in ob.iter_mut().zip(row) {
                        *o += r.conj() * xn;
                    }
                }
            } else {
                for m in 0..d {
                    let row = &e[m * d..(m + 1) * d];
                    ob[m] = row.iter().zip(xb.iter()).map(|(r, v)| r * v).sum();
                }
            }
        } else {
            for m in 0..d {
                let orow = m * inner;
                for n in 0..d {
                    let coef = if adjoint { e[n * d + m].conj() } else { e[m * d + n] };
                    if coef == ZERO {
                        continue;
                    }
                    let xrow = &xb[n * inner..(n + 1) * inner];
                    for (o, v) in ob[orow..orow + inner].iter_mut().zip(xrow) {
                        *o += coef * v;
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    pub modes: usize,
    /// Highest retained photon number per mode.
    pub cutoff: usize,
    /// Qubit bit is the most significant index.
    pub amps: Vec<C64>,
    pub leak: f64,
}

impl FockVector {
    fn vacuum(modes: usize, cutoff: usize) -> FockVector {
        let half = (cutoff + 1).pow(modes as u32);
        let mut amps = vec![ZERO; 2 * half];
        amps[0] = C64::new(1.0, 0.0);
        FockVector { modes, cutoff, amps, leak: 0.0 }
    }

    pub fn half_len(&self) -> usize {
        self.amps.len() / 2
    }

    pub fn qubit_block(&self, a: usize) -> &[C64] {
        let h = self.half_len();
        &self.amps[a * h..(a + 1) * h]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|x| x.norm_sqr()).sum()
    }

    /// Per-mode `⟨m_j† m_j⟩` of the retained amplitudes.
    pub fn energy_per_mode(&self) -> Vec<f64> {
        mode_energy(self.modes, self.cutoff, &self.amps)
    }
}

fn mode_energy(modes: usize, cutoff: usize, amps: &[C64]) -> Vec<f64> {
    let d = cutoff + 1;
    let half = amps.len() / 2;
    let mut e = vec![0.0; modes];
    for (idx, x) in amps.iter().enumerate() {
        let p = x.norm_sqr();
        if p == 0.0 {
            continue;
        }
        let mut rest = idx % half;
        for j in (0..modes).rev() {
            e[j] += (rest % d) as f64 * p;
            rest /= d;
        }
    }
    e
}

/// Default cutoff heuristic `max(20, ⌈4E + 6√E⌉)`.
pub fn default_cutoff(energy: f64) -> usize {
    let c = math::ceil(4.0 * energy + 6.0 * math::sqrt(energy.max(0.0)));
    (c as usize).max(20)
}

fn check_memory(modes: usize, cutoff: usize, cfg: &SimConfig) -> Result<usize> {
    let mut half: u64 = 1;
    for _ in 0..modes {
        half = half.saturating_mul(cutoff as u64 + 1);
    }
    let needed = half.saturating_mul(2);
    if needed > cfg.fock_budget {
        return Err(Error::MemoryBudget { needed, limit: cfg.fock_budget });
    }
    Ok(half as usize)
}

fn apply_rotation(r: &[[C64; 2]; 2], amps: &mut [C64]) {
    let h = amps.len() / 2;
    let (lo, hi) = amps.split_at_mut(h);
    for (x0, x1) in lo.iter_mut().zip(hi.iter_mut()) {
        let (a, b) = (*x0, *x1);
        *x0 = r[0][0] * a + r[0][1] * b;
        *x1 = r[1][0] * a + r[1][1] * b;
    }
}

/// `U_ECD = D(β) ⊗ |1⟩⟨0| + D(−β) ⊗ |0⟩⟨1|` on mode `j`. In the truncated
/// space `D(−β)` is exactly the adjoint of the truncated `D(β)`.
fn apply_ecd(dm: &DisplacementMatrix, modes: usize, j: usize, x: &[C64], out: &mut [C64]) {
    let d = dm.dim();
    let h = x.len() / 2;
    let inner = d.pow((modes - 1 - j) as u32);
    let (x0, x1) = x.split_at(h);
    let (o0, o1) = out.split_at_mut(h);
    apply_axis(dm, false, x0, o1, inner);
    apply_axis(dm, true, x1, o0, inner);
}

/// Inverse direction of [`apply_ecd`]: `U_ECD†`.
fn apply_ecd_adjoint(dm: &DisplacementMatrix, modes: usize, j: usize, x: &[C64], out: &mut [C64]) {
    let d = dm.dim();
    let h = x.len() / 2;
    let inner = d.pow((modes - 1 - j) as u32);
    let (x0, x1) = x.split_at(h);
    let (o0, o1) = out.split_at_mut(h);
    apply_axis(dm, true, x1, o0, inner);
    apply_axis(dm, false, x0, o1, inner);
}

fn norm_sqr(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

/// Simulates the circuit on `|0⟩_q ⊗ |0⟩^M` at photon cutoff `cutoff`.
pub fn run_circuit_fock(p: &CircuitParams, cutoff: usize, cfg: &SimConfig) -> Result<FockVector> {
    p.validate()?;
    if cutoff == 0 {
        return Err(invalid("cutoff must be at least 1"));
    }
    check_memory(p.modes, cutoff, cfg)?;
    let mut s = FockVector::vacuum(p.modes, cutoff);
    let mut buf = vec![ZERO; s.amps.len()];
    let mut norm = 1.0;
    for k in 0..p.blocks() {
        apply_rotation(&rotation(p.thetas[k], p.phis[k]), &mut s.amps);
        let dm = DisplacementMatrix::new(p.betas[k], cutoff);
        apply_ecd(&dm, p.modes, k % p.modes, &s.amps, &mut buf);
        core::mem::swap(&mut s.amps, &mut buf);
        let after = norm_sqr(&s.amps);
        s.leak += (norm - after).max(0.0);
        norm = after;
        if s.leak > cfg.fock_leak_bound {
            return Err(Error::Leak { leak: s.leak, bound: cfg.fock_leak_bound });
        }
    }
    Ok(s)
}

/// `|(⟨0|_q ⊗ ⟨ψ|) |state⟩|²`, contracted over the common cutoff range.
pub fn cost_fock(state: &FockVector, target: &FockExpansion) -> Result<f64> {
    Ok(overlap_fock(state, target)?.norm_sqr())
}

pub fn overlap_fock(state: &FockVector, target: &FockExpansion) -> Result<C64> {
    if state.modes != target.modes {
        return Err(invalid("target and state mode counts differ"));
    }
    Ok(target.inner(state.cutoff, state.qubit_block(0)))
}

/// Forward and backward sweep of one circuit that gives the exact
/// amplitude `⟨0,ψ|U|0,0⟩` for any change of a single block's parameters
/// at the price of one block application.
#[derive(Debug, Clone)]
pub struct FockSweep {
    modes: usize,
    cutoff: usize,
    /// State entering block `k`.
    before: Vec<Vec<C64>>,
    /// Co-state leaving block `k`: `(U_K ⋯ U_{k+1})† |0,ψ⟩`.
    after: Vec<Vec<C64>>,
    /// `⟨η_k^a | ψ_{k−1}^b⟩` with `η_k = U_ECD,k† χ_k`.
    gram: Vec<[[C64; 2]; 2]>,
    amplitude: C64,
    output: FockVector,
}

impl FockSweep {
    pub fn new(p: &CircuitParams, target: &FockExpansion, cutoff: usize, cfg: &SimConfig) -> Result<FockSweep> {
        p.validate()?;
        if target.modes != p.modes {
            return Err(invalid("target and circuit mode counts differ"));
        }
        let half = check_memory(p.modes, cutoff, cfg)?;
        let kk = p.blocks();
        let m = p.modes;
        let mut mats = Vec::with_capacity(kk);
        let mut before = Vec::with_capacity(kk);
        let mut state = FockVector::vacuum(m, cutoff);
        let mut buf = vec![ZERO; 2 * half];
        let mut norm = 1.0;
        for k in 0..kk {
            before.push(state.amps.clone());
            apply_rotation(&rotation(p.thetas[k], p.phis[k]), &mut state.amps);
            let dm = DisplacementMatrix::new(p.betas[k], cutoff);
            apply_ecd(&dm, m, k % m, &state.amps, &mut buf);
            core::mem::swap(&mut state.amps, &mut buf);
            let after = norm_sqr(&state.amps);
            state.leak += (norm - after).max(0.0);
            norm = after;
            mats.push(dm);
        }
        if state.leak > cfg.fock_leak_bound {
            return Err(Error::Leak { leak: state.leak, bound: cfg.fock_leak_bound });
        }
        let t = target.recut(cutoff)?;
        let mut chi = vec![ZERO; 2 * half];
        chi[..half].copy_from_slice(&t.coeffs);
        let amplitude: C64 = chi.iter().zip(&state.amps).map(|(c, x)| c.conj() * x).sum();
        let mut after = vec![Vec::new(); kk];
        let mut gram = vec![[[ZERO; 2]; 2]; kk];
        let mut eta = vec![ZERO; 2 * half];
        for k in (0..kk).rev() {
            apply_ecd_adjoint(&mats[k], m, k % m, &chi, &mut eta);
            let psi = &before[k];
            for a in 0..2 {
                for b in 0..2 {
                    gram[k][a][b] = eta[a * half..(a + 1) * half]
                        .iter()
                        .zip(&psi[b * half..(b + 1) * half])
                        .map(|(e, x)| e.conj() * x)
                        .sum();
                }
            }
            after[k] = chi.clone();
            // χ_{k−1} = U_R,k† η_k
            let r = rotation(p.thetas[k], p.phis[k]);
            let radj = [[r[0][0].conj(), r[1][0].conj()], [r[0][1].conj(), r[1][1].conj()]];
            apply_rotation(&radj, &mut eta);
            core::mem::swap(&mut chi, &mut eta);
        }
        Ok(FockSweep { modes: m, cutoff, before, after, gram, amplitude, output: state })
    }

    pub fn amplitude(&self) -> C64 {
        self.amplitude
    }

    pub fn cost(&self) -> f64 {
        self.amplitude.norm_sqr()
    }

    pub fn output(&self) -> &FockVector {
        &self.output
    }

    /// Amplitude with block `k`'s rotation replaced by `U_R(θ, φ)`.
    pub fn amplitude_rotation(&self, k: usize, theta: f64, phi: f64) -> C64 {
        let r = rotation(theta, phi);
        let g = &self.gram[k];
        r[0][0] * g[0][0] + r[0][1] * g[0][1] + r[1][0] * g[1][0] + r[1][1] * g[1][1]
    }

    /// Amplitude with block `k`'s displacement replaced by `beta`, the
    /// block's rotation being `U_R(θ_k, φ_k)`.
    pub fn amplitude_beta(&self, k: usize, theta: f64, phi: f64, beta: C64) -> C64 {
        let half = self.before[k].len() / 2;
        let mut y = self.before[k].clone();
        apply_rotation(&rotation(theta, phi), &mut y);
        let dm = DisplacementMatrix::new(beta, self.cutoff);
        let mut out = vec![ZERO; 2 * half];
        apply_ecd(&dm, self.modes, k % self.modes, &y, &mut out);
        self.after[k].iter().zip(&out).map(|(c, x)| c.conj() * x).sum()
    }
}
