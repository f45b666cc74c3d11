//! Deterministic random streams.
//!
//! Every Monte Carlo sample gets its own generator, derived from
//! `(master seed, domain, index)`:
//!
//! 1. `(h0, h1) = mix128(master, domain)`: two rounds of the SplitMix64
//!    finaliser over the master seed, the second one keyed by the domain.
//! 2. The ChaCha8 key is `h0 ‖ h1 ‖ fmix(h0 ^ K) ‖ fmix(h1 ^ K)` (little endian).
//! 3. The sample index selects the ChaCha stream (`set_stream`).
//!
//! Sample `i` therefore sees the same numbers whichever thread runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::C64;

pub type StreamRng = ChaCha8Rng;

/// Domain tags separating unrelated uses of one master seed.
pub mod domain {
    pub const CIRCUIT: u64 = 0x01;
    pub const CORRELATOR: u64 = 0x02;
    pub const BOOTSTRAP: u64 = 0x03;
    pub const TARGET: u64 = 0x04;
    pub const TRAIN_INIT: u64 = 0x05;
    pub const GAUSSIAN: u64 = 0x06;
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const KEY_SALT: u64 = 0xd1b5_4a32_d192_ed03;

#[inline]
fn fmix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 128-bit hash of `(master, domain)`.
pub fn mix128(master: u64, domain: u64) -> (u64, u64) {
    let h0 = fmix(master.wrapping_add(GOLDEN));
    let h1 = fmix(h0 ^ fmix(domain.wrapping_add(GOLDEN.wrapping_mul(2))));
    (h0, h1)
}

pub fn stream(master: u64, domain: u64, index: u64) -> StreamRng {
    let (h0, h1) = mix128(master, domain);
    let words = [h0, h1, fmix(h0 ^ KEY_SALT), fmix(h1 ^ KEY_SALT)];
    let mut key = [0u8; 32];
    for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

#[inline]
pub fn normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Complex Gaussian with `E|x|² = var`: real and imaginary parts are
/// independent `N(0, var/2)`.
#[inline]
pub fn complex_normal<R: rand::Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = crate::math::sqrt(0.5 * var);
    let re = normal(rng);
    let im = normal(rng);
    C64::new(s * re, s * im)
}

#[inline]
pub fn uniform_angle<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.gen::<f64>() * core::f64::consts::TAU
}
