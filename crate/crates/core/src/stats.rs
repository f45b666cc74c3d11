//! Sample statistics, bootstrap errors and log-log fits.

use alloc::vec::Vec;
use rand::Rng;

use crate::math;
use crate::rng::{self, domain};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    // Kahan summation keeps 1e6-sample means honest.
    let mut s = 0.0;
    let mut c = 0.0;
    for &x in xs {
        let y = x - c;
        let t = s + y;
        c = (t - s) - y;
        s = t;
    }
    s / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

pub fn std_error(xs: &[f64]) -> f64 {
    math::sqrt(variance(xs) / xs.len() as f64)
}

/// Bootstrap standard errors of the sample mean and of the unbiased sample
/// variance.
pub fn bootstrap_mean_variance(xs: &[f64], resamples: usize, seed: u64) -> (f64, f64) {
    let n = xs.len();
    if n < 2 || resamples < 2 {
        return (f64::NAN, f64::NAN);
    }
    let mut means = Vec::with_capacity(resamples);
    let mut vars = Vec::with_capacity(resamples);
    let mut buf = Vec::with_capacity(n);
    for b in 0..resamples {
        let mut r = rng::stream(seed, domain::BOOTSTRAP, b as u64);
        buf.clear();
        for _ in 0..n {
            buf.push(xs[r.gen_range(0..n)]);
        }
        means.push(mean(&buf));
        vars.push(variance(&buf));
    }
    (math::sqrt(variance(&means)), math::sqrt(variance(&vars)))
}

/// Least-squares line `y = a + b x`; returns `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let b = sxy / sxx;
    (my - b * mx, b)
}

/// Slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| math::ln(*v)).collect();
    let ly: Vec<f64> = y.iter().map(|v| math::ln(*v)).collect();
    linear_fit(&lx, &ly).1
}

/// Weighted least-squares slope of `log y` against `log x`, with weights
/// `1/σ²` from the relative errors `rel_err = se/y`.
pub fn log_log_slope_weighted(x: &[f64], y: &[f64], rel_err: &[f64]) -> f64 {
    let mut sw = 0.0;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for i in 0..x.len() {
        let w = 1.0 / (rel_err[i] * rel_err[i]);
        sw += w;
        sx += w * math::ln(x[i]);
        sy += w * math::ln(y[i]);
    }
    let (mx, my) = (sx / sw, sy / sw);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for i in 0..x.len() {
        let w = 1.0 / (rel_err[i] * rel_err[i]);
        let dx = math::ln(x[i]) - mx;
        sxy += w * dx * (math::ln(y[i]) - my);
        sxx += w * dx * dx;
    }
    sxy / sxx
}

/// `n` points spaced evenly in log between `lo` and `hi`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => return Vec::new(),
        1 => return alloc::vec![lo],
        _ => {}
    }
    let (a, b) = (math::ln(lo), math::ln(hi));
    let mut v: Vec<f64> = (0..n).map(|i| math::exp(a + (b - a) * i as f64 / (n - 1) as f64)).collect();
    v[0] = lo;
    v[n - 1] = hi;
    v
}

/// Evaluates `f(0..n)` in index order, in parallel when the `parallel`
/// feature is on.
#[cfg(feature = "parallel")]
pub fn map_indexed<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}
