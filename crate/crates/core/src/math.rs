//! Float helpers that work with and without `std`.

macro_rules! unary {
    ($($name:ident),*) => {$(
        #[cfg(feature = "std")]
        #[inline]
        pub fn $name(x: f64) -> f64 { x.$name() }
        #[cfg(not(feature = "std"))]
        #[inline]
        pub fn $name(x: f64) -> f64 { libm::$name(x) }
    )*};
}

unary!(sqrt, exp, sin, cos, tanh, cosh, sinh, asinh, atan, log10, floor, ceil, round);

#[cfg(feature = "std")]
#[inline]
pub fn ln(x: f64) -> f64 {
    x.ln()
}
#[cfg(not(feature = "std"))]
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[cfg(feature = "std")]
#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    y.atan2(x)
}
#[cfg(not(feature = "std"))]
#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[cfg(feature = "std")]
#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    x.powi(n)
}
#[cfg(not(feature = "std"))]
#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}

#[cfg(feature = "std")]
#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    x.powf(y)
}
#[cfg(not(feature = "std"))]
#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[cfg(feature = "std")]
#[inline]
pub fn sin_cos(x: f64) -> (f64, f64) {
    x.sin_cos()
}
#[cfg(not(feature = "std"))]
#[inline]
pub fn sin_cos(x: f64) -> (f64, f64) {
    libm::sincos(x)
}

#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln n!`
#[inline]
pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

#[inline]
pub fn sech(x: f64) -> f64 {
    1.0 / cosh(x)
}

/// `e^{i x}`
#[inline]
pub fn cis(x: f64) -> crate::C64 {
    let (s, c) = sin_cos(x);
    crate::C64::new(c, s)
}
