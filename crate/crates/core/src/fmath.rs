// Thin wrappers so the rest of the crate reads like ordinary float code.

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}
#[inline]
pub fn expm1(x: f64) -> f64 {
    libm::expm1(x)
}
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}
#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
#[inline]
pub fn sinh(x: f64) -> f64 {
    libm::sinh(x)
}
#[inline]
pub fn cosh(x: f64) -> f64 {
    libm::cosh(x)
}
#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}
#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// `cosh(x) - 1` without cancellation near zero.
#[inline]
pub fn coshm1(x: f64) -> f64 {
    let h = sinh(0.5 * x);
    2.0 * h * h
}

/// `(1 - e^{-x})/x`, continuous at `x = 0`.
#[inline]
pub fn one_minus_exp_over(x: f64) -> f64 {
    if x.abs() < 1e-300 {
        1.0
    } else {
        -expm1(-x) / x
    }
}
