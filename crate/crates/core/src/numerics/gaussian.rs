use crate::error::{Error, Result};
use crate::fmath::{erfc, exp, sqrt};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const FRAC_1_SQRT_2: f64 = core::f64::consts::FRAC_1_SQRT_2;

/// Standard normal distribution function.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * exp(-0.5 * x * x)
}

/// `Φ(c+δ) − Φ(c−δ)` with full relative accuracy for small `δ`.
pub fn norm_cdf_diff(c: f64, delta: f64) -> f64 {
    if delta == 0.0 {
        return 0.0;
    }
    if delta.abs() < 0.05 && (delta * c).abs() < 1.0 {
        // 2 N(c) Σ δ^{2k+1}/(2k+1)! He_{2k}(c)
        let d2 = delta * delta;
        let mut he_prev = 1.0; // He_{2k-1} after the first step
        let mut he = 1.0; // He_0
        let mut n = 0.0; // index of `he`
        let mut term_coeff = delta; // δ^{2k+1}/(2k+1)!
        let mut sum = term_coeff * he;
        for k in 1..40 {
            // advance He twice: He_{n+1} = c He_n - n He_{n-1}
            let he1 = c * he - n * he_prev;
            let he2 = c * he1 - (n + 1.0) * he;
            he_prev = he1;
            he = he2;
            n += 2.0;
            let kk = 2.0 * k as f64;
            term_coeff *= d2 / (kk * (kk + 1.0));
            let t = term_coeff * he;
            sum += t;
            if t.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
        return 2.0 * norm_pdf(c) * sum;
    }
    if c > 0.0 {
        0.5 * (erfc((c - delta) * FRAC_1_SQRT_2) - erfc((c + delta) * FRAC_1_SQRT_2))
    } else {
        norm_cdf(c + delta) - norm_cdf(c - delta)
    }
}

/// Zero-mean bivariate Gaussian with covariance `[[s11, s12], [s12, s22]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateGaussian {
    pub s11: f64,
    pub s12: f64,
    pub s22: f64,
}

impl BivariateGaussian {
    /// Validates the covariance; determinants down to `-1e-14·s11·s22` are
    /// accepted as rounding noise.
    pub fn new(s11: f64, s12: f64, s22: f64) -> Result<Self> {
        if !(s11 >= 0.0 && s22 >= 0.0) || s12.is_nan() {
            return Err(Error::DegenerateCovariance);
        }
        let det = s11 * s22 - s12 * s12;
        if det < -1e-14 * s11 * s22 {
            return Err(Error::DegenerateCovariance);
        }
        Ok(BivariateGaussian { s11, s12, s22 })
    }

    pub fn det(&self) -> f64 {
        self.s11 * self.s22 - self.s12 * self.s12
    }

    /// True when the covariance admits a density.
    pub fn has_density(&self) -> bool {
        self.det() > 0.0
    }

    /// Lower Cholesky factor `(l11, l21, l22)`.
    pub fn cholesky(&self) -> Result<(f64, f64, f64)> {
        if !self.has_density() {
            return Err(Error::DegenerateCovariance);
        }
        let l11 = sqrt(self.s11);
        let l21 = self.s12 / l11;
        let l22 = sqrt(self.det() / self.s11);
        Ok((l11, l21, l22))
    }

    pub fn pdf(&self, u: f64, w: f64) -> Result<f64> {
        let det = self.det();
        if !(det > 0.0) {
            return Err(Error::DegenerateCovariance);
        }
        let q = (self.s22 * u * u - 2.0 * self.s12 * u * w + self.s11 * w * w) / det;
        Ok(exp(-0.5 * q) / (2.0 * core::f64::consts::PI * sqrt(det)))
    }
}

/// Density of the bivariate Gaussian at `(u, w)`.
pub fn bvn_pdf(u: f64, w: f64, cov: &BivariateGaussian) -> Result<f64> {
    cov.pdf(u, w)
}
