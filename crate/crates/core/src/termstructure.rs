//! Piecewise-constant parameter curves and the log-linear discount curve.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{domain, invalid, Result};
use crate::fmath::{exp, ln};

/// Piecewise-constant function of time. Interval `[tᵢ, tᵢ₊₁)` owns `tᵢ`;
/// the last value extends to infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseCurve {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseCurve {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(invalid("curve needs one value per breakpoint"));
        }
        if breakpoints[0] != 0.0 {
            return Err(invalid("first curve breakpoint must be 0"));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("curve breakpoints must be strictly ascending"));
        }
        if breakpoints.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(invalid("curve contains non-finite numbers"));
        }
        Ok(PiecewiseCurve { breakpoints, values })
    }

    pub fn constant(value: f64) -> Self {
        PiecewiseCurve { breakpoints: alloc::vec![0.0], values: alloc::vec![value] }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Index of the interval containing `t` (clamped to the first piece for `t < 0`).
    #[inline]
    pub fn piece(&self, t: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= t).saturating_sub(1)
    }

    /// Value at `t`, unchecked (negative times read the first piece).
    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        self.values[self.piece(t)]
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(domain(format!("curve evaluated at negative time {t}")));
        }
        Ok(self.at(t))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Same function with `f` applied to every value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        PiecewiseCurve {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Same function with extra breakpoints inserted (values duplicated).
    pub fn refined(&self, extra: &[f64]) -> Self {
        let mut bps = self.breakpoints.clone();
        bps.extend(extra.iter().copied().filter(|&t| t > 0.0 && t.is_finite()));
        bps.sort_by(|a, b| a.total_cmp(b));
        bps.dedup();
        let values = bps.iter().map(|&t| self.at(t)).collect();
        PiecewiseCurve { breakpoints: bps, values }
    }

    /// Replace the value on `[from, to)` by `value`.
    pub fn with_value_on(&self, from: f64, to: f64, value: f64) -> Self {
        let r = self.refined(&[from, to]);
        let values = r
            .breakpoints
            .iter()
            .zip(&r.values)
            .map(|(&t, &v)| if t >= from && t < to { value } else { v })
            .collect();
        PiecewiseCurve { breakpoints: r.breakpoints, values }
    }
}

/// Discount curve, linear in log-discount between pillars, flat forward
/// beyond the last pillar.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscountCurve {
    times: Vec<f64>,
    log_df: Vec<f64>,
    /// Forward rate on each segment; the last entry is the extrapolation rate.
    forwards: Vec<f64>,
}

impl DiscountCurve {
    /// Pillars `(t, D(0,t))`; a pillar at 0 is implied if absent.
    pub fn new(times: &[f64], discounts: &[f64]) -> Result<Self> {
        if times.len() != discounts.len() || times.is_empty() {
            return Err(invalid("discount curve needs matching, non-empty pillar lists"));
        }
        let mut t = Vec::with_capacity(times.len() + 1);
        let mut l = Vec::with_capacity(times.len() + 1);
        if times[0] != 0.0 {
            t.push(0.0);
            l.push(0.0);
        }
        for (&ti, &di) in times.iter().zip(discounts) {
            if !(ti >= 0.0) || !ti.is_finite() {
                return Err(invalid(format!("bad pillar time {ti}")));
            }
            if !(di > 0.0) || !di.is_finite() {
                return Err(invalid(format!("discount factor at {ti} must be positive")));
            }
            if ti == 0.0 && di != 1.0 {
                return Err(invalid("D(0,0) must equal 1"));
            }
            t.push(ti);
            l.push(ln(di));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("pillar times must be strictly ascending"));
        }
        let mut forwards: Vec<f64> =
            t.windows(2).zip(l.windows(2)).map(|(tw, lw)| -(lw[1] - lw[0]) / (tw[1] - tw[0])).collect();
        let last = forwards.last().copied().unwrap_or(0.0);
        forwards.push(last);
        Ok(DiscountCurve { times: t, log_df: l, forwards })
    }

    pub fn flat(rate: f64) -> Self {
        DiscountCurve {
            times: alloc::vec![0.0],
            log_df: alloc::vec![0.0],
            forwards: alloc::vec![rate],
        }
    }

    pub fn pillars(&self) -> &[f64] {
        &self.times
    }

    /// `ln D(0,t)` for `t >= 0`.
    pub fn log_discount(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&p| p <= t).saturating_sub(1);
        self.log_df[k] - self.forwards[k] * (t - self.times[k])
    }

    pub fn df(&self, t: f64) -> f64 {
        exp(self.log_discount(t))
    }

    /// `D(t1, t2) = D(0,t2)/D(0,t1)`.
    pub fn discount(&self, t1: f64, t2: f64) -> Result<f64> {
        if !(t1 >= 0.0) || !(t1 <= t2) {
            return Err(domain(format!("discount needs 0 <= t1 <= t2, got ({t1}, {t2})")));
        }
        Ok(exp(self.log_discount(t2) - self.log_discount(t1)))
    }

    /// `r̄(t)`, the slope of the containing segment.
    pub fn instantaneous_forward(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(domain(format!("forward at negative time {t}")));
        }
        Ok(self.forward_at(t))
    }

    #[inline]
    pub(crate) fn forward_at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&p| p <= t).saturating_sub(1);
        self.forwards[k]
    }
}

/// Model inputs: the four parameter curves and the discount curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub sigma: PiecewiseCurve,
    pub alpha: PiecewiseCurve,
    pub gamma: PiecewiseCurve,
    pub y_star: PiecewiseCurve,
    pub discount: DiscountCurve,
}

impl ModelParams {
    /// Validates `σ ≥ 0`, `α ≥ 0`, `γ > 0`.
    pub fn new(
        sigma: PiecewiseCurve,
        alpha: PiecewiseCurve,
        gamma: PiecewiseCurve,
        y_star: PiecewiseCurve,
        discount: DiscountCurve,
    ) -> Result<Self> {
        if sigma.min_value() < 0.0 {
            return Err(invalid("sigma must be non-negative"));
        }
        if alpha.min_value() < 0.0 {
            return Err(invalid("alpha must be non-negative"));
        }
        if !(gamma.min_value() > 0.0) {
            return Err(invalid("gamma must be strictly positive (use a tiny value for the Hull-White limit)"));
        }
        Ok(ModelParams { sigma, alpha, gamma, y_star, discount })
    }

    /// Constant parameters on a flat curve.
    pub fn constant(sigma: f64, alpha: f64, gamma: f64, y_star: f64, rate: f64) -> Result<Self> {
        Self::new(
            PiecewiseCurve::constant(sigma),
            PiecewiseCurve::constant(alpha),
            PiecewiseCurve::constant(gamma),
            PiecewiseCurve::constant(y_star),
            DiscountCurve::flat(rate),
        )
    }

    /// Union of the breakpoints of the four parameter curves.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = [&self.sigma, &self.alpha, &self.gamma, &self.y_star]
            .iter()
            .flat_map(|c| c.breakpoints().iter().copied())
            .collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v.dedup();
        v
    }
}
