//! Bootstrap calibration of `σ(t)`, `y*(t)` and `γ(t)` to a caplet volatility
//! surface with fixed mean reversion.
//!
//! Maturity buckets are fitted in order. Bucket `k` owns the parameter piece
//! `[M_{k-1}, M_k)` (with `M_0 = 0` and the last piece extended to infinity)
//! and solves a three-parameter least-squares problem in
//! `(ln σ, γy*, ln γ)`, holding the earlier pieces fixed.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::fmath::{exp, ln, sqrt};
use crate::implied::{effective_variance_libor, effective_variance_rfr, implied_vol_from_variance, UnitHullWhite};
use crate::model::{DriftOrder, Model};
use crate::numerics::QuadratureSpec;
use crate::pricing::InstrumentSpec;
use crate::termstructure::{DiscountCurve, ModelParams, PiecewiseCurve};

/// One caplet quote: period end `maturity`, period length `tenor`, and a
/// Hull-White normal implied volatility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quote {
    pub maturity: f64,
    pub tenor: f64,
    pub strike: f64,
    pub implied_vol: f64,
}

impl Quote {
    pub fn instrument(&self, compounded: bool) -> Result<InstrumentSpec> {
        let t1 = self.maturity - self.tenor;
        if compounded {
            InstrumentSpec::rfr_caplet(t1, self.maturity, self.strike)
        } else {
            InstrumentSpec::libor_caplet(t1, self.maturity, self.strike)
        }
    }
}

/// Quotes grouped by maturity, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct QuoteSurface {
    buckets: Vec<Vec<Quote>>,
}

impl QuoteSurface {
    pub fn new(mut rows: Vec<Quote>) -> Result<Self> {
        for q in &rows {
            if !(q.tenor > 0.0 && q.maturity - q.tenor >= 0.0) || !q.strike.is_finite() {
                return Err(invalid(format!("bad quote period or strike at maturity {}", q.maturity)));
            }
            if !(q.implied_vol > 0.0) || !q.implied_vol.is_finite() {
                return Err(invalid(format!("implied vol must be positive at maturity {}", q.maturity)));
            }
        }
        rows.sort_by(|a, b| a.maturity.total_cmp(&b.maturity).then(a.strike.total_cmp(&b.strike)));
        let mut buckets: Vec<Vec<Quote>> = Vec::new();
        for q in rows {
            match buckets.last_mut() {
                Some(b) if b[0].maturity == q.maturity => b.push(q),
                _ => buckets.push(alloc::vec![q]),
            }
        }
        for b in &buckets {
            let mut strikes: Vec<f64> = b.iter().map(|q| q.strike).collect();
            strikes.dedup();
            if strikes.len() < 3 {
                return Err(Error::Underdetermined(format!(
                    "maturity {} has {} distinct strikes, need at least 3",
                    b[0].maturity,
                    strikes.len()
                )));
            }
        }
        Ok(QuoteSurface { buckets })
    }

    pub fn buckets(&self) -> &[Vec<Quote>] {
        &self.buckets
    }

    pub fn maturities(&self) -> Vec<f64> {
        self.buckets.iter().map(|b| b[0].maturity).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &Quote> {
        self.buckets.iter().flatten()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOptions {
    /// Fit with the compounded-rate variance (default) or the term-rate one.
    pub compounded: bool,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub max_iterations: usize,
    /// Stop once the root-mean-square vol residual falls below this.
    pub vol_tolerance: f64,
    pub quadrature: QuadratureSpec,
    pub drift_order: DriftOrder,
    /// Starting point for the first bucket: `(σ, γy*, γ)`. `σ` defaults to the
    /// bucket's median quoted vol when `None`.
    pub initial: (Option<f64>, f64, f64),
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            compounded: true,
            gamma_min: 1.0,
            gamma_max: 1000.0,
            max_iterations: 100,
            vol_tolerance: 1e-12,
            quadrature: QuadratureSpec::default(),
            drift_order: DriftOrder::First,
            initial: (None, 0.1, 50.0),
        }
    }
}

/// Solver outcome for one maturity bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketFit {
    pub maturity: f64,
    pub sigma: f64,
    pub y_star: f64,
    pub gamma: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Half the sum of squared vol residuals after each accepted step.
    pub objective_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub params: ModelParams,
    pub buckets: Vec<BucketFit>,
    /// `(quote, model vol − quoted vol)` in quote order.
    pub residuals: Vec<(Quote, f64)>,
}

impl CalibrationReport {
    pub fn all_converged(&self) -> bool {
        self.buckets.iter().all(|b| b.converged)
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.1.abs()).fold(0.0, f64::max)
    }
}

/// Model-implied Hull-White vol of every quote under `params`.
pub fn model_vols(params: &ModelParams, quotes: &[Quote], opts: &CalibrationOptions) -> Result<Vec<f64>> {
    let horizon = quotes.iter().map(|q| q.maturity).fold(0.0, f64::max);
    let m = Model::with_options(params.clone(), horizon, opts.quadrature, opts.drift_order)?;
    let hw = UnitHullWhite::new(&m)?;
    model_vols_with(&m, &hw, quotes, opts.compounded)
}

fn model_vols_with(m: &Model, hw: &UnitHullWhite, quotes: &[Quote], compounded: bool) -> Result<Vec<f64>> {
    quotes
        .iter()
        .map(|q| {
            let spec = q.instrument(compounded)?;
            let ev = if compounded { effective_variance_rfr(m, &spec)? } else { effective_variance_libor(m, &spec)? };
            implied_vol_from_variance(hw, &spec, ev.total())
        })
        .collect()
}

/// Recompute the residuals of `report` from its fitted curves.
pub fn recompute_residuals(
    report: &CalibrationReport,
    quotes: &QuoteSurface,
    opts: &CalibrationOptions,
) -> Result<Vec<f64>> {
    let rows: Vec<Quote> = quotes.rows().copied().collect();
    let v = model_vols(&report.params, &rows, opts)?;
    Ok(v.iter().zip(&rows).map(|(m, q)| m - q.implied_vol).collect())
}

struct Bucket<'a> {
    base: &'a ModelParams,
    from: f64,
    quotes: &'a [Quote],
    opts: &'a CalibrationOptions,
    hw: &'a UnitHullWhite,
}

impl Bucket<'_> {
    fn params(&self, x: &[f64; 3]) -> Result<ModelParams> {
        let (sigma, gamma) = (exp(x[0]), exp(x[2]));
        let b = self.base;
        ModelParams::new(
            b.sigma.with_value_on(self.from, f64::INFINITY, sigma),
            b.alpha.clone(),
            b.gamma.with_value_on(self.from, f64::INFINITY, gamma),
            b.y_star.with_value_on(self.from, f64::INFINITY, x[1] / gamma),
            b.discount.clone(),
        )
    }

    fn residuals(&self, x: &[f64; 3]) -> Result<Vec<f64>> {
        let horizon = self.quotes[0].maturity;
        let m = Model::with_options(self.params(x)?, horizon, self.opts.quadrature, self.opts.drift_order)?;
        let v = model_vols_with(&m, self.hw, self.quotes, self.opts.compounded)?;
        Ok(v.iter().zip(self.quotes).map(|(m, q)| m - q.implied_vol).collect())
    }
}

fn half_sq(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|x| x * x).sum::<f64>()
}

/// Solve the 3x3 system `a x = b` by Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for c in 0..3 {
        let p = (c..3).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if !(a[p][c].abs() > 0.0) {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..3 {
            let f = a[r][c] / a[c][c];
            for k in c..3 {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..3).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Levenberg-Marquardt with a forward-difference Jacobian; `ln γ` is kept
/// inside its bounds by projection.
fn fit_bucket(bucket: &Bucket, x0: [f64; 3]) -> (BucketFit, [f64; 3]) {
    let opts = bucket.opts;
    let (g_lo, g_hi) = (ln(opts.gamma_min), ln(opts.gamma_max));
    let clamp = |mut x: [f64; 3]| {
        x[2] = x[2].clamp(g_lo, g_hi);
        x
    };
    let n = bucket.quotes.len();
    let tol_obj = 0.5 * n as f64 * opts.vol_tolerance * opts.vol_tolerance;
    let mut x = clamp(x0);
    let mut r = bucket.residuals(&x).unwrap_or_else(|_| alloc::vec![f64::INFINITY; n]);
    let mut f = half_sq(&r);
    let mut history = alloc::vec![f];
    let mut lambda = 1e-3;
    let mut converged = f <= tol_obj;
    let mut stalled = false;
    let mut it = 0;
    while !converged && !stalled && it < opts.max_iterations && f.is_finite() {
        it += 1;
        let mut jac = alloc::vec![[0.0; 3]; n];
        let mut ok = true;
        for k in 0..3 {
            let mut h = 1e-7 * (1.0 + x[k].abs());
            // step inward at the γ bounds
            if k == 2 && x[2] + h > g_hi {
                h = -h;
            }
            let mut xp = x;
            xp[k] += h;
            match bucket.residuals(&xp) {
                Ok(rp) => {
                    for i in 0..n {
                        jac[i][k] = (rp[i] - r[i]) / h;
                    }
                }
                Err(_) => ok = false,
            }
        }
        if !ok {
            break;
        }
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for i in 0..n {
            for a in 0..3 {
                jtr[a] += jac[i][a] * r[i];
                for b in 0..3 {
                    jtj[a][b] += jac[i][a] * jac[i][b];
                }
            }
        }
        let mut accepted = false;
        for _ in 0..30 {
            let mut a = jtj;
            for d in 0..3 {
                a[d][d] += lambda * jtj[d][d].max(1e-30);
            }
            let Some(step) = solve3(a, [-jtr[0], -jtr[1], -jtr[2]]) else {
                lambda *= 10.0;
                continue;
            };
            let xn = clamp([x[0] + step[0], x[1] + step[1], x[2] + step[2]]);
            let rn = bucket.residuals(&xn);
            if let Ok(rn) = rn {
                let fn_ = half_sq(&rn);
                if fn_ <= f {
                    let moved = (0..3).map(|k| (xn[k] - x[k]).abs()).fold(0.0, f64::max);
                    x = xn;
                    r = rn;
                    let gain = f - fn_;
                    f = fn_;
                    history.push(f);
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = true;
                    converged = f <= tol_obj || moved < 1e-14;
                    stalled = gain <= 1e-10 * f;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    let fit = BucketFit {
        maturity: bucket.quotes[0].maturity,
        sigma: exp(x[0]),
        y_star: x[1] / exp(x[2]),
        gamma: exp(x[2]),
        converged,
        iterations: it,
        objective_history: history,
    };
    (fit, x)
}

/// Sequential bootstrap over the maturity buckets of `quotes`.
pub fn calibrate(
    quotes: &QuoteSurface,
    discount: &DiscountCurve,
    alpha: f64,
    opts: &CalibrationOptions,
) -> Result<CalibrationReport> {
    if !(alpha > 0.0) {
        return Err(invalid("alpha must be positive"));
    }
    if !(opts.gamma_min > 0.0 && opts.gamma_max > opts.gamma_min) {
        return Err(invalid("gamma bounds must satisfy 0 < min < max"));
    }
    if quotes.is_empty() {
        return Err(Error::Underdetermined("empty quote surface".into()));
    }
    let (s0, u0, g0) = opts.initial;
    let first = &quotes.buckets()[0];
    let sigma0 = s0.unwrap_or_else(|| {
        let mut v: Vec<f64> = first.iter().map(|q| q.implied_vol).collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v[v.len() / 2]
    });
    let mut params = ModelParams::new(
        PiecewiseCurve::constant(sigma0),
        PiecewiseCurve::constant(alpha),
        PiecewiseCurve::constant(g0),
        PiecewiseCurve::constant(u0 / g0),
        discount.clone(),
    )?;
    let horizon = quotes.maturities().last().copied().unwrap_or(1.0);
    let hw_model = Model::with_options(params.clone(), horizon, opts.quadrature, opts.drift_order)?;
    let hw = UnitHullWhite::new(&hw_model)?;

    let mut x = [ln(sigma0), u0, ln(g0)];
    let mut from = 0.0;
    let mut fits = Vec::new();
    for quotes_k in quotes.buckets() {
        let bucket = Bucket { base: &params, from, quotes: quotes_k, opts, hw: &hw };
        let (fit, xk) = fit_bucket(&bucket, x);
        params = bucket.params(&xk)?;
        x = xk;
        from = fit.maturity;
        fits.push(fit);
    }
    let rows: Vec<Quote> = quotes.rows().copied().collect();
    let vols = model_vols(&params, &rows, opts)?;
    let residuals = rows.iter().zip(vols).map(|(q, v)| (*q, v - q.implied_vol)).collect();
    Ok(CalibrationReport { params, buckets: fits, residuals })
}

/// Synthetic quotes from `params` on the given maturities and strikes.
pub fn synthetic_quotes(
    params: &ModelParams,
    maturities: &[f64],
    tenor: f64,
    strikes: &[f64],
    opts: &CalibrationOptions,
) -> Result<QuoteSurface> {
    let mut rows = Vec::new();
    for &t in maturities {
        for &k in strikes {
            rows.push(Quote { maturity: t, tenor, strike: k, implied_vol: 1.0 });
        }
    }
    let vols = model_vols(params, &rows, opts)?;
    for (q, v) in rows.iter_mut().zip(vols) {
        q.implied_vol = v;
    }
    QuoteSurface::new(rows)
}

/// Root-mean-square of the residual column.
pub fn rms(residuals: &[f64]) -> f64 {
    if residuals.is_empty() {
        return 0.0;
    }
    sqrt(residuals.iter().map(|x| x * x).sum::<f64>() / residuals.len() as f64)
}
