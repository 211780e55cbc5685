//! Effective Hull-White variances and implied Hull-White volatilities.
//!
//! The first-order option prices are re-expressed as Hull-White prices with
//! an adjusted variance. For caplets the adjustment is quadratic in the
//! baseline moneyness `d₂`; for swaptions it is a ratio of a quadratic and a
//! linear function of `d̃₍ₙ₎`.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::fmath::{cosh, exp, sinh, sqrt};
use crate::kernel::{Kernel, Slice};
use crate::model::Model;
use crate::numerics::{find_root, norm_cdf};
use crate::pricing::{swaption_critical_factor, InstrumentKind, InstrumentSpec};
use crate::termstructure::PiecewiseCurve;

/// Bracket for implied Hull-White volatility searches.
pub const SIGMA_MIN: f64 = 1e-6;
pub const SIGMA_MAX: f64 = 5.0;

/// Inputs of the Black-like Hull-White price formulas, everything except
/// the variance.
#[derive(Debug, Clone, PartialEq)]
pub enum HwInputs {
    /// `D(0,T₁)Φ(d₁) − κ⁻¹D(0,T₂)Φ(d₂)` with `d₁ = (−Δz* + ½V)/√V`.
    Caplet { df1: f64, df2: f64, kappa_inv: f64, delta_z_star: f64 },
    /// `D(0,T₀)Φ(d⁽⁰⁾) − Σcᵢ D(0,Tᵢ)Φ(d⁽ⁱ⁾)` with
    /// `d⁽ⁱ⁾ = −x/√V − Bᵢ√V`, `x = y_c + Σ_rz(0,T₀)`.
    Swaption { df0: f64, shift: f64, legs: Vec<SwapLeg> },
}

/// One payment of the underlying swap: `cᵢ = δᵢₙ + Kδᵢ`, `D(0,Tᵢ)`, `B*(T₀,Tᵢ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapLeg {
    pub coef: f64,
    pub df: f64,
    pub b_star: f64,
}

/// Hull-White price for the given variance.
pub fn hw_baseline_price(inputs: &HwInputs, variance: f64) -> Result<f64> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(crate::error::domain("Hull-White price needs a positive variance"));
    }
    let sq = sqrt(variance);
    Ok(match inputs {
        HwInputs::Caplet { df1, df2, kappa_inv, delta_z_star } => {
            let d1 = (-delta_z_star + 0.5 * variance) / sq;
            df1 * norm_cdf(d1) - kappa_inv * df2 * norm_cdf(d1 - sq)
        }
        HwInputs::Swaption { df0, shift, legs } => {
            let d0 = -shift / sq;
            let mut pv = df0 * norm_cdf(d0);
            for l in legs {
                pv -= l.coef * l.df * norm_cdf(d0 - l.b_star * sq);
            }
            pv
        }
    })
}

/// Baseline variance plus first-order adjustment.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveVariance {
    pub baseline: f64,
    pub adjustment: f64,
    /// `[C₁, C₂, C₃]` for caplets, `[Aₙ, Bₙ, Dₙ, Eₙ, Fₙ]` for swaptions.
    pub coefficients: Vec<f64>,
    /// Baseline moneyness (`d₂` or `d̃₍ₙ₎`).
    pub moneyness: f64,
    /// Accuracy guide `max(|C₂|, C₃)/√V` (largest over legs for swaptions).
    pub eps_diagnostic: f64,
    pub inputs: HwInputs,
}

impl EffectiveVariance {
    pub fn total(&self) -> f64 {
        self.baseline + self.adjustment
    }

    /// Hull-White price at the effective variance.
    pub fn price(&self) -> Result<f64> {
        hw_baseline_price(&self.inputs, self.total())
    }

    /// The adjustment as a function of the moneyness, coefficients frozen.
    pub fn adjustment_at(&self, d: f64) -> f64 {
        let c = &self.coefficients;
        if c.len() == 3 {
            2.0 * sqrt(self.baseline) * (c[0] - c[1] * d + c[2] * (d * d - 1.0))
        } else {
            2.0 * sqrt(self.baseline) * (c[2] + c[3] * d + c[4] * (d * d - 1.0)) / (c[0] + c[1] * d)
        }
    }

    fn checked(self) -> Result<Self> {
        if !self.adjustment.is_finite() {
            return Err(Error::Evaluation("non-finite variance adjustment".into()));
        }
        if self.adjustment < -0.9 * self.baseline {
            return Err(Error::OutOfDomain(alloc::format!(
                "variance adjustment {:e} below -0.9 x baseline {:e}",
                self.adjustment,
                self.baseline
            )));
        }
        Ok(self)
    }
}

/// `(C₁, C₂, C₃)` over `[a, b]` for a given `Ψ`.
fn c_coefficients(m: &Model, a: f64, b: f64, psi_fn: impl Fn(f64) -> f64) -> Result<[f64; 3]> {
    let s0 = m.origin_slice();
    let sa = m.slice(a, b)?;
    let mut c = [0.0; 3];
    let k = m.kernel();
    let r = k.rule();
    for w in k.panels(a, b, &[]).windows(2) {
        for j in 0..r.len() {
            let t1 = r.node_on(w[0], w[1], j);
            let wt = r.weight_on(w[0], w[1], j);
            let g = m.gamma(t1);
            let y = crate::drift::y_star_arg_with(m, t1, b);
            let psi0 = s0.psi(t1);
            let p = psi_fn(t1);
            c[0] += wt * (psi0 * cosh(y) - sa.psi(t1)) * p;
            c[1] += wt * 0.5 * psi0 * sinh(y) * g * p * p;
            c[2] += wt * psi0 * cosh(y) * g * g * p * p * p / 6.0;
        }
    }
    Ok(c)
}

fn caplet_effective(m: &Model, spec: &InstrumentSpec, compounded: bool) -> Result<EffectiveVariance> {
    spec.validate()?;
    if !spec.is_caplet() {
        return Err(invalid("not a caplet"));
    }
    let (t1, t2) = (spec.times[0], spec.times[1]);
    m.check_time(t2)?;
    let s0 = m.origin_slice();
    let s1 = m.slice(t1, t2)?;
    let b12 = s1.b_star(t2);
    let srr01 = s0.sigma_rr(t1);
    let baseline = if compounded { b12 * b12 * srr01 + s1.sigma_zz(t2) } else { b12 * b12 * srr01 };
    if !(baseline > 1e-20) {
        return Err(Error::DegenerateCovariance);
    }
    let sq = sqrt(baseline);
    let k = m.kernel();
    let c = if compounded {
        c_coefficients(m, t1, t2, |t| {
            (b12 * k.phi(t1, t) * srr01 + s1.sigma_rz(t) + s1.b_plus(t, t2) * s1.sigma_rr(t)) / sq
        })?
    } else {
        let root = sqrt(srr01);
        c_coefficients(m, t1, t2, |t| k.phi(t1, t) * root)?
    };
    let dzs = spec.delta_z_star(m);
    let d2 = (-dzs + 0.5 * baseline) / sq - sq;
    let adjustment = 2.0 * sq * (c[0] - c[1] * d2 + c[2] * (d2 * d2 - 1.0));
    EffectiveVariance {
        baseline,
        adjustment,
        coefficients: c.to_vec(),
        moneyness: d2,
        eps_diagnostic: c[1].abs().max(c[2]) / sq,
        inputs: HwInputs::Caplet {
            df1: m.df(t1),
            df2: m.df(t2),
            kappa_inv: 1.0 + spec.strike * spec.accruals[0],
            delta_z_star: dzs,
        },
    }
    .checked()
}

/// Effective variance of a compounded-rate caplet.
pub fn effective_variance_rfr(m: &Model, spec: &InstrumentSpec) -> Result<EffectiveVariance> {
    caplet_effective(m, spec, true)
}

/// Effective variance of a term-rate caplet.
pub fn effective_variance_libor(m: &Model, spec: &InstrumentSpec) -> Result<EffectiveVariance> {
    caplet_effective(m, spec, false)
}

/// Effective short-rate variance of a payer swaption.
pub fn effective_variance_swaption(m: &Model, spec: &InstrumentSpec) -> Result<EffectiveVariance> {
    spec.validate()?;
    if spec.kind != InstrumentKind::PayerSwaption {
        return Err(invalid("not a swaption"));
    }
    let t0 = spec.times[0];
    m.check_time(spec.last_date())?;
    let s0 = m.origin_slice();
    let baseline = s0.sigma_rr(t0);
    if !(baseline > 1e-20) {
        return Err(Error::DegenerateCovariance);
    }
    let sq = sqrt(baseline);
    let yc = swaption_critical_factor(m, spec)?;
    let shift = yc + s0.sigma_rz(t0);
    let after = m.slice(t0, spec.last_date())?;
    let n = spec.accruals.len();
    let legs: Vec<SwapLeg> = (0..n)
        .map(|i| {
            let ti = spec.times[i + 1];
            let coef = spec.strike * spec.accruals[i] + if i == n - 1 { 1.0 } else { 0.0 };
            SwapLeg { coef, df: m.df(ti), b_star: after.b_star(ti) }
        })
        .collect();
    let d0 = -shift / sq;
    let dn = d0 - legs[n - 1].b_star * sq;
    let k = m.kernel();
    let (mut a, mut b, mut d, mut e, mut f) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut eps: f64 = 0.0;
    for (i, l) in legs.iter().enumerate() {
        let ti = spec.times[i + 1];
        let c = c_coefficients(m, t0, ti, |t| k.phi(t0, t) * sq)?;
        let w = l.coef * l.df;
        let delta = dn - (d0 - l.b_star * sq);
        a += w * l.b_star;
        b += w * l.b_star * delta;
        d += w * c[0];
        e += w * (-c[1] + delta * (c[0] - 3.0 * c[2]));
        f += w * (c[2] - c[1] * delta);
        eps = eps.max(c[1].abs().max(c[2]) / (l.b_star * sq));
    }
    let den = a + b * dn;
    if !(den.abs() >= 1e-8 * a.abs()) {
        return Err(Error::OutOfDomain("swaption strike too far from the money for the variance expansion".into()));
    }
    let adjustment = 2.0 * sq * (d + e * dn + f * (dn * dn - 1.0)) / den;
    EffectiveVariance {
        baseline,
        adjustment,
        coefficients: alloc::vec![a, b, d, e, f],
        moneyness: dn,
        eps_diagnostic: eps,
        inputs: HwInputs::Swaption { df0: m.df(t0), shift, legs },
    }
    .checked()
}

/// Effective variance of any instrument.
pub fn effective_variance(m: &Model, spec: &InstrumentSpec) -> Result<EffectiveVariance> {
    match spec.kind {
        InstrumentKind::RfrCaplet => effective_variance_rfr(m, spec),
        InstrumentKind::LiborCaplet => effective_variance_libor(m, spec),
        InstrumentKind::PayerSwaption => effective_variance_swaption(m, spec),
    }
}

/// Hull-White (`γ = 0`) kernel tables with `σ ≡ 1` and the model's mean
/// reversion; every Hull-White variance is `σ²` times a quantity from here.
pub struct UnitHullWhite {
    slice0: Slice,
    kernel: Arc<Kernel>,
}

impl UnitHullWhite {
    pub fn new(m: &Model) -> Result<Self> {
        let kernel = Arc::new(Kernel::new(
            &m.params().alpha,
            &PiecewiseCurve::constant(1.0),
            &PiecewiseCurve::constant(0.0),
            &[],
            m.horizon(),
            m.spec(),
        )?);
        let slice0 = Slice::new(kernel.clone(), 0.0, kernel.horizon())?;
        Ok(UnitHullWhite { slice0, kernel })
    }

    /// Unit-σ variance matching the instrument's baseline variance.
    pub fn variance(&self, spec: &InstrumentSpec) -> Result<f64> {
        let t1 = spec.times[0];
        match spec.kind {
            InstrumentKind::PayerSwaption => Ok(self.slice0.sigma_rr(t1)),
            kind => {
                let t2 = spec.times[1];
                let s1 = Slice::new(self.kernel.clone(), t1, t2)?;
                let b = s1.b_star(t2);
                let v = b * b * self.slice0.sigma_rr(t1);
                Ok(if kind == InstrumentKind::RfrCaplet { v + s1.sigma_zz(t2) } else { v })
            }
        }
    }

    /// Hull-White price of the instrument with constant volatility `sigma`.
    pub fn price(&self, m: &Model, spec: &InstrumentSpec, sigma: f64) -> Result<f64> {
        spec.validate()?;
        let var = sigma * sigma * self.variance(spec)?;
        match spec.kind {
            InstrumentKind::PayerSwaption => {
                let t0 = spec.times[0];
                let s = Slice::new(self.kernel.clone(), t0, spec.last_date())?;
                let rr = sigma * sigma * self.slice0.sigma_rr(t0);
                let n = spec.accruals.len();
                let legs: Vec<SwapLeg> = (0..n)
                    .map(|i| {
                        let ti = spec.times[i + 1];
                        let coef = spec.strike * spec.accruals[i] + if i == n - 1 { 1.0 } else { 0.0 };
                        SwapLeg { coef, df: m.df(ti), b_star: s.b_star(ti) }
                    })
                    .collect();
                // root in x = y + Σ_rz(0,T₀); the swap value is decreasing in x
                let value = |x: f64| -> f64 {
                    let mut v = -1.0;
                    for (i, l) in legs.iter().enumerate() {
                        let b = l.b_star;
                        v += l.coef * m.discount(t0, spec.times[i + 1]) * exp(-b * x - 0.5 * b * b * rr);
                    }
                    v
                };
                let b_max = legs.iter().map(|l| l.b_star).fold(0.0, f64::max);
                let pad = 8.0 * sqrt(rr) + 0.01;
                let (mut lo, mut hi) = (-b_max * rr - pad, pad);
                for _ in 0..60 {
                    if value(lo) > 0.0 {
                        break;
                    }
                    lo = 2.0 * lo - 0.01;
                }
                for _ in 0..60 {
                    if value(hi) < 0.0 {
                        break;
                    }
                    hi = 2.0 * hi + 0.01;
                }
                let shift = find_root(value, lo, hi, 1e-16)?;
                hw_baseline_price(&HwInputs::Swaption { df0: m.df(t0), shift, legs }, rr)
            }
            _ => hw_baseline_price(
                &HwInputs::Caplet {
                    df1: m.df(spec.times[0]),
                    df2: m.df(spec.times[1]),
                    kappa_inv: 1.0 + spec.strike * spec.accruals[0],
                    delta_z_star: spec.delta_z_star(m),
                },
                var,
            ),
        }
    }
}

/// Constant Hull-White volatility reproducing `target_pv`.
pub fn implied_hw_vol(m: &Model, spec: &InstrumentSpec, target_pv: f64) -> Result<f64> {
    let hw = UnitHullWhite::new(m)?;
    implied_hw_vol_with(&hw, m, spec, target_pv)
}

/// As [`implied_hw_vol`] with prebuilt unit tables.
pub fn implied_hw_vol_with(hw: &UnitHullWhite, m: &Model, spec: &InstrumentSpec, target_pv: f64) -> Result<f64> {
    if !target_pv.is_finite() {
        return Err(invalid("target price must be finite"));
    }
    let lo = hw.price(m, spec, SIGMA_MIN)? - target_pv;
    let hi = hw.price(m, spec, SIGMA_MAX)? - target_pv;
    if lo > 0.0 || hi < 0.0 {
        return Err(Error::Bracket { lo: SIGMA_MIN, hi: SIGMA_MAX, f_lo: lo, f_hi: hi });
    }
    let mut err = None;
    let root = find_root(
        |s| match hw.price(m, spec, s) {
            Ok(p) => p - target_pv,
            Err(e) => {
                err = Some(e);
                f64::NAN
            }
        },
        SIGMA_MIN,
        SIGMA_MAX,
        1e-14,
    );
    match err {
        Some(e) => Err(e),
        None => root,
    }
}

/// Implied Hull-White volatility of a caplet from its effective variance:
/// `√(V_eff / V_unit)`.
pub fn implied_vol_from_variance(hw: &UnitHullWhite, spec: &InstrumentSpec, variance: f64) -> Result<f64> {
    if spec.kind == InstrumentKind::PayerSwaption {
        return Err(invalid("variance shortcut only applies to caplets"));
    }
    if !(variance > 0.0) {
        return Err(crate::error::domain("effective variance must be positive"));
    }
    Ok(sqrt(variance / hw.variance(spec)?))
}
