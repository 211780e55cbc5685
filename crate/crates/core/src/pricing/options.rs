//! Closed-form first-order caplet and swaption prices.

use alloc::vec::Vec;

use super::{InstrumentKind, InstrumentSpec, PriceResult};
use crate::drift::BondExpansion;
use crate::error::{invalid, Error, Result};
use crate::fmath::{cosh, exp, sinh, sqrt};
use crate::model::Model;
use crate::numerics::{find_root, norm_cdf, norm_cdf_diff, norm_pdf};
use crate::termstructure::ModelParams;

const MIN_VARIANCE: f64 = 1e-20;

/// One Gaussian digital-like operand `e^{−λy}Φ(c + βy + s·w)` in the
/// terminal factor `y` and compounded increment `w`, paid at `v`, for an
/// option expiring at `expiry`.
#[derive(Debug, Clone, Copy)]
struct Leg {
    v: f64,
    c: f64,
    beta: f64,
    lambda: f64,
    w_scale: f64,
}

/// `∫₀^v` of the first-order operator applied to the operand of `leg`,
/// evaluated at the origin. Shift pairs are recombined so that the
/// `1/γ` factors never appear on their own.
fn first_order_integral(m: &Model, expiry: f64, leg: Leg) -> Result<f64> {
    let s0 = m.origin_slice();
    let after = if leg.v > expiry { Some(m.slice(expiry, leg.v)?) } else { None };
    let phi_e = s0.phi(expiry);
    let srr_e = s0.sigma_rr(expiry);
    let base = norm_cdf(leg.c);
    let drift = m.drift();
    let g1 = |t1: f64| -> f64 {
        let g = m.gamma(t1);
        let srr = s0.sigma_rr(t1);
        let psi = exp(0.5 * g * g * srr);
        let bp = s0.b_plus(t1, leg.v);
        let a = g * (m.y_star(t1) - bp * srr - s0.sigma_rz(t1));
        let mult = (drift.r1(t1) + psi * bp * srr) * base;
        let (o_diff, o_sum) = if t1 <= expiry {
            let h = g * srr / s0.phi(t1);
            let x = leg.beta * h;
            let diff = norm_cdf_diff(leg.c, x);
            let sum = norm_cdf(leg.c + x) + norm_cdf(leg.c - x);
            if leg.lambda == 0.0 {
                (diff, sum)
            } else {
                let l = leg.lambda * h;
                (cosh(l) * diff - sinh(l) * sum, cosh(l) * sum - sinh(l) * diff)
            }
        } else {
            let s = after.as_ref().expect("slice after expiry");
            let dy = s0.kernel().phi(expiry, t1) * srr_e / phi_e;
            let dz = if leg.w_scale != 0.0 {
                s.sigma_rz(t1) + s.b_plus(t1, leg.v) * s.sigma_rr(t1)
            } else {
                0.0
            };
            let x = g * (leg.beta * dy + leg.w_scale * dz);
            (norm_cdf_diff(leg.c, x), norm_cdf(leg.c + x) + norm_cdf(leg.c - x))
        };
        psi * (cosh(a) * o_diff / (2.0 * g) + sinh(a) / g * 0.5 * o_sum) + mult
    };
    let v = m.kernel().quad(0.0, leg.v, &[expiry], g1);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation("non-finite first-order integral".into()))
    }
}

/// Parameters with `σ ≡ 0` on `[from, to)`.
pub fn sigma_zeroed_params(p: &ModelParams, from: f64, to: f64) -> Result<ModelParams> {
    ModelParams::new(
        p.sigma.with_value_on(from, to, 0.0),
        p.alpha.clone(),
        p.gamma.clone(),
        p.y_star.clone(),
        p.discount.clone(),
    )
}

fn check_caplet(m: &Model, spec: &InstrumentSpec) -> Result<(f64, f64)> {
    spec.validate()?;
    if !spec.is_caplet() {
        return Err(invalid("not a caplet"));
    }
    let (t1, t2) = (spec.times[0], spec.times[1]);
    m.check_time(t2)?;
    Ok((t1, t2))
}

/// Caplet variance `B*(T₁,T₂)²Σ_rr(0,T₁) + Σ_zz(T₁,T₂)`.
fn caplet_variance(m: &Model, t1: f64, t2: f64) -> Result<(f64, f64)> {
    let s1 = m.slice(t1, t2)?;
    let b12 = s1.b_star(t2);
    Ok((b12, b12 * b12 * m.origin_slice().sigma_rr(t1) + s1.sigma_zz(t2)))
}

/// `(d₁, d₂, θ)` at state `(y, w)` and time `t ≤ T₁` for a compounded caplet:
/// `θ = B*(T₁,T₂)φ(t,T₁)y`,
/// `d₁ = (θ + w − Δz* + ½V)/√V` with `V = B*²Σ_rr(t,T₁) + Σ_zz(T₁,T₂)`.
pub fn caplet_d_values(m: &Model, spec: &InstrumentSpec, y: f64, w: f64, t: f64) -> Result<(f64, f64, f64)> {
    let (t1, t2) = check_caplet(m, spec)?;
    if !(t >= 0.0 && t <= t1) {
        return Err(invalid("caplet d-values need 0 <= t <= T1"));
    }
    let s1 = m.slice(t1, t2)?;
    let b12 = s1.b_star(t2);
    let k = m.kernel();
    let var = b12 * b12 * k.sigma_rr(t, t1) + s1.sigma_zz(t2);
    if var < MIN_VARIANCE {
        return Err(Error::DegenerateCovariance);
    }
    let sq = sqrt(var);
    let theta = b12 * k.phi(t, t1) * y;
    let d1 = (theta + w - spec.delta_z_star(m) + 0.5 * var) / sq;
    Ok((d1, d1 - sq, theta))
}

fn caplet_engine(m: &Model, spec: &InstrumentSpec, compounded: bool) -> Result<PriceResult> {
    let (t1, t2) = check_caplet(m, spec)?;
    let d1f = m.df(t1);
    let d2f = m.df(t2);
    let kinv = 1.0 + spec.strike * spec.accruals[0];
    let (b12, var) = caplet_variance(m, t1, t2)?;
    let var = if compounded { var } else { b12 * b12 * m.origin_slice().sigma_rr(t1) };
    if var < MIN_VARIANCE {
        let pv = (d1f - kinv * d2f).max(0.0);
        return Ok(PriceResult { pv, order0: pv, order1: 0.0, d_values: (0.0, 0.0), variance: var });
    }
    let s0 = m.origin_slice();
    let phi01 = s0.phi(t1);
    let srz01 = s0.sigma_rz(t1);
    let sq = sqrt(var);
    let c1 = (-spec.delta_z_star(m) + 0.5 * var) / sq;
    let c2 = c1 - sq;
    let beta = b12 * phi01 / sq;
    let i1 = first_order_integral(m, t1, Leg { v: t1, c: c1, beta, lambda: 0.0, w_scale: 0.0 })?;
    let i2 = first_order_integral(
        m,
        t1,
        Leg { v: t2, c: c2, beta, lambda: b12 * phi01, w_scale: if compounded { 1.0 / sq } else { 0.0 } },
    )?;
    let n1 = norm_cdf(c1);
    let n2 = norm_cdf(c2);
    let order0 = d1f * n1 - kinv * d2f * n2;
    let order1 = -d1f * i1 + kinv * d2f * (i2 + b12 * srz01 * n2) - kinv * d2f * sq * norm_pdf(c2);
    Ok(PriceResult { pv: order0 + order1, order0, order1, d_values: (c1, c2), variance: var })
}

/// Compounded-rate (RFR) caplet paying `[e^{∫r} − 1 − Kδ]⁺` at `T₂`.
pub fn price_rfr_caplet(m: &Model, spec: &InstrumentSpec) -> Result<PriceResult> {
    caplet_engine(m, spec, true)
}


/// Term-rate (LIBOR) caplet fixing at `T₁` on the forward bond `F^{T₂}(y,T₁)`
/// and paying `[1/F − 1 − Kδ]⁺` at `T₂`. Same expansion as the compounded
/// caplet with the variance reduced to `B*(T₁,T₂)²Σ_rr(0,T₁)` and no
/// dependence on the rate path after `T₁`.
pub fn price_libor_caplet(m: &Model, spec: &InstrumentSpec) -> Result<PriceResult> {
    caplet_engine(m, spec, false)
}

fn swap_coefficients(spec: &InstrumentSpec) -> Vec<f64> {
    let n = spec.accruals.len();
    let mut c: Vec<f64> = spec.accruals.iter().map(|d| spec.strike * d).collect();
    c[n - 1] += 1.0;
    c
}

fn check_swaption(m: &Model, spec: &InstrumentSpec) -> Result<()> {
    spec.validate()?;
    if spec.kind != InstrumentKind::PayerSwaption {
        return Err(invalid("not a swaption"));
    }
    m.check_time(spec.last_date())
}

/// Factor level `y_c` at expiry where the underlying swap is worth zero,
/// using first-order bond prices.
pub fn swaption_critical_factor(m: &Model, spec: &InstrumentSpec) -> Result<f64> {
    check_swaption(m, spec)?;
    let t0 = spec.times[0];
    let c = swap_coefficients(spec);
    let bonds = spec.times[1..]
        .iter()
        .map(|&ti| BondExpansion::new(m, t0, ti))
        .collect::<Result<Vec<_>>>()?;
    let value = |y: f64| -> f64 {
        let mut s = -1.0;
        for (b, ci) in bonds.iter().zip(&c) {
            s += ci * b.price(y, false);
        }
        s
    };
    let sd = sqrt(m.origin_slice().sigma_rr(t0)).max(1e-4);
    let mut width = 6.0;
    loop {
        let (lo, hi) = (-width * sd, width * sd);
        if value(lo) * value(hi) <= 0.0 {
            return find_root(value, lo, hi, 1e-14 * sd);
        }
        if width >= 20.0 {
            return Err(Error::Bracket { lo, hi, f_lo: value(lo), f_hi: value(hi) });
        }
        width = (width * 2.0).min(20.0);
    }
}

/// European payer swaption on the swap `[T₀, Tₙ]`.
pub fn price_swaption(m: &Model, spec: &InstrumentSpec) -> Result<PriceResult> {
    check_swaption(m, spec)?;
    let t0 = spec.times[0];
    let c = swap_coefficients(spec);
    let s0 = m.origin_slice();
    let srr0 = s0.sigma_rr(t0);
    let d0f = m.df(t0);
    if srr0 < MIN_VARIANCE {
        let mut pv = d0f;
        for (ti, ci) in spec.times[1..].iter().zip(&c) {
            pv -= ci * m.df(*ti);
        }
        let pv = pv.max(0.0);
        return Ok(PriceResult { pv, order0: pv, order1: 0.0, d_values: (0.0, 0.0), variance: srr0 });
    }
    let yc = swaption_critical_factor(m, spec)?;
    let sq = sqrt(srr0);
    let phi0 = s0.phi(t0);
    let srz0 = s0.sigma_rz(t0);
    let beta = phi0 / sq;
    let c0 = (-yc - srz0) / sq;
    let i0 = first_order_integral(m, t0, Leg { v: t0, c: c0, beta, lambda: 0.0, w_scale: 0.0 })?;
    let mut order0 = d0f * norm_cdf(c0);
    let mut order1 = -d0f * i0;
    let after = m.slice(t0, spec.last_date())?;
    let mut cn = c0;
    for (ti, ci) in spec.times[1..].iter().zip(&c) {
        let bi = after.b_star(*ti);
        let di = c0 - bi * sq;
        let ii = first_order_integral(m, t0, Leg { v: *ti, c: di, beta, lambda: bi * phi0, w_scale: 0.0 })?;
        let dfi = m.df(*ti);
        let ni = norm_cdf(di);
        order0 -= ci * dfi * ni;
        order1 -= ci * dfi * (-bi * srz0 * ni - ii + bi * sq * norm_pdf(di));
        cn = di;
    }
    Ok(PriceResult { pv: order0 + order1, order0, order1, d_values: (c0, cn), variance: srr0 })
}
