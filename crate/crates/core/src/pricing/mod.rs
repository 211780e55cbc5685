//! Bond prices, forward rates, caplets and swaptions.

mod kernel_pricer;
mod options;

pub use kernel_pricer::{kernel_caplet_price, price_by_kernel_quadrature, KernelPrice};
pub use options::{
    caplet_d_values, price_libor_caplet, price_rfr_caplet, price_swaption, sigma_zeroed_params,
    swaption_critical_factor,
};

use alloc::format;
use alloc::vec::Vec;

use crate::drift::BondExpansion;
use crate::error::{domain, invalid, Result};
use crate::fmath::{coshm1, exp, ln, sinh};
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InstrumentKind {
    RfrCaplet,
    LiborCaplet,
    PayerSwaption,
}

impl InstrumentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            InstrumentKind::RfrCaplet => "rfr_caplet",
            InstrumentKind::LiborCaplet => "libor_caplet",
            InstrumentKind::PayerSwaption => "payer_swaption",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rfr_caplet" | "rfr" | "compounded_caplet" => Some(InstrumentKind::RfrCaplet),
            "libor_caplet" | "libor" | "term_caplet" => Some(InstrumentKind::LiborCaplet),
            "payer_swaption" | "swaption" => Some(InstrumentKind::PayerSwaption),
            _ => None,
        }
    }
}

/// Contract terms. For caplets `times = [T1, T2]`; for swaptions
/// `times = [T0, T1, ..., Tn]`. `accruals[i]` is the year fraction of the
/// period ending at `times[i + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentSpec {
    pub kind: InstrumentKind,
    pub times: Vec<f64>,
    pub strike: f64,
    pub accruals: Vec<f64>,
}

impl InstrumentSpec {
    pub fn caplet(kind: InstrumentKind, t1: f64, t2: f64, strike: f64, accrual: f64) -> Result<Self> {
        let s = InstrumentSpec { kind, times: alloc::vec![t1, t2], strike, accruals: alloc::vec![accrual] };
        s.validate()?;
        Ok(s)
    }

    pub fn rfr_caplet(t1: f64, t2: f64, strike: f64) -> Result<Self> {
        Self::caplet(InstrumentKind::RfrCaplet, t1, t2, strike, t2 - t1)
    }

    pub fn libor_caplet(t1: f64, t2: f64, strike: f64) -> Result<Self> {
        Self::caplet(InstrumentKind::LiborCaplet, t1, t2, strike, t2 - t1)
    }

    pub fn swaption(times: Vec<f64>, strike: f64, accruals: Vec<f64>) -> Result<Self> {
        let s = InstrumentSpec { kind: InstrumentKind::PayerSwaption, times, strike, accruals };
        s.validate()?;
        Ok(s)
    }

    /// Swaption with accruals equal to the period lengths.
    pub fn swaption_simple(times: Vec<f64>, strike: f64) -> Result<Self> {
        let acc = times.windows(2).map(|w| w[1] - w[0]).collect();
        Self::swaption(times, strike, acc)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        match self.kind {
            InstrumentKind::RfrCaplet | InstrumentKind::LiborCaplet if n != 2 => {
                return Err(invalid("a caplet needs exactly two dates"))
            }
            InstrumentKind::PayerSwaption if n < 2 => {
                return Err(invalid("a swaption needs an expiry and at least one payment date"))
            }
            _ => {}
        }
        if self.accruals.len() != n - 1 {
            return Err(invalid(format!("expected {} daycount fractions, got {}", n - 1, self.accruals.len())));
        }
        if !(self.times[0] > 0.0) {
            return Err(invalid("first date must be positive"));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("dates must be strictly ascending"));
        }
        if self.accruals.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(invalid("daycount fractions must be positive"));
        }
        if !self.strike.is_finite() {
            return Err(invalid("strike must be finite"));
        }
        if self.is_caplet() && !(1.0 + self.strike * self.accruals[0] > 0.0) {
            return Err(invalid("1 + K·δ must be positive"));
        }
        Ok(())
    }

    pub fn is_caplet(&self) -> bool {
        matches!(self.kind, InstrumentKind::RfrCaplet | InstrumentKind::LiborCaplet)
    }

    pub fn last_date(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// `κ = (1 + Kδ)⁻¹` of a caplet.
    pub fn kappa(&self) -> f64 {
        1.0 / (1.0 + self.strike * self.accruals[0])
    }

    /// `Δz* = ln(κ⁻¹ D(T₁,T₂))` of a caplet.
    pub fn delta_z_star(&self, m: &Model) -> f64 {
        ln((1.0 + self.strike * self.accruals[0]) * m.discount(self.times[0], self.times[1]))
    }
}

/// Price split into the quasi-Hull-White part and the first-order correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceResult {
    pub pv: f64,
    pub order0: f64,
    pub order1: f64,
    /// Moneyness values `(d₁, d₂)` at the baseline variance (for swaptions
    /// `(d⁽⁰⁾, d⁽ⁿ⁾)`).
    pub d_values: (f64, f64),
    /// Baseline variance entering the d-values.
    pub variance: f64,
}

/// Price any instrument.
pub fn price(m: &Model, spec: &InstrumentSpec) -> Result<PriceResult> {
    match spec.kind {
        InstrumentKind::RfrCaplet => price_rfr_caplet(m, spec),
        InstrumentKind::LiborCaplet => price_libor_caplet(m, spec),
        InstrumentKind::PayerSwaption => price_swaption(m, spec),
    }
}

/// Expansion order of bond prices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondOrder {
    First,
    Second,
}

/// `F^T(y,t)`, the zero-coupon bond price at `t` in state `y`.
pub fn zcb_price(m: &Model, y: f64, t: f64, maturity: f64, order: BondOrder) -> Result<f64> {
    Ok(BondExpansion::new(m, t, maturity)?.price(y, order == BondOrder::Second))
}

/// Instantaneous forward rate `f^T(y,t) = −∂_T ln F^T(y,t)`, differentiating
/// the bond expansion analytically in `T`.
pub fn forward_rate(m: &Model, y: f64, t: f64, maturity: f64, order: BondOrder) -> Result<f64> {
    if !(t <= maturity) {
        return Err(domain("forward rate needs t <= T"));
    }
    let bond = BondExpansion::new(m, t, maturity)?;
    let st = m.slice(t, maturity)?;
    let s0 = m.origin_slice();
    let big_t = maturity;
    let g_t = m.gamma(big_t);
    let psi_t = st.psi(big_t);
    let phi_t = st.phi(big_t);
    let d_mu = psi_t * phi_t * (y + s0.sigma_rz(t) + st.b_star(big_t) * s0.sigma_rr(t));
    let arg_t = g_t * (phi_t * y + m.y_star(big_t) - st.sigma_rz(big_t));
    let tail = m.kernel().quad(t, big_t, &[], |t1| {
        let g = m.gamma(t1);
        let srr = st.sigma_rr(t1);
        let arg = g * (st.phi(t1) * y + m.y_star(t1) - st.b_plus(t1, big_t) * srr - st.sigma_rz(t1));
        exp(0.5 * g * g * srr) * (phi_t / st.phi(t1)) * srr * coshm1(arg)
    });
    let d_f1 = psi_t * sinh(arg_t) / g_t + m.drift().r1(big_t) - d_mu - psi_t * tail;
    let f1 = bond.f1(y);
    let fbar = m.params().discount.forward_at(big_t);
    Ok(match order {
        BondOrder::First => fbar + d_mu + d_f1 / (1.0 - f1),
        BondOrder::Second => {
            let f2 = bond.f2(y);
            fbar + d_mu + (d_f1 * (1.0 - f1) + m.r2_installed(big_t)) / (1.0 - f1 + f2)
        }
    })
}
