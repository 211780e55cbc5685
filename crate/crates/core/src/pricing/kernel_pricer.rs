//! Independent pricer that integrates payoffs against the transition kernel
//! directly, used to cross-check the closed forms.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::fmath::{cos, exp, ln, sqrt};
use crate::kernel::expansion::{kernel_expectation, KernelGeometry};
use crate::kernel::G1Options;
use crate::model::Model;

use super::InstrumentSpec;

/// Kernel price split into its leading and first-order parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPrice {
    pub order0: f64,
    pub order1: f64,
}

impl KernelPrice {
    pub fn pv(&self) -> f64 {
        self.order0 + self.order1
    }
}

/// Value at `t` in state `(y, z)` of `payoff(η, ζ)` paid at `v`, where `η`
/// is the factor and `ζ` the integrated rate excess at `v`.
pub fn price_by_kernel_quadrature(
    m: &Model,
    payoff: &dyn Fn(f64, f64) -> f64,
    y: f64,
    z: f64,
    t: f64,
    v: f64,
    opts: &G1Options,
) -> Result<KernelPrice> {
    let (e0, e1) = kernel_expectation(m, payoff, y, z, t, v, opts)?;
    let pref = m.discount(t, v) * exp(-KernelGeometry::new(m, t, v)?.mu_star(y));
    Ok(KernelPrice { order0: pref * e0, order1: pref * e1 })
}

/// Chebyshev-Lobatto interpolant on `[a, b]`.
struct Chebyshev {
    a: f64,
    b: f64,
    x: Vec<f64>,
    f: Vec<f64>,
}

impl Chebyshev {
    fn nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|j| {
                let c = cos(core::f64::consts::PI * j as f64 / (n - 1) as f64);
                0.5 * (a + b) + 0.5 * (b - a) * c
            })
            .collect()
    }

    fn eval(&self, t: f64) -> f64 {
        let t = t.max(self.a).min(self.b);
        let n = self.x.len();
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..n {
            let d = t - self.x[j];
            if d == 0.0 {
                return self.f[j];
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n - 1 {
                w *= 0.5;
            }
            num += w * self.f[j] / d;
            den += w / d;
        }
        num / den
    }
}

/// Compounded-rate caplet priced in two kernel stages: the `[T₁, T₂]`
/// payoff is rolled back to `T₁` on a grid of factor values, then that
/// value is rolled back to the origin.
pub fn kernel_caplet_price(m: &Model, spec: &InstrumentSpec, opts: &G1Options) -> Result<KernelPrice> {
    if !spec.is_caplet() {
        return Err(invalid("kernel caplet pricer needs a caplet"));
    }
    spec.validate()?;
    let (t1, t2) = (spec.times[0], spec.times[1]);
    let kinv = 1.0 + spec.strike * spec.accruals[0];
    let d12 = m.discount(t1, t2);
    let kink = ln(kinv * d12);
    let inner_payoff = move |_eta: f64, zeta: f64| (exp(zeta) / d12 - kinv).max(0.0);
    let mut inner_opts = opts.clone();
    inner_opts.zeta_kinks = alloc::vec![kink];

    let sd = sqrt(m.origin_slice().sigma_rr(t1));
    let (a, b) = (-opts.sd_range * sd, opts.sd_range * sd);
    let x = Chebyshev::nodes(a, b, 48);
    let mut f0 = Vec::with_capacity(x.len());
    let mut f1 = Vec::with_capacity(x.len());
    for &y in &x {
        let p = price_by_kernel_quadrature(m, &inner_payoff, y, 0.0, t1, t2, &inner_opts)?;
        f0.push(p.order0);
        f1.push(p.pv());
    }
    let lead = Chebyshev { a, b, x: x.clone(), f: f0 };
    let full = Chebyshev { a, b, x, f: f1 };
    let outer_opts = G1Options { zeta_kinks: Vec::new(), ..opts.clone() };
    let p0 = price_by_kernel_quadrature(m, &|eta, _| lead.eval(eta), 0.0, 0.0, 0.0, t1, &outer_opts)?;
    let p = price_by_kernel_quadrature(m, &|eta, _| full.eval(eta), 0.0, 0.0, 0.0, t1, &outer_opts)?;
    Ok(KernelPrice { order0: p0.order0, order1: p.pv() - p0.order0 })
}
