//! Zeroth- and first-order transition kernels applied to payoffs.
//!
//! The leading kernel is a bivariate Gaussian in `(η, ζ)` with means
//! `φ(t,v)y − Σ_rz(t,v)` and `z + μ*(y,t,v) − ½Σ_zz(t,v)`. The first-order
//! kernel is a differential-and-shift operator in `(y, z)` acting on it, so
//! applying it to a payoff only needs Gaussian expectations of the payoff
//! times score polynomials, evaluated at shifted means.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fmath::{exp, sqrt};
use crate::model::Model;
use crate::numerics::{BivariateGaussian, GaussLegendre};

/// Quadrature controls for payoff expectations.
#[derive(Debug, Clone, PartialEq)]
pub struct G1Options {
    /// Half-width of the integration box in standard deviations.
    pub sd_range: f64,
    /// Panels per axis.
    pub panels: usize,
    /// Gauss-Legendre nodes per panel.
    pub nodes: usize,
    /// Values of `ζ` where the payoff has a kink; the `ζ` axis is split there.
    pub zeta_kinks: Vec<f64>,
}

impl Default for G1Options {
    fn default() -> Self {
        G1Options { sd_range: 8.0, panels: 8, nodes: 10, zeta_kinks: Vec::new() }
    }
}

/// Gaussian expectations of `P`, `P·s` and `P·(s sᵀ − Σ⁻¹)` where `s` is the
/// score `Σ⁻¹(x − m)`; equivalently `E`, `∂_m E` and `∂²_m E`.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Moments {
    pub e: f64,
    pub d_eta: f64,
    pub d_zeta: f64,
    pub d_eta_zeta: f64,
    pub d_zeta_zeta: f64,
}

pub(crate) struct MomentEngine {
    rule: GaussLegendre,
    l11: f64,
    l21: f64,
    l22: f64,
    inv_ez: f64,
    inv_zz: f64,
    opts: G1Options,
}

impl MomentEngine {
    /// `cov` is ordered `(Σ_ηη, Σ_ηζ, Σ_ζζ)`.
    pub fn new(cov: (f64, f64, f64), opts: &G1Options) -> Result<Self> {
        // ζ first so payoffs that only depend on ζ see a one-dimensional kink
        let g = BivariateGaussian::new(cov.2, cov.1, cov.0)?;
        let (l11, l21, l22) = g.cholesky()?;
        let det = g.det();
        Ok(MomentEngine {
            rule: GaussLegendre::new(opts.nodes.max(2)),
            l11,
            l21,
            l22,
            inv_ez: -cov.1 / det,
            inv_zz: cov.0 / det,
            opts: opts.clone(),
        })
    }

    fn axis(&self, kinks: &[f64]) -> Vec<(f64, f64)> {
        let r = self.opts.sd_range;
        let mut edges: Vec<f64> = (0..=self.opts.panels)
            .map(|i| -r + 2.0 * r * i as f64 / self.opts.panels as f64)
            .collect();
        for &k in kinks {
            if k > -r && k < r {
                edges.push(k);
            }
        }
        edges.sort_by(|a, b| a.total_cmp(b));
        edges.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let mut out = Vec::new();
        for w in edges.windows(2) {
            for j in 0..self.rule.len() {
                let u = self.rule.node_on(w[0], w[1], j);
                let wt = self.rule.weight_on(w[0], w[1], j);
                out.push((u, wt * exp(-0.5 * u * u) / sqrt(2.0 * core::f64::consts::PI)));
            }
        }
        out
    }

    pub fn moments(&self, payoff: &dyn Fn(f64, f64) -> f64, m_eta: f64, m_zeta: f64) -> Moments {
        let kinks: Vec<f64> = self.opts.zeta_kinks.iter().map(|k| (k - m_zeta) / self.l11).collect();
        let u_axis = self.axis(&kinks);
        let w_axis = self.axis(&[]);
        let mut mo = Moments::default();
        for &(u1, w1) in &u_axis {
            let zeta = m_zeta + self.l11 * u1;
            for &(u2, w2) in &w_axis {
                let eta = m_eta + self.l21 * u1 + self.l22 * u2;
                let p = payoff(eta, zeta) * w1 * w2;
                if p == 0.0 {
                    continue;
                }
                let s_eta = u2 / self.l22;
                let s_zeta = (u1 - self.l21 * s_eta) / self.l11;
                mo.e += p;
                mo.d_eta += p * s_eta;
                mo.d_zeta += p * s_zeta;
                mo.d_eta_zeta += p * (s_eta * s_zeta - self.inv_ez);
                mo.d_zeta_zeta += p * (s_zeta * s_zeta - self.inv_zz);
            }
        }
        mo
    }
}

/// Means and covariance of the leading kernel.
#[derive(Debug, Clone, Copy)]
pub(crate) struct KernelGeometry {
    pub phi: f64,
    pub b_star: f64,
    pub sigma_rr: f64,
    pub sigma_rz: f64,
    pub sigma_zz: f64,
    pub rz0: f64,
    pub rr0: f64,
}

impl KernelGeometry {
    pub fn new(m: &Model, t: f64, v: f64) -> Result<Self> {
        m.check_time(t)?;
        m.check_time(v)?;
        if !(t <= v) {
            return Err(crate::error::domain("kernel needs t <= v"));
        }
        let s = m.slice(t, v)?;
        let p = s.stats(v);
        let o = m.origin_slice();
        Ok(KernelGeometry {
            phi: p.phi,
            b_star: p.b_star,
            sigma_rr: p.sigma_rr,
            sigma_rz: p.sigma_rz,
            sigma_zz: p.sigma_zz,
            rz0: o.sigma_rz(t),
            rr0: o.sigma_rr(t),
        })
    }

    pub fn mu_star(&self, y: f64) -> f64 {
        self.b_star * (y + self.rz0) + 0.5 * self.b_star * self.b_star * self.rr0
    }

    pub fn means(&self, y: f64, z: f64) -> (f64, f64) {
        (self.phi * y - self.sigma_rz, z + self.mu_star(y) - 0.5 * self.sigma_zz)
    }

    pub fn cov(&self) -> (f64, f64, f64) {
        (self.sigma_rr, self.sigma_rz, self.sigma_zz)
    }
}

/// Leading-order transition density `G₀(y,z,t; η,ζ,v)`.
pub fn kernel_g0(m: &Model, y: f64, z: f64, t: f64, eta: f64, zeta: f64, v: f64) -> Result<f64> {
    let k = KernelGeometry::new(m, t, v)?;
    let g = BivariateGaussian::new(k.sigma_rr, k.sigma_rz, k.sigma_zz)?;
    let (me, mz) = k.means(y, z);
    g.pdf(eta - me, zeta - mz)
}

/// `∬ G₁(y,z,t; η,ζ,v) P(η,ζ) dη dζ`, the first-order correction to the
/// normalised kernel expectation of `payoff`. The full price is
/// `D(t,v)e^{−μ*}(∬G₀P + ∬G₁P)`.
pub fn kernel_g1_apply(
    m: &Model,
    payoff: &dyn Fn(f64, f64) -> f64,
    y: f64,
    z: f64,
    t: f64,
    v: f64,
    opts: &G1Options,
) -> Result<f64> {
    Ok(kernel_expectation(m, payoff, y, z, t, v, opts)?.1)
}

/// `(∬G₀P, ∬G₁P)`.
pub(crate) fn kernel_expectation(
    m: &Model,
    payoff: &dyn Fn(f64, f64) -> f64,
    y: f64,
    z: f64,
    t: f64,
    v: f64,
    opts: &G1Options,
) -> Result<(f64, f64)> {
    let k = KernelGeometry::new(m, t, v)?;
    let engine = MomentEngine::new(k.cov(), opts)?;
    let (me, mz) = k.means(y, z);
    let base = engine.moments(payoff, me, mz);
    // H = (∂_z − 1)E
    let h = |mo: &Moments| mo.d_zeta - mo.e;
    let q = k.sigma_rz * (base.d_eta_zeta - base.d_eta) + k.sigma_zz * (base.d_zeta_zeta - base.d_zeta);
    let h0 = h(&base);

    let st = m.slice(t, v)?;
    let r = m.kernel().rule();
    let mut shift_sum = 0.0;
    if v > t {
        for w in m.kernel().panels(t, v, &[]).windows(2) {
            for j in 0..r.len() {
                let t1 = r.node_on(w[0], w[1], j);
                let wt = r.weight_on(w[0], w[1], j);
                let g = m.gamma(t1);
                let srr = st.sigma_rr(t1);
                let phi1 = st.phi(t1);
                let psi = exp(0.5 * g * g * srr);
                let bp = st.b_plus(t1, v);
                let arg = g * (phi1 * y + m.y_star(t1) - bp * srr - st.sigma_rz(t1));
                let rp = psi * exp(arg) / (2.0 * g);
                let rm = psi * exp(-arg) / (2.0 * g);
                let dy = srr / phi1;
                let dz = st.sigma_rz(t1) - st.b_star(t1) * dy;
                let de = k.phi * g * dy;
                let dzeta = g * dz + k.b_star * g * dy;
                let hp = h(&engine.moments(payoff, me + de, mz + dzeta));
                let hm = h(&engine.moments(payoff, me - de, mz - dzeta));
                let mult = m.drift().r1(t1)
                    - psi * (phi1 * (y + k.rz0 + st.b_star(t1) * k.rr0) - bp * srr);
                shift_sum += wt * (rp * hp - rm * hm + mult * h0);
            }
        }
    }
    let g1 = shift_sum - q;
    if !(base.e.is_finite() && g1.is_finite()) {
        return Err(Error::Evaluation("non-finite kernel expectation".into()));
    }
    Ok((base.e, g1))
}
