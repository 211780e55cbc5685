//! No-arbitrage drift `R*(t)` and the bond-price correction functionals.
//!
//! `R₁*` is fixed by requiring the first-order bond correction `F₁(0,T)` to
//! vanish for every `T`:
//!
//! `R₁*(t) = −ψ(0,t) [ sinh Y*(t,t)/γ(t) − ∫₀ᵗ ψ(0,t₁) φ(t₁,t) Σ_rr(0,t₁) (cosh Y*(t₁,t) − 1) dt₁ ]`
//!
//! with `Y*(t₁,t) = γ(t₁)(y*(t₁) − B⁺(0,t₁,t)Σ_rr(0,t₁) − Σ_rz(0,t₁))`, and the
//! second-order term takes the product form `R₂*(t) = R₁*(t)∫₀ᵗR₁*`.

use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::fmath::{coshm1, exp, sinh};
use crate::kernel::{r1_plus_minus, Slice};
use crate::model::Model;
use crate::numerics::{GaussLegendre, PanelFunction};
use crate::termstructure::ModelParams;

/// `R₁*`, `R₂*` and their running integrals on the kernel panel grid.
#[derive(Debug, Clone)]
pub struct DriftTable {
    rule: GaussLegendre,
    r1: PanelFunction,
    r2: PanelFunction,
    total: PanelFunction,
}

struct NodeStats {
    t: f64,
    sigma_rr: f64,
    psi: f64,
    phi: f64,
    b_star: f64,
    sigma_rz: f64,
    gamma: f64,
    y_star: f64,
}

impl DriftTable {
    /// Tabulate the drift at the Gauss nodes of the origin-0 slice.
    pub fn build(params: &ModelParams, origin: &Slice) -> Result<Self> {
        let kernel = origin.kernel();
        let rule = kernel.rule().clone();
        let n = rule.len();
        let edges = kernel.panels(0.0, origin.end(), &[]);
        let stats_at = |t: f64| {
            let p = origin.stats(t);
            NodeStats {
                t,
                sigma_rr: p.sigma_rr,
                psi: p.psi,
                phi: p.phi,
                b_star: p.b_star,
                sigma_rz: p.sigma_rz,
                gamma: params.gamma.at(t),
                y_star: params.y_star.at(t),
            }
        };
        let nodes: Vec<NodeStats> = edges
            .windows(2)
            .flat_map(|w| {
                let rule = &rule;
                (0..n).map(move |j| rule.node_on(w[0], w[1], j))
            })
            .map(stats_at)
            .collect();

        // Integrand of the cosh term for source point t1 and target t.
        let cosh_term = |s: &NodeStats, b_plus: f64, phi_t1_t: f64| {
            let y = s.gamma * (s.y_star - b_plus * s.sigma_rr - s.sigma_rz);
            s.psi * phi_t1_t * s.sigma_rr * coshm1(y)
        };

        let mut r1 = Vec::with_capacity(nodes.len());
        for (k, w) in edges.windows(2).enumerate() {
            let a = w[0];
            for j in 0..n {
                let target = &nodes[k * n + j];
                let t = target.t;
                let mut integral = 0.0;
                for (m, pw) in edges.windows(2).take(k).enumerate() {
                    let mut s = 0.0;
                    for i in 0..n {
                        let src = &nodes[m * n + i];
                        let b_plus = (target.b_star - src.b_star) / src.phi;
                        s += rule.weights()[i] * cosh_term(src, b_plus, target.phi / src.phi);
                    }
                    integral += 0.5 * (pw[1] - pw[0]) * s;
                }
                let mut s = 0.0;
                for i in 0..n {
                    let u = rule.node_on(a, t, i);
                    let src = stats_at(u);
                    let b_plus = origin.b_plus(u, t);
                    s += rule.weights()[i] * cosh_term(&src, b_plus, target.phi / src.phi);
                }
                integral += 0.5 * (t - a) * s;
                let y_tt = target.gamma * (target.y_star - target.sigma_rz);
                r1.push(-target.psi * (sinh_over(y_tt, target.gamma) - integral));
            }
        }
        let r1 = PanelFunction::new(edges.clone(), r1, &rule);

        let mut r2 = Vec::with_capacity(r1.edges().len() * n);
        let mut run = alloc::vec![0.0; n];
        for (k, w) in edges.windows(2).enumerate() {
            let vals = r1.panel_values(k);
            rule.running_integrals(w[0], w[1], vals, &mut run);
            let base = r1.integral_to(&rule, w[0]);
            for j in 0..n {
                r2.push(vals[j] * (base + run[j]));
            }
        }
        let r2 = PanelFunction::new(edges.clone(), r2, &rule);
        let total: Vec<f64> = (0..edges.len() - 1)
            .flat_map(|k| {
                let a = r1.panel_values(k);
                let b = r2.panel_values(k);
                (0..n).map(move |j| a[j] + b[j]).collect::<Vec<_>>()
            })
            .collect();
        let total = PanelFunction::new(edges, total, &rule);
        Ok(DriftTable { rule, r1, r2, total })
    }

    pub fn end(&self) -> f64 {
        self.r1.end()
    }

    fn clamp(&self, t: f64) -> f64 {
        t.max(0.0).min(self.end())
    }

    pub fn r1(&self, t: f64) -> f64 {
        self.r1.value(&self.rule, self.clamp(t))
    }

    pub fn r2(&self, t: f64) -> f64 {
        self.r2.value(&self.rule, self.clamp(t))
    }

    /// `∫₀ᵗ R₁*`.
    pub fn r1_integral(&self, t: f64) -> f64 {
        self.r1.integral_to(&self.rule, self.clamp(t))
    }

    /// `∫₀ᵗ R₂*`.
    pub fn r2_integral(&self, t: f64) -> f64 {
        self.r2.integral_to(&self.rule, self.clamp(t))
    }

    /// `∫₀ᵗ (R₁* + R₂*)`.
    pub fn total_integral(&self, t: f64) -> f64 {
        self.total.integral_to(&self.rule, self.clamp(t))
    }

    /// Grid nodes with the tabulated `(t, R₁*, R₂*)`.
    pub fn nodes(&self) -> Vec<(f64, f64, f64)> {
        let n = self.rule.len();
        let mut out = Vec::new();
        for (k, w) in self.r1.edges().windows(2).enumerate() {
            for j in 0..n {
                out.push((
                    self.rule.node_on(w[0], w[1], j),
                    self.r1.panel_values(k)[j],
                    self.r2.panel_values(k)[j],
                ));
            }
        }
        out
    }
}

/// `sinh(x)/γ` where `x = γ·(...)`; well defined for tiny `γ`.
#[inline]
pub(crate) fn sinh_over(x: f64, gamma: f64) -> f64 {
    sinh(x) / gamma
}

/// `Y*(t₁, t)` from the origin-0 tables.
pub(crate) fn y_star_arg_with(m: &Model, t1: f64, t: f64) -> f64 {
    let s = m.origin_slice();
    let g = m.gamma(t1);
    g * (m.y_star(t1) - s.b_plus(t1, t) * s.sigma_rr(t1) - s.sigma_rz(t1))
}

/// `R₁*(t)` in the sinh/cosh form, by direct quadrature.
pub fn r1_star(m: &Model, t: f64) -> Result<f64> {
    m.check_time(t)?;
    let s = m.origin_slice();
    let phi_t = s.phi(t);
    let integral = m.kernel().quad(0.0, t, &[], |t1| {
        let y = y_star_arg_with(m, t1, t);
        s.psi(t1) * (phi_t / s.phi(t1)) * s.sigma_rr(t1) * coshm1(y)
    });
    let y_tt = y_star_arg_with(m, t, t);
    Ok(-s.psi(t) * (sinh_over(y_tt, m.gamma(t)) - integral))
}

/// `R₁*(t)` in the shifted-coefficient form
/// `−R₁⁺(0,0,t,t) + R₁⁻(0,0,t,t) + ψ(0,t)∫₀ᵗ φ(t₁,t)Σ_rr(0,t₁)(γ(t₁)(R₁⁺+R₁⁻)(0,0,t₁,t) − ψ(0,t₁))dt₁`.
pub fn r1_star_pm(m: &Model, t: f64) -> Result<f64> {
    m.check_time(t)?;
    let s = m.origin_slice();
    let phi_t = s.phi(t);
    let (p, q) = r1_plus_minus(m, 0.0, 0.0, t, t)?;
    let mut err = None;
    let integral = m.kernel().quad(0.0, t, &[], |t1| match r1_plus_minus(m, 0.0, 0.0, t1, t) {
        Ok((rp, rm)) => {
            (phi_t / s.phi(t1)) * s.sigma_rr(t1) * (m.gamma(t1) * (rp + rm) - s.psi(t1))
        }
        Err(e) => {
            err = Some(e);
            0.0
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(-p + q + s.psi(t) * integral)
}

/// `R₂*(t) = R₁*(t)∫₀ᵗR₁*` from the drift table.
pub fn r2_star(m: &Model, t: f64) -> Result<f64> {
    m.check_time(t)?;
    Ok(m.drift().r2(t))
}

/// Precomputed first- and second-order bond corrections for a fixed
/// `(t, T)`, cheap to evaluate for many factor values `y`.
#[derive(Debug, Clone)]
pub struct BondExpansion {
    t: f64,
    maturity: f64,
    discount: f64,
    b_star: f64,
    rz0: f64,
    rr0: f64,
    half_zz: f64,
    r1_int: f64,
    r2_int: f64,
    // per node: weight·ψ/γ, γ, φ(t,t₁), constant part of the sinh argument
    nodes: Vec<[f64; 4]>,
}

impl BondExpansion {
    pub fn new(m: &Model, t: f64, maturity: f64) -> Result<Self> {
        if !(t <= maturity) {
            return Err(domain("bond expansion needs t <= T"));
        }
        m.check_time(t)?;
        m.check_time(maturity)?;
        let s0 = m.origin_slice();
        let st = m.slice(t, maturity)?;
        let k = m.kernel();
        let r = k.rule();
        let mut nodes = Vec::new();
        let edges = k.panels(t, maturity, &[]);
        if maturity > t {
            for w in edges.windows(2) {
                for j in 0..r.len() {
                    let t1 = r.node_on(w[0], w[1], j);
                    let wt = r.weight_on(w[0], w[1], j);
                    let g = m.gamma(t1);
                    let srr = st.sigma_rr(t1);
                    let psi = exp(0.5 * g * g * srr);
                    let c = m.y_star(t1) - st.b_plus(t1, maturity) * srr - st.sigma_rz(t1);
                    nodes.push([wt * psi / g, g, st.phi(t1), c]);
                }
            }
        }
        Ok(BondExpansion {
            t,
            maturity,
            discount: m.discount(t, maturity),
            b_star: st.b_star(maturity),
            rz0: s0.sigma_rz(t),
            rr0: s0.sigma_rr(t),
            half_zz: 0.5 * st.sigma_zz(maturity),
            r1_int: m.drift().r1_integral(maturity) - m.drift().r1_integral(t),
            r2_int: m.r2_integral(t, maturity),
            nodes,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    pub fn b_star(&self) -> f64 {
        self.b_star
    }

    /// `μ*(y,t,T)`.
    pub fn mu_star(&self, y: f64) -> f64 {
        self.b_star * (y + self.rz0) + 0.5 * self.b_star * self.b_star * self.rr0
    }

    /// `F₁(y,t,T)`.
    pub fn f1(&self, y: f64) -> f64 {
        let mut s = 0.0;
        for n in &self.nodes {
            s += n[0] * sinh(n[1] * (n[2] * y + n[3]));
        }
        s + self.r1_int - self.mu_star(y) + self.half_zz
    }

    /// `F₂(y,t,T)` with the inner shifts dropped: `½F₁² − ∫R₂*`.
    pub fn f2(&self, y: f64) -> f64 {
        let f1 = self.f1(y);
        0.5 * f1 * f1 - self.r2_int
    }

    /// `F^T(y,t)`; `second_order = false` drops `F₂`.
    pub fn price(&self, y: f64, second_order: bool) -> f64 {
        let f1 = self.f1(y);
        let corr = if second_order { 1.0 - f1 + 0.5 * f1 * f1 - self.r2_int } else { 1.0 - f1 };
        self.discount * exp(-self.mu_star(y)) * corr
    }
}

/// `F₁(y,t,T)`.
pub fn f1_functional(m: &Model, y: f64, t: f64, maturity: f64) -> Result<f64> {
    Ok(BondExpansion::new(m, t, maturity)?.f1(y))
}

/// `F₂(y,t,T)` with the inner shifts dropped.
pub fn f2_functional(m: &Model, y: f64, t: f64, maturity: f64) -> Result<f64> {
    Ok(BondExpansion::new(m, t, maturity)?.f2(y))
}
