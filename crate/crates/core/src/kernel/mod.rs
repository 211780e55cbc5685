//! Convolution integrals of the Gaussian factor and the first-order kernel.
//!
//! For an origin `s` the quantities
//!
//! * `φ(s,v) = exp(-∫ₛᵛ α)`
//! * `Σ_rr(s,v) = ∫ₛᵛ φ(u,v)² σ(u)² du`
//! * `ψ(s,v) = exp(½ γ(v)² Σ_rr(s,v))`
//! * `Σ_rz(s,v) = ∫ₛᵛ ψ(s,u) φ(u,v) Σ_rr(s,u) du`
//! * `Σ_zz(s,v) = 2 ∫ₛᵛ ψ(s,u) Σ_rz(s,u) du`
//! * `B*(s,v) = ∫ₛᵛ ψ(s,u) φ(s,u) du`
//!
//! are tabulated once per origin in a [`Slice`]. `Σ_rr` and `φ` are closed
//! form on the piecewise-constant pieces; the rest are running integrals of
//! panel interpolants, so every query after construction is cheap.

pub(crate) mod expansion;
mod ops;

pub use expansion::{kernel_g0, kernel_g1_apply, G1Options};
pub use ops::{
    b_plus, kernel_stats, r1_plus_minus, shift_caplet, shift_standard, y_star_arg, KernelStats,
    ShiftDisplacement,
};

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::fmath::{exp, one_minus_exp_over};
use crate::numerics::{GaussLegendre, PanelFunction, QuadratureSpec};
use crate::termstructure::PiecewiseCurve;

/// Closed-form pieces of the factor dynamics plus the panel grid used by
/// every tabulation.
#[derive(Debug, Clone)]
pub struct Kernel {
    gamma: PiecewiseCurve,
    piece_t: Vec<f64>,
    piece_alpha: Vec<f64>,
    piece_var: Vec<f64>,
    a_cum: Vec<f64>,
    grid: Vec<f64>,
    rule: GaussLegendre,
}

impl Kernel {
    /// `extra_breaks` are additional panel edges (e.g. the skew curve's
    /// breakpoints). `gamma` may be zero here: that is the Hull-White kernel.
    pub fn new(
        alpha: &PiecewiseCurve,
        sigma: &PiecewiseCurve,
        gamma: &PiecewiseCurve,
        extra_breaks: &[f64],
        horizon: f64,
        spec: &QuadratureSpec,
    ) -> Result<Self> {
        spec.validate()?;
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(domain("kernel horizon must be positive and finite"));
        }
        let mut piece_t: Vec<f64> =
            alpha.breakpoints().iter().chain(sigma.breakpoints()).copied().collect();
        piece_t.sort_by(|a, b| a.total_cmp(b));
        piece_t.dedup();
        let piece_alpha: Vec<f64> = piece_t.iter().map(|&t| alpha.at(t)).collect();
        let piece_var: Vec<f64> = piece_t.iter().map(|&t| sigma.at(t) * sigma.at(t)).collect();
        let mut a_cum = Vec::with_capacity(piece_t.len());
        a_cum.push(0.0);
        for k in 1..piece_t.len() {
            let prev = a_cum[k - 1] + piece_alpha[k - 1] * (piece_t[k] - piece_t[k - 1]);
            a_cum.push(prev);
        }

        let mut cuts: Vec<f64> = piece_t
            .iter()
            .chain(gamma.breakpoints())
            .chain(extra_breaks)
            .copied()
            .filter(|&t| t >= 0.0 && t < horizon)
            .collect();
        cuts.push(0.0);
        cuts.push(horizon);
        cuts.sort_by(|a, b| a.total_cmp(b));
        cuts.dedup();
        let mut grid = Vec::new();
        for w in cuts.windows(2) {
            let n = libm::ceil((w[1] - w[0]) / spec.max_panel_width).max(1.0) as usize;
            for i in 0..n {
                grid.push(w[0] + (w[1] - w[0]) * i as f64 / n as f64);
            }
        }
        grid.push(horizon);

        Ok(Kernel {
            gamma: gamma.clone(),
            piece_t,
            piece_alpha,
            piece_var,
            a_cum,
            grid,
            rule: GaussLegendre::new(spec.nodes_per_piece),
        })
    }

    pub fn horizon(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// Panel edges from 0 to the horizon.
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn rule(&self) -> &GaussLegendre {
        &self.rule
    }

    #[inline]
    fn piece(&self, t: f64) -> usize {
        self.piece_t.partition_point(|&b| b <= t).saturating_sub(1)
    }

    /// `∫₀ᵗ α`.
    #[inline]
    pub fn cum_alpha(&self, t: f64) -> f64 {
        let k = self.piece(t);
        self.a_cum[k] + self.piece_alpha[k] * (t - self.piece_t[k])
    }

    #[inline]
    pub fn phi(&self, t: f64, v: f64) -> f64 {
        exp(self.cum_alpha(t) - self.cum_alpha(v))
    }

    #[inline]
    pub fn gamma_at(&self, t: f64) -> f64 {
        self.gamma.at(t)
    }

    /// `Σ_rr(t,v)`, summed exactly over the constant pieces.
    pub fn sigma_rr(&self, t: f64, v: f64) -> f64 {
        if !(v > t) {
            return 0.0;
        }
        let av = self.cum_alpha(v);
        let mut k = self.piece(t);
        let mut p = t;
        let mut s = 0.0;
        loop {
            let next = if k + 1 < self.piece_t.len() { self.piece_t[k + 1] } else { f64::INFINITY };
            let q = next.min(v);
            let len = q - p;
            let aq = if q == next { self.a_cum[k + 1] } else { av };
            let al = self.piece_alpha[k];
            s += self.piece_var[k] * exp(-2.0 * (av - aq)) * len * one_minus_exp_over(2.0 * al * len);
            if q >= v {
                break;
            }
            k += 1;
            p = q;
        }
        s
    }

    /// `ψ(t,v) = exp(½γ(v)²Σ_rr(t,v))`.
    #[inline]
    pub fn psi(&self, t: f64, v: f64) -> f64 {
        let g = self.gamma_at(v);
        exp(0.5 * g * g * self.sigma_rr(t, v))
    }

    /// Grid edges strictly inside (a, b), with a and b themselves at the ends.
    pub fn panels(&self, a: f64, b: f64, extra: &[f64]) -> Vec<f64> {
        let mut e: Vec<f64> = Vec::with_capacity(self.grid.len() + extra.len() + 2);
        e.push(a);
        e.extend(self.grid.iter().copied().filter(|&g| g > a && g < b));
        e.extend(extra.iter().copied().filter(|&g| g > a && g < b));
        e.push(b);
        e.sort_by(|x, y| x.total_cmp(y));
        e.dedup();
        e
    }

    /// Gauss-Legendre sum of `f(x)` over [a, b] on the kernel panels.
    pub fn quad<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, extra: &[f64], mut f: F) -> f64 {
        if !(b > a) {
            return 0.0;
        }
        let r = &self.rule;
        let mut s = 0.0;
        for w in self.panels(a, b, extra).windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mut p = 0.0;
            for j in 0..r.len() {
                p += r.weights()[j] * f(r.node_on(lo, hi, j));
            }
            s += 0.5 * (hi - lo) * p;
        }
        s
    }
}

/// Tabulated convolution integrals for one origin.
#[derive(Debug, Clone)]
pub struct Slice {
    kernel: Arc<Kernel>,
    origin: f64,
    end: f64,
    b: PanelFunction,
    k: PanelFunction,
    z: PanelFunction,
}

/// Values of the convolution integrals at one point `v` for a slice origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointStats {
    pub v: f64,
    pub phi: f64,
    pub sigma_rr: f64,
    pub psi: f64,
    pub sigma_rz: f64,
    pub sigma_zz: f64,
    pub b_star: f64,
}

impl Slice {
    pub fn new(kernel: Arc<Kernel>, origin: f64, end: f64) -> Result<Self> {
        if !(origin >= 0.0) || !(end >= origin) {
            return Err(domain("slice needs 0 <= origin <= end"));
        }
        if end > kernel.horizon() * (1.0 + 1e-12) {
            return Err(domain(alloc::format!(
                "time {end} beyond the model horizon {}",
                kernel.horizon()
            )));
        }
        let end = end.min(kernel.horizon()).max(origin);
        let edges = if end > origin {
            kernel.panels(origin, end, &[])
        } else {
            alloc::vec![origin, origin]
        };
        let r = kernel.rule();
        let n = r.len();
        let np = edges.len() - 1;
        let mut fb = Vec::with_capacity(np * n);
        let mut fk = Vec::with_capacity(np * n);
        let mut fz = Vec::with_capacity(np * n);
        let mut kvals = alloc::vec![0.0; n];
        let mut k_acc = 0.0;
        for w in edges.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let start = fk.len();
            let mut pp = Vec::with_capacity(n);
            for j in 0..n {
                let x = r.node_on(lo, hi, j);
                let srr = kernel.sigma_rr(origin, x);
                let phi = kernel.phi(origin, x);
                let g = kernel.gamma_at(x);
                let psi = exp(0.5 * g * g * srr);
                fb.push(psi * phi);
                fk.push(psi * srr / phi);
                pp.push(psi * phi);
            }
            r.running_integrals(lo, hi, &fk[start..start + n], &mut kvals);
            for j in 0..n {
                fz.push(2.0 * pp[j] * (k_acc + kvals[j]));
            }
            let h = 0.5 * (hi - lo);
            k_acc += h * (0..n).map(|j| r.weights()[j] * fk[start + j]).sum::<f64>();
        }
        Ok(Slice {
            origin,
            end,
            b: PanelFunction::new(edges.clone(), fb, r),
            k: PanelFunction::new(edges.clone(), fk, r),
            z: PanelFunction::new(edges, fz, r),
            kernel,
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    #[inline]
    fn clamp(&self, v: f64) -> f64 {
        debug_assert!(v >= self.origin - 1e-12 && v <= self.end + 1e-9, "v={v} outside slice");
        v.max(self.origin).min(self.end)
    }

    #[inline]
    pub fn phi(&self, v: f64) -> f64 {
        self.kernel.phi(self.origin, v)
    }

    #[inline]
    pub fn sigma_rr(&self, v: f64) -> f64 {
        self.kernel.sigma_rr(self.origin, v)
    }

    #[inline]
    pub fn psi(&self, v: f64) -> f64 {
        self.kernel.psi(self.origin, v)
    }

    pub fn b_star(&self, v: f64) -> f64 {
        self.b.integral_to(self.kernel.rule(), self.clamp(v))
    }

    /// `∫_{t1}^{v} ψ(s,u)φ(s,u) du`.
    pub fn b_star_between(&self, t1: f64, v: f64) -> f64 {
        self.b.integral_between(self.kernel.rule(), self.clamp(t1), self.clamp(v))
    }

    /// `B⁺(s,t1,v) = ∫_{t1}^{v} ψ(s,u)φ(t1,u) du`.
    pub fn b_plus(&self, t1: f64, v: f64) -> f64 {
        self.b_star_between(t1, v) / self.phi(t1)
    }

    pub fn sigma_rz(&self, v: f64) -> f64 {
        let v = self.clamp(v);
        self.phi(v) * self.k.integral_to(self.kernel.rule(), v)
    }

    pub fn sigma_zz(&self, v: f64) -> f64 {
        self.z.integral_to(self.kernel.rule(), self.clamp(v))
    }

    pub fn stats(&self, v: f64) -> PointStats {
        let srr = self.sigma_rr(v);
        let g = self.kernel.gamma_at(v);
        PointStats {
            v,
            phi: self.phi(v),
            sigma_rr: srr,
            psi: exp(0.5 * g * g * srr),
            sigma_rz: self.sigma_rz(v),
            sigma_zz: self.sigma_zz(v),
            b_star: self.b_star(v),
        }
    }
}
