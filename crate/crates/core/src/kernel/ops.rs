use crate::error::{domain, Result};
use crate::fmath::exp;
use crate::model::Model;

/// Kernel quantities for one `(t, v)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelStats {
    pub t: f64,
    pub v: f64,
    pub phi_r: f64,
    pub sigma_rr: f64,
    pub psi_r: f64,
    pub sigma_rz: f64,
    pub sigma_zz: f64,
    pub b_star: f64,
    /// `Σ_rz(0,t)` and `Σ_rr(0,t)`, needed by `μ*`.
    pub sigma_rz_origin: f64,
    pub sigma_rr_origin: f64,
}

impl KernelStats {
    /// `μ*(y,t,v) = B*(t,v)(y + Σ_rz(0,t)) + ½B*(t,v)²Σ_rr(0,t)`.
    pub fn mu_star(&self, y: f64) -> f64 {
        self.b_star * (y + self.sigma_rz_origin) + 0.5 * self.b_star * self.b_star * self.sigma_rr_origin
    }
}

fn check_order(m: &Model, a: f64, b: f64) -> Result<()> {
    m.check_time(a)?;
    m.check_time(b)?;
    if !(a <= b) {
        return Err(domain(alloc::format!("expected {a} <= {b}")));
    }
    Ok(())
}

pub fn kernel_stats(m: &Model, t: f64, v: f64) -> Result<KernelStats> {
    check_order(m, t, v)?;
    let s = m.slice(t, v)?;
    let p = s.stats(v);
    let o = m.origin_slice();
    Ok(KernelStats {
        t,
        v,
        phi_r: p.phi,
        sigma_rr: p.sigma_rr,
        psi_r: p.psi,
        sigma_rz: p.sigma_rz,
        sigma_zz: p.sigma_zz,
        b_star: p.b_star,
        sigma_rz_origin: o.sigma_rz(t),
        sigma_rr_origin: o.sigma_rr(t),
    })
}

/// `B⁺(t,t1,v) = ∫_{t1}^{v} ψ(t,u)φ(t1,u) du`.
pub fn b_plus(m: &Model, t: f64, t1: f64, v: f64) -> Result<f64> {
    check_order(m, t, t1)?;
    check_order(m, t1, v)?;
    Ok(m.slice(t, v)?.b_plus(t1, v))
}

/// `Y*(t1,t) = γ(t1)(y*(t1) − B⁺(0,t1,t)Σ_rr(0,t1) − Σ_rz(0,t1))`.
pub fn y_star_arg(m: &Model, t1: f64, t: f64) -> Result<f64> {
    check_order(m, t1, t)?;
    Ok(crate::drift::y_star_arg_with(m, t1, t))
}

/// `(R₁⁺, R₁⁻)(y,t,t1,v)`.
pub fn r1_plus_minus(m: &Model, y: f64, t: f64, t1: f64, v: f64) -> Result<(f64, f64)> {
    check_order(m, t, t1)?;
    check_order(m, t1, v)?;
    let g = m.gamma(t1);
    if !(g > 0.0) {
        return Err(domain("R1 coefficients need gamma(t1) > 0"));
    }
    let s = m.slice(t, v)?;
    let srr = s.sigma_rr(t1);
    let arg = g * (s.phi(t1) * y + m.y_star(t1) - s.b_plus(t1, v) * srr - s.sigma_rz(t1));
    let pref = exp(0.5 * g * g * srr) / (2.0 * g);
    Ok((pref * exp(arg), pref * exp(-arg)))
}

/// Displacements applied by the shift operators, before scaling by `γ(t₁)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftDisplacement {
    pub delta_y: f64,
    pub delta_z: f64,
    pub gamma_t1: f64,
}

/// Kernel-level shifts: `Δy = Σ_rr(t,t₁)/φ(t,t₁)`,
/// `Δz = Σ_rz(t,t₁) − B*(t,t₁)Σ_rr(t,t₁)/φ(t,t₁)`.
pub fn shift_standard(m: &Model, t: f64, t1: f64) -> Result<ShiftDisplacement> {
    check_order(m, t, t1)?;
    let s = m.slice(t, t1)?;
    let dy = s.sigma_rr(t1) / s.phi(t1);
    Ok(ShiftDisplacement {
        delta_y: dy,
        delta_z: s.sigma_rz(t1) - s.b_star(t1) * dy,
        gamma_t1: m.gamma(t1),
    })
}

/// Caplet-mode shifts for the period `[T1, T2]`, origin 0:
/// `Δy = φ(T₁∧t₁, T₁∨t₁)Σ_rr(0,T₁∧t₁)/φ(0,T₁)` and
/// `Δz = (Σ_rz(T₁,t₁) + B⁺(T₁,t₁,T₂)Σ_rr(T₁,t₁))·𝟙{t₁ > T₁}`.
pub fn shift_caplet(m: &Model, t1_start: f64, t2_end: f64, t1: f64) -> Result<ShiftDisplacement> {
    check_order(m, t1_start, t2_end)?;
    m.check_time(t1)?;
    let k = m.kernel();
    let lo = t1.min(t1_start);
    let hi = t1.max(t1_start);
    let delta_y = k.phi(lo, hi) * k.sigma_rr(0.0, lo) / k.phi(0.0, t1_start);
    let delta_z = if t1 > t1_start {
        let s = m.slice(t1_start, t2_end.max(t1))?;
        s.sigma_rz(t1) + s.b_plus(t1, t2_end.max(t1)) * s.sigma_rr(t1)
    } else {
        0.0
    };
    Ok(ShiftDisplacement { delta_y, delta_z, gamma_t1: m.gamma(t1) })
}
