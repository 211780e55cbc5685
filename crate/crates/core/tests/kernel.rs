mod common;

use common::*;
use proptest::prelude::*;
use sinhrate_core::kernel::{b_plus, kernel_stats, r1_plus_minus, y_star_arg};
use sinhrate_core::numerics::integrate;
use sinhrate_core::{DriftOrder, DiscountCurve, Model, ModelParams, PiecewiseCurve, QuadratureSpec};

fn tight() -> QuadratureSpec {
    QuadratureSpec { target_rel_tol: 1e-13, max_refinements: 12, ..QuadratureSpec::default() }
}

fn quad(f: impl FnMut(f64) -> f64, a: f64, b: f64, splits: &[f64]) -> f64 {
    integrate(f, a, b, splits, &tight()).unwrap()
}

/// Convolution integrals rebuilt by nested adaptive quadrature of the closed
/// forms `φ`, `Σ_rr`, `ψ`.
struct Brute<'a> {
    m: &'a Model,
    splits: Vec<f64>,
}

impl Brute<'_> {
    fn b_plus(&self, t: f64, t1: f64, v: f64) -> f64 {
        let k = self.m.kernel();
        quad(|u| k.psi(t, u) * k.phi(t1, u), t1, v, &self.splits)
    }
    fn sigma_rz(&self, t: f64, v: f64) -> f64 {
        let k = self.m.kernel();
        quad(|u| k.psi(t, u) * k.sigma_rr(t, u) * k.phi(u, v), t, v, &self.splits)
    }
    fn sigma_zz(&self, t: f64, v: f64) -> f64 {
        let k = self.m.kernel();
        quad(
            |u| 2.0 * k.psi(t, u) * k.phi(t, u) * quad(|s| k.psi(t, s) * k.sigma_rr(t, s) / k.phi(t, s), t, u, &self.splits),
            t,
            v,
            &self.splits,
        )
    }
}

fn piecewise_model(sig: [f64; 2], alpha: [f64; 2], gamma: [f64; 2], ys: [f64; 2]) -> Model {
    let c = |v: [f64; 2]| PiecewiseCurve::new(vec![0.0, 1.3], v.to_vec()).unwrap();
    let p = ModelParams::new(c(sig), c(alpha), c(gamma), c(ys), DiscountCurve::flat(0.02)).unwrap();
    Model::with_options(p, 4.0, QuadratureSpec::default(), DriftOrder::First).unwrap()
}

#[test]
fn empty_integrals() {
    let m = smile_model(DriftOrder::First);
    let s = kernel_stats(&m, 2.0, 2.0).unwrap();
    assert_eq!((s.phi_r, s.sigma_rr, s.psi_r, s.sigma_rz, s.sigma_zz, s.b_star), (1.0, 0.0, 1.0, 0.0, 0.0, 0.0));
    assert_eq!(b_plus(&m, 0.5, 2.0, 2.0).unwrap(), 0.0);
    let bs = kernel_stats(&m, 0.5, 2.0).unwrap().b_star;
    assert!(rel(b_plus(&m, 0.5, 0.5, 2.0).unwrap(), bs) < 1e-14);
}

#[test]
fn hull_white_closed_forms() {
    let m = hw_model(0.01);
    let s = kernel_stats(&m, 0.0, 1.0).unwrap();
    assert!(rel(s.sigma_rr, 1e-4 * (1.0 - (-0.3f64).exp()) / 0.3) < 1e-12);
    assert!((s.sigma_rr - 8.63939e-5).abs() < 1e-10);
    let hw_b = (1.0 - (-0.15f64).exp()) / 0.15;
    assert!((hw_b - 0.928612).abs() < 2e-6);
    assert!(rel(s.b_star, hw_b) < 1e-9);
    assert!(rel(b_plus(&m, 0.0, 1.0, 2.0).unwrap(), hw_b) < 1e-9);
    // Σ_rz and Σ_zz of Hull-White
    let a: f64 = 0.15;
    let v = 1e-4;
    let t: f64 = 3.0;
    let s = kernel_stats(&m, 0.0, t).unwrap();
    let srz = v / (2.0 * a * a) * (1.0 - (-a * t).exp()).powi(2);
    let b = (1.0 - (-a * t).exp()) / a;
    let szz = v / (a * a) * (t - b - a * b * b / 2.0);
    assert!(rel(s.sigma_rz, srz) < 1e-7, "{} {}", s.sigma_rz, srz);
    assert!(rel(s.sigma_zz, szz) < 1e-7, "{} {}", s.sigma_zz, szz);
}

#[test]
fn tables_match_nested_quadrature() {
    let m = piecewise_model([0.01, 0.014], [0.15, 0.05], [50.0, 120.0], [0.004, -0.002]);
    let b = Brute { m: &m, splits: vec![1.3] };
    for (t, v) in [(0.0, 1.0), (0.0, 3.7), (0.4, 2.2), (1.3, 4.0)] {
        let s = kernel_stats(&m, t, v).unwrap();
        assert!(rel(s.sigma_rz, b.sigma_rz(t, v)) < 1e-10, "Σ_rz({t},{v})");
        assert!(rel(s.sigma_zz, b.sigma_zz(t, v)) < 1e-10, "Σ_zz({t},{v})");
        assert!(rel(s.b_star, b.b_plus(t, t, v)) < 1e-10, "B*({t},{v})");
        let t1 = 0.5 * (t + v);
        assert!(rel(b_plus(&m, t, t1, v).unwrap(), b.b_plus(t, t1, v)) < 1e-10);
    }
}

#[test]
fn y_star_argument_matches_quadrature() {
    let m = smile_model(DriftOrder::First);
    let b = Brute { m: &m, splits: vec![] };
    let (t1, t) = (0.5, 1.0);
    let k = m.kernel();
    let expect = 50.0 * (0.004 - b.b_plus(0.0, t1, t) * k.sigma_rr(0.0, t1) - b.sigma_rz(0.0, t1));
    assert!(rel(y_star_arg(&m, t1, t).unwrap(), expect) < 1e-11);
    assert!(rel(y_star_arg(&m, 0.0, t).unwrap(), 0.2) < 1e-14);
}

#[test]
fn r1_coefficients() {
    let p = ModelParams::constant(0.0, 0.15, 50.0, 0.0, 0.02).unwrap();
    let m = Model::new(p, 5.0).unwrap();
    let (rp, rm) = r1_plus_minus(&m, 0.0, 0.0, 1.0, 2.0).unwrap();
    assert_eq!((rp, rm), (0.01, 0.01));

    let m = smile_model(DriftOrder::First);
    let (t, t1, v) = (0.2, 0.9, 2.5);
    let (rp, rm) = r1_plus_minus(&m, 0.003, t, t1, v).unwrap();
    let arg = y_star_like(&m, 0.003, t, t1, v);
    let g = 50.0;
    let pref = (0.5 * g * g * m.kernel().sigma_rr(t, t1)).exp() / g;
    assert!(rel(rp - rm, pref * arg.sinh()) < 1e-13);
    assert!(rel(rp + rm, pref * arg.cosh()) < 1e-13);
}

fn y_star_like(m: &Model, y: f64, t: f64, t1: f64, v: f64) -> f64 {
    let s = m.slice(t, v).unwrap();
    m.gamma(t1) * (s.phi(t1) * y + m.y_star(t1) - s.b_plus(t1, v) * s.sigma_rr(t1) - s.sigma_rz(t1))
}

#[test]
fn r1_coefficients_swap_under_reflection() {
    let c = |x| PiecewiseCurve::constant(x);
    let model = |ys: f64| {
        let p = ModelParams::new(c(0.0), c(0.15), c(50.0), c(ys), DiscountCurve::flat(0.02)).unwrap();
        Model::new(p, 3.0).unwrap()
    };
    let (a, b) = (model(0.004), model(-0.004));
    let (p1, m1) = r1_plus_minus(&a, 0.003, 0.0, 1.0, 2.0).unwrap();
    let (p2, m2) = r1_plus_minus(&b, -0.003, 0.0, 1.0, 2.0).unwrap();
    assert!(rel(p1, m2) < 1e-14 && rel(m1, p2) < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn b_plus_identity(
        sig in 0.003f64..0.02, sig2 in 0.003f64..0.02,
        a in 0.01f64..0.5, a2 in 0.01f64..0.5,
        g in 5.0f64..200.0, g2 in 5.0f64..200.0,
        t in 0.0f64..1.0, len in 0.5f64..3.0,
    ) {
        let m = piecewise_model([sig, sig2], [a, a2], [g, g2], [0.0, 0.0]);
        let v = t + len;
        let s = m.slice(t, v).unwrap();
        let lhs = quad(|u| s.b_plus(u, v) * s.psi(u) * s.sigma_rr(u), t, v, &[1.3]);
        prop_assert!(rel(lhs, 0.5 * s.sigma_zz(v)) < 1e-9);
    }
}
