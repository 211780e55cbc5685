mod common;

use common::*;
use proptest::prelude::*;
use sinhrate_core::implied::*;
use sinhrate_core::numerics::{integrate, norm_pdf};
use sinhrate_core::pricing::*;
use sinhrate_core::{DriftOrder, Error, QuadratureSpec};

#[test]
fn hull_white_caplet_formula_matches_gaussian_integral() {
    let m = hw_model(0.01);
    let spec = InstrumentSpec::rfr_caplet(1.0, 1.5, 0.02).unwrap();
    let (df1, kinv, d12) = (m.df(1.0), 1.01, m.discount(1.0, 1.5));
    let v: f64 = 1e-4;
    let sd = v.sqrt();
    let payoff = |x: f64| (1.0 - kinv * d12 * (x - 0.5 * v).exp()).max(0.0) * norm_pdf(x / sd) / sd;
    let kink = 0.5 * v - (kinv * d12).ln();
    let spec_q = QuadratureSpec { target_rel_tol: 1e-13, max_refinements: 12, ..QuadratureSpec::default() };
    let oracle = df1 * integrate(payoff, -12.0 * sd, 12.0 * sd, &[kink], &spec_q).unwrap();
    let inputs = HwInputs::Caplet { df1, df2: m.df(1.5), kappa_inv: kinv, delta_z_star: spec.delta_z_star(&m) };
    assert!(rel(hw_baseline_price(&inputs, v).unwrap(), oracle) < 1e-11);
}

#[test]
fn hull_white_price_limits() {
    let m = hw_model(0.01);
    let spec = InstrumentSpec::rfr_caplet(1.0, 1.5, 0.01).unwrap();
    let inputs = HwInputs::Caplet { df1: m.df(1.0), df2: m.df(1.5), kappa_inv: 1.005, delta_z_star: spec.delta_z_star(&m) };
    assert!(spec.delta_z_star(&m) < 0.0);
    let fwd = m.df(1.0) - 1.005 * m.df(1.5);
    assert!((hw_baseline_price(&inputs, 1e-30).unwrap() - fwd).abs() < 1e-15);
    assert!(hw_baseline_price(&inputs, 0.0).is_err());
}

#[test]
fn implied_vol_round_trip() {
    let m = hw_model(0.01);
    let hw = UnitHullWhite::new(&m).unwrap();
    for spec in [
        InstrumentSpec::rfr_caplet(1.0, 1.5, 0.02).unwrap(),
        InstrumentSpec::libor_caplet(5.0, 5.5, 0.03).unwrap(),
        InstrumentSpec::swaption_simple(vec![1.0, 1.25, 1.5], 0.02).unwrap(),
        InstrumentSpec::swaption_simple(vec![5.0, 6.0, 7.0], 0.015).unwrap(),
    ] {
        let target = hw.price(&m, &spec, 0.01).unwrap();
        let direct = price(&m, &spec).unwrap().pv;
        assert!(rel(direct, target) < 1e-9, "{:?}", spec.kind);
        let s = implied_hw_vol_with(&hw, &m, &spec, target).unwrap();
        assert!((s - 0.01).abs() < 1e-10, "{:?}: {s}", spec.kind);
    }
}

#[test]
fn implied_vol_at_intrinsic_is_reported_at_the_boundary() {
    let m = hw_model(0.01);
    let spec = InstrumentSpec::rfr_caplet(1.0, 1.5, 0.0).unwrap();
    let intrinsic = m.df(1.0) - m.df(1.5);
    match implied_hw_vol(&m, &spec, intrinsic) {
        Err(Error::Bracket { lo, f_lo, .. }) => assert!(lo == SIGMA_MIN && f_lo > 0.0),
        Ok(s) => assert_eq!(s, SIGMA_MIN),
        other => panic!("expected the lower boundary, got {other:?}"),
    }
}

#[test]
fn adjustment_vanishes_in_hull_white_limit() {
    let m = hw_model(0.01);
    for spec in [
        InstrumentSpec::rfr_caplet(2.0, 2.5, 0.02).unwrap(),
        InstrumentSpec::libor_caplet(2.0, 2.5, 0.02).unwrap(),
        InstrumentSpec::swaption_simple(vec![2.0, 2.5, 3.0], 0.02).unwrap(),
    ] {
        let ev = effective_variance(&m, &spec).unwrap();
        assert!(ev.adjustment.abs() < 1e-9 * ev.baseline, "{:?}", spec.kind);
    }
}

#[test]
fn term_variance_is_below_compounded_variance() {
    let m = smile_model(DriftOrder::First);
    for t1 in [0.5, 1.0, 5.0] {
        let r = effective_variance_rfr(&m, &InstrumentSpec::rfr_caplet(t1, t1 + 0.5, 0.02).unwrap()).unwrap();
        let l = effective_variance_libor(&m, &InstrumentSpec::libor_caplet(t1, t1 + 0.5, 0.02).unwrap()).unwrap();
        assert!(l.baseline < r.baseline);
    }
}

#[test]
fn adjustment_at_forward_moneyness() {
    let m = smile_model(DriftOrder::First);
    let ev = effective_variance_rfr(&m, &InstrumentSpec::rfr_caplet(1.0, 1.5, 0.02).unwrap()).unwrap();
    let c = &ev.coefficients;
    assert!(rel(ev.adjustment_at(0.0), 2.0 * ev.baseline.sqrt() * (c[0] - c[2])) < 1e-14);
    assert!(rel(ev.adjustment_at(ev.moneyness), ev.adjustment) < 1e-13);

    let ev = effective_variance_swaption(&m, &InstrumentSpec::swaption_simple(vec![1.0, 1.25, 1.5], 0.02).unwrap()).unwrap();
    let c = &ev.coefficients;
    let atm = 2.0 * ev.baseline.sqrt() * (c[2] - c[4]) / c[0];
    assert!(rel(ev.adjustment_at(0.0), atm) < 1e-14);
}

#[test]
fn caplet_effective_variance_is_quadratic_in_moneyness() {
    let m = smile_model(DriftOrder::First);
    for compounded in [true, false] {
        let pts: Vec<(f64, f64)> = (0..9)
            .map(|i| {
                let k = 0.005 * i as f64;
                let ev = if compounded {
                    effective_variance_rfr(&m, &InstrumentSpec::rfr_caplet(3.0, 3.5, k).unwrap())
                } else {
                    effective_variance_libor(&m, &InstrumentSpec::libor_caplet(3.0, 3.5, k).unwrap())
                }
                .unwrap();
                (ev.moneyness, ev.total())
            })
            .collect();
        // interpolate through three points, check the rest
        let (a, b, c) = (pts[0], pts[4], pts[8]);
        let lag = |d: f64| {
            a.1 * (d - b.0) * (d - c.0) / ((a.0 - b.0) * (a.0 - c.0))
                + b.1 * (d - a.0) * (d - c.0) / ((b.0 - a.0) * (b.0 - c.0))
                + c.1 * (d - a.0) * (d - b.0) / ((c.0 - a.0) * (c.0 - b.0))
        };
        for p in &pts {
            assert!((lag(p.0) - p.1).abs() < 1e-14 * p.1, "{p:?}");
        }
    }
}

#[test]
fn smile_is_convex_in_strike() {
    let m = smile_model(DriftOrder::First);
    let adj: Vec<f64> = (0..9)
        .map(|i| {
            let spec = InstrumentSpec::rfr_caplet(2.0, 2.5, 0.005 * i as f64).unwrap();
            effective_variance_rfr(&m, &spec).unwrap()
        })
        .map(|ev| {
            assert!(ev.coefficients[2] > 0.0);
            ev.adjustment
        })
        .collect();
    assert!(adj.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] > 0.0), "{adj:?}");
}

#[test]
fn single_period_swaption_matches_term_caplet() {
    for m in [hw_model(0.01), smile_model(DriftOrder::First)] {
        let sw = InstrumentSpec::swaption_simple(vec![2.0, 2.5], 0.02).unwrap();
        let cap = InstrumentSpec::libor_caplet(2.0, 2.5, 0.02).unwrap();
        let (a, b) = (price(&m, &sw).unwrap().pv, price(&m, &cap).unwrap().pv);
        let tol = if m.gamma(0.0) < 1.0 { 1e-10 } else { 1e-2 };
        assert!(rel(a, b) < tol, "{a} vs {b}");
        let (ea, eb) = (effective_variance(&m, &sw).unwrap(), effective_variance(&m, &cap).unwrap());
        assert!(rel(ea.price().unwrap(), eb.price().unwrap()) < tol.max(1e-9));
    }
}

#[test]
fn variance_shortcut_matches_price_inversion() {
    let m = smile_model(DriftOrder::First);
    let hw = UnitHullWhite::new(&m).unwrap();
    for k in [0.01, 0.02, 0.03] {
        let spec = InstrumentSpec::rfr_caplet(1.0, 1.5, k).unwrap();
        let ev = effective_variance_rfr(&m, &spec).unwrap();
        let a = implied_vol_from_variance(&hw, &spec, ev.total()).unwrap();
        let b = implied_hw_vol_with(&hw, &m, &spec, ev.price().unwrap()).unwrap();
        assert!((a - b).abs() < 1e-11, "K={k}: {a} vs {b}");
        // sanity band around the model σ
        assert!(a > 0.01 * 0.8 && a < 0.01 * 1.3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn caplet_implied_vol_round_trip(sigma in 0.002f64..0.03, k in 0.0f64..0.05, t1 in 0.25f64..8.0) {
        let m = hw_model(0.01);
        let hw = UnitHullWhite::new(&m).unwrap();
        let spec = InstrumentSpec::rfr_caplet(t1, t1 + 0.5, k).unwrap();
        let target = hw.price(&m, &spec, sigma).unwrap();
        let s = implied_hw_vol_with(&hw, &m, &spec, target).unwrap();
        prop_assert!((s - sigma).abs() < 1e-9 * sigma.max(0.01) || rel(hw.price(&m, &spec, s).unwrap(), target) < 1e-12);
    }
}
