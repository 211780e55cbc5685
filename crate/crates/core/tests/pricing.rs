mod common;

use common::*;
use proptest::prelude::*;
use sinhrate_core::drift::f1_functional;
use sinhrate_core::implied::{hw_baseline_price, HwInputs};
use sinhrate_core::kernel::{kernel_g1_apply, G1Options};
use sinhrate_core::numerics::norm_pdf;
use sinhrate_core::pricing::*;
use sinhrate_core::{DriftOrder, Error, Model, ModelParams, QuadratureSpec};

fn caplet_inputs(m: &Model, spec: &InstrumentSpec) -> HwInputs {
    HwInputs::Caplet {
        df1: m.df(spec.times[0]),
        df2: m.df(spec.times[1]),
        kappa_inv: 1.0 + spec.strike * spec.accruals[0],
        delta_z_star: spec.delta_z_star(m),
    }
}

#[test]
fn zero_volatility_gives_intrinsic_values() {
    let p = ModelParams::constant(0.0, 0.15, 50.0, 0.004, 0.02).unwrap();
    let m = Model::with_options(p, 6.0, QuadratureSpec::default(), DriftOrder::First).unwrap();
    for k in [0.0, 0.01, 0.02, 0.03] {
        for spec in [InstrumentSpec::rfr_caplet(1.0, 1.5, k).unwrap(), InstrumentSpec::libor_caplet(1.0, 1.5, k).unwrap()] {
            let intrinsic = (m.df(1.0) - (1.0 + 0.5 * k) * m.df(1.5)).max(0.0);
            let r = price(&m, &spec).unwrap();
            assert!((r.pv - intrinsic).abs() < 1e-15, "{:?} K={k}", spec.kind);
        }
        let sw = InstrumentSpec::swaption_simple(vec![2.0, 2.5, 3.0], k).unwrap();
        let d = |t: f64| m.discount(2.0, t);
        let value = (1.0 - d(3.0) - 0.5 * k * (d(2.5) + d(3.0))).max(0.0) * m.df(2.0);
        assert!((price(&m, &sw).unwrap().pv - value).abs() < 1e-14, "swaption K={k}");
    }
}

#[test]
fn hull_white_degeneration() {
    let m = hw_model(0.01);
    for (t1, t2) in [(1.0, 1.5), (3.0, 4.0)] {
        for k in [0.01, 0.02, 0.03] {
            let spec = InstrumentSpec::rfr_caplet(t1, t2, k).unwrap();
            let r = price_rfr_caplet(&m, &spec).unwrap();
            let hw = hw_baseline_price(&caplet_inputs(&m, &spec), r.variance).unwrap();
            assert!(rel(r.pv, hw) < 1e-10, "rfr {t1} {k}: {} vs {hw}", r.pv);
            let l = price_libor_caplet(&m, &spec).unwrap();
            let hw = hw_baseline_price(&caplet_inputs(&m, &spec), l.variance).unwrap();
            assert!(rel(l.pv, hw) < 1e-10, "libor {t1} {k}");
            assert!(l.variance < r.variance);
        }
    }
}

#[test]
fn term_caplet_matches_sigma_zeroed_compounded_caplet_in_hull_white_limit() {
    let m = hw_model(0.01);
    let spec = InstrumentSpec::rfr_caplet(2.0, 2.5, 0.02).unwrap();
    let zeroed = sigma_zeroed_params(m.params(), 2.0, 2.5).unwrap();
    let mz = Model::with_options(zeroed, 12.0, QuadratureSpec::default(), DriftOrder::First).unwrap();
    let a = price_libor_caplet(&m, &spec).unwrap().pv;
    let b = price_rfr_caplet(&mz, &spec).unwrap().pv;
    assert!(rel(a, b) < 1e-9, "{a} vs {b}");
}

#[test]
fn far_out_of_the_money_is_worthless() {
    let m = smile_model(DriftOrder::First);
    for spec in [
        InstrumentSpec::rfr_caplet(1.0, 1.5, 0.5).unwrap(),
        InstrumentSpec::libor_caplet(1.0, 1.5, 0.5).unwrap(),
        InstrumentSpec::swaption_simple(vec![1.0, 1.25, 1.5], 0.5).unwrap(),
    ] {
        assert!(price(&m, &spec).unwrap().pv.abs() < 1e-12, "{:?}", spec.kind);
    }
}

#[test]
fn caplet_prices_fall_with_strike() {
    let m = smile_model(DriftOrder::First);
    for kind in [InstrumentKind::RfrCaplet, InstrumentKind::LiborCaplet] {
        let pv: Vec<f64> = (0..11)
            .map(|i| price(&m, &InstrumentSpec::caplet(kind, 2.0, 2.5, 0.005 * i as f64, 0.5).unwrap()).unwrap().pv)
            .collect();
        assert!(pv.windows(2).all(|w| w[1] < w[0]), "{kind:?}: {pv:?}");
    }
}

#[test]
fn kernel_correction_of_a_unit_payoff_is_minus_f1() {
    let m = smile_model(DriftOrder::First);
    let one = |_: f64, _: f64| 1.0;
    let opts = G1Options::default();
    for (y, t, v) in [(0.0, 0.0, 2.0), (0.003, 1.0, 2.0), (-0.005, 0.5, 4.0)] {
        let g1 = kernel_g1_apply(&m, &one, y, 0.0, t, v, &opts).unwrap();
        let f1 = f1_functional(&m, y, t, v).unwrap();
        assert!((g1 + f1).abs() < 1e-9, "({y},{t},{v}): {g1} vs {f1}");
        let p = price_by_kernel_quadrature(&m, &one, y, 0.0, t, v, &opts).unwrap();
        let bond = zcb_price(&m, y, t, v, BondOrder::First).unwrap();
        assert!(rel(p.pv(), bond) < 1e-9);
    }
}

#[test]
fn kernel_pricer_rejects_a_degenerate_covariance() {
    let p = ModelParams::constant(0.0, 0.15, 50.0, 0.0, 0.02).unwrap();
    let m = Model::new(p, 3.0).unwrap();
    let e = price_by_kernel_quadrature(&m, &|_, _| 1.0, 0.0, 0.0, 0.0, 2.0, &G1Options::default());
    assert_eq!(e.unwrap_err(), Error::DegenerateCovariance);
}

#[test]
fn kernel_pricer_agrees_with_closed_form_caplet() {
    let m = smile_model(DriftOrder::First);
    let spec = InstrumentSpec::rfr_caplet(1.0, 1.5, 0.02).unwrap();
    let k = kernel_caplet_price(&m, &spec, &G1Options::default()).unwrap();
    let c = price_rfr_caplet(&m, &spec).unwrap();
    assert!(rel(k.pv(), c.pv) < 1e-2);
    assert!(rel(k.order0, c.order0) < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn caplet_value_bounded_by_first_discount_factor(
        sig in 0.002f64..0.015, g in 1.0f64..150.0, u in -0.4f64..0.4,
        t1 in 0.25f64..5.0, tenor in 0.25f64..1.0, k in -0.01f64..0.06,
    ) {
        let p = ModelParams::constant(sig, 0.15, g, u / g, 0.02).unwrap();
        let m = Model::with_options(p, 6.0, QuadratureSpec::default(), DriftOrder::First).unwrap();
        prop_assume!(g * g * m.origin_slice().sigma_rr(t1 + tenor) <= 1.0);
        for kind in [InstrumentKind::RfrCaplet, InstrumentKind::LiborCaplet] {
            let spec = InstrumentSpec::caplet(kind, t1, t1 + tenor, k, tenor).unwrap();
            let pv = price(&m, &spec).unwrap().pv;
            prop_assert!(pv >= 0.0 && pv <= m.df(t1), "{kind:?} pv={pv}");
        }
    }

    #[test]
    fn density_identity_behind_the_caplet_formula(
        y in -0.03f64..0.03, w in -0.02f64..0.02, t in 0.0f64..1.0, k in 0.0f64..0.05,
    ) {
        let m = smile_model(DriftOrder::First);
        let spec = InstrumentSpec::rfr_caplet(1.0, 1.5, k).unwrap();
        let (d1, d2, theta) = caplet_d_values(&m, &spec, y, w, t).unwrap();
        let lhs = norm_pdf(d1);
        let rhs = (1.0 + 0.5 * k) * m.discount(1.0, 1.5) * (-theta - w).exp() * norm_pdf(d2);
        prop_assert!(rel(lhs, rhs) < 1e-11);
    }
}
