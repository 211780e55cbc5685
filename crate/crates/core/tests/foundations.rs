use proptest::prelude::*;
use sinhrate_core::numerics::*;
use sinhrate_core::{DiscountCurve, PiecewiseCurve};

#[test]
fn discount_curve_examples() {
    let flat = DiscountCurve::flat(0.02);
    assert!((flat.discount(0.0, 5.0).unwrap() - (-0.1f64).exp()).abs() < 1e-15);
    assert!((flat.discount(0.0, 5.0).unwrap() - 0.904837).abs() < 1e-6);
    assert_eq!(flat.discount(2.0, 2.0).unwrap(), 1.0);
    assert!((flat.instantaneous_forward(4.0).unwrap() - 0.02).abs() < 1e-15);
    assert!((flat.instantaneous_forward(0.0).unwrap() - 0.02).abs() < 1e-15);

    let c = DiscountCurve::new(&[1.0, 2.0], &[0.99, 0.97]).unwrap();
    assert!((c.instantaneous_forward(1.5).unwrap() - (0.99f64 / 0.97).ln()).abs() < 1e-15);
    let d3 = c.df(3.0);
    assert!((c.discount(1.0, 3.0).unwrap() - d3 / 0.99).abs() < 1e-15);
    assert!(c.discount(2.0, 1.0).is_err());
    assert!(DiscountCurve::new(&[1.0, 2.0], &[0.99, -0.97]).is_err());
    // flat extrapolation at the last segment's rate
    assert_eq!(c.instantaneous_forward(9.0).unwrap(), c.instantaneous_forward(1.5).unwrap());
}

#[test]
fn model_params_validation() {
    use sinhrate_core::ModelParams;
    assert!(ModelParams::constant(0.01, 0.15, 0.0, 0.0, 0.02).is_err());
    assert!(ModelParams::constant(-0.01, 0.15, 1.0, 0.0, 0.02).is_err());
    assert!(ModelParams::constant(0.01, 0.15, 1e-8, 0.0, 0.02).is_ok());
}

#[test]
fn quadrature_and_root_examples() {
    let s = QuadratureSpec::default();
    assert!((integrate(|_| 1.0, 0.0, 3.0, &[], &s).unwrap() - 3.0).abs() < 1e-14);
    let e = integrate(|t| (-0.3 * t).exp(), 0.0, 2.0, &[], &s).unwrap();
    assert!((e - (1.0 - (-0.6f64).exp()) / 0.3).abs() < 1e-14);
    assert_eq!(integrate(|t| t, 1.0, 1.0, &[], &s).unwrap(), 0.0);

    assert!((find_root(|x| x - 1.0, 0.0, 2.0, 1e-15).unwrap() - 1.0).abs() < 1e-14);
    assert!(find_root(|x| norm_cdf(x) - 0.5, -3.0, 3.0, 1e-15).unwrap().abs() < 1e-14);
    let r = find_root(|x| x.exp() - 2.0, 0.0, 1.0, 1e-15).unwrap();
    assert!((r - 2f64.ln()).abs() < 1e-14);
    assert!(find_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
}

#[test]
fn gaussian_examples() {
    assert_eq!(norm_cdf(0.0), 0.5);
    assert!((norm_pdf(0.0) - 0.398942).abs() < 1e-6);
    let id = BivariateGaussian::new(1.0, 0.0, 1.0).unwrap();
    assert!((bvn_pdf(0.0, 0.0, &id).unwrap() - 0.159155).abs() < 1e-6);
    assert!(!BivariateGaussian::new(1.0, 1.0, 1.0).unwrap().has_density());
    assert!(BivariateGaussian::new(1.0, 1.0, 1.0).unwrap().pdf(0.0, 0.0).is_err());
    assert!(BivariateGaussian::new(1.0, 2.0, 1.0).is_err());
}

#[test]
fn cdf_difference_matches_quadrature() {
    let r = GaussLegendre::new(24);
    for &c in &[-7.0, -2.0, -0.3, 0.0, 0.4, 1.7, 5.0] {
        for &d in &[1e-12, 1e-6, 0.01, 0.049, 0.2, 0.7, 2.0] {
            // integrate in the offset so the interval length is exact
            let q = r.integrate(-d, d, |u| norm_pdf(c + u));
            let v = norm_cdf_diff(c, d);
            assert!((v - q).abs() <= 1e-14 * q.abs(), "c={c} d={d} v={v} q={q}");
            assert!((norm_cdf_diff(c, -d) + v).abs() <= 1e-14 * q.abs());
        }
    }
}

#[test]
fn bivariate_density_integrates_to_one() {
    let cov = BivariateGaussian::new(2.0e-4, 1.1e-4, 0.9e-4).unwrap();
    let r = GaussLegendre::new(48);
    let (su, sw) = (cov.s11.sqrt(), cov.s22.sqrt());
    let total = r.integrate(-8.0 * su, 8.0 * su, |u| r.integrate(-8.0 * sw, 8.0 * sw, |w| cov.pdf(u, w).unwrap()));
    assert!((total - 1.0).abs() < 1e-8, "{total}");
}

#[test]
fn gauss_legendre_rule() {
    let r = GaussLegendre::new(16);
    assert!((r.weights().iter().sum::<f64>() - 2.0).abs() < 1e-14);
    // degree 31 is the highest exact degree
    assert!((r.integrate(0.0, 1.0, |x| x.powi(31)) - 1.0 / 32.0).abs() < 1e-15);
    let (a, b) = (0.3, 0.8);
    let vals: Vec<f64> = (0..16).map(|j| r.node_on(a, b, j).exp()).collect();
    let mut out = vec![0.0; 16];
    r.running_integrals(a, b, &vals, &mut out);
    for (j, o) in out.iter().enumerate() {
        assert!((o - (r.node_on(a, b, j).exp() - a.exp())).abs() < 1e-15, "{j}");
    }
}

#[test]
fn adaptive_integration() {
    let spec = QuadratureSpec::default();
    assert!(integrate(|t| t, 2.0, 1.0, &[], &spec).is_err());
    let f = |t: f64| if t < 1.3 { 1.0 } else { 2.0 };
    assert!((integrate(f, 0.0, 2.0, &[1.3], &spec).unwrap() - 2.7).abs() < 1e-13);
    // an unsplit jump cannot settle in one refinement
    let coarse = QuadratureSpec { max_refinements: 1, ..spec };
    let g = |t: f64| if t < 0.3 { 0.0 } else { 1.0 };
    assert!(matches!(integrate(g, 0.0, 1.0, &[], &coarse), Err(sinhrate_core::Error::Tolerance { .. })));
}

#[test]
fn panel_function_interpolates_and_integrates() {
    let r = GaussLegendre::new(16);
    let edges = vec![0.0, 0.5, 1.0, 2.0];
    let vals: Vec<f64> = edges.windows(2).flat_map(|w| (0..16).map(|j| r.node_on(w[0], w[1], j).exp()).collect::<Vec<_>>()).collect();
    let pf = PanelFunction::new(edges, vals, &r);
    for &x in &[0.0, 0.1, 0.5, 0.77, 1.5, 2.0] {
        assert!((pf.value(&r, x) - x.exp()).abs() < 1e-13, "x={x}");
        assert!((pf.integral_to(&r, x) - (x.exp() - 1.0)).abs() < 1e-13, "x={x}");
    }
    assert!((pf.integral_between(&r, 0.2, 1.7) - (1.7f64.exp() - 0.2f64.exp())).abs() < 1e-13);
}

#[test]
fn root_finder_errors() {
    assert!(matches!(find_root(|_| f64::NAN, -1.0, 1.0, 1e-12), Err(sinhrate_core::Error::Evaluation(_))));
}

#[test]
fn piecewise_curve_examples() {
    assert_eq!(PiecewiseCurve::constant(0.15).value(7.3).unwrap(), 0.15);
    let c = PiecewiseCurve::new(vec![0.0, 1.0], vec![0.01, 0.02]).unwrap();
    assert_eq!(c.value(1.0).unwrap(), 0.02);
    assert_eq!(c.value(0.999).unwrap(), 0.01);
    assert!(c.value(-0.1).is_err());
    assert!(PiecewiseCurve::new(vec![0.0, 1.0, 1.0], vec![1.0, 2.0, 3.0]).is_err());
    assert!(PiecewiseCurve::new(vec![0.5], vec![1.0]).is_err());
    let d = c.with_value_on(0.5, f64::INFINITY, 0.05);
    assert_eq!((d.at(0.4), d.at(0.5), d.at(3.0)), (0.01, 0.05, 0.05));
}

proptest! {
    #[test]
    fn cdf_difference_is_accurate(c in -8.0f64..8.0, delta in 1e-12f64..2.0) {
        let direct = norm_cdf(c + delta) - norm_cdf(c - delta);
        let q = integrate(norm_pdf, c - delta, c + delta, &[], &QuadratureSpec::default()).unwrap();
        let v = norm_cdf_diff(c, delta);
        prop_assert!((v - q).abs() <= 1e-12 * q.abs().max(1e-300) + 1e-300);
        prop_assert!((v - direct).abs() <= 1e-15);
    }
}
