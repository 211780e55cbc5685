mod common;

use common::*;
use sinhrate_core::oracle::*;
use sinhrate_core::pricing::InstrumentSpec;
use sinhrate_core::{DriftOrder, Model, ModelParams, QuadratureSpec};

fn cfg(paths: usize) -> McConfig {
    McConfig { paths, ..McConfig::default() }
}

#[test]
fn zero_volatility_paths_are_deterministic() {
    let p = ModelParams::constant(0.0, 0.15, 50.0, 0.004, 0.02).unwrap();
    let m = Model::with_options(p, 3.0, QuadratureSpec::default(), DriftOrder::First).unwrap();
    let paths = simulate_paths(&m, &[1.0, 2.5], cfg(6)).unwrap();
    let expect = |t: f64| m.r_star_integral(0.0, t) + (0.2f64).sinh() / 50.0 * t;
    for p in &paths {
        assert_eq!(p[0].0, 0.0);
        assert!((p[0].1 - expect(1.0)).abs() < 1e-14);
        assert!((p[1].1 - expect(2.5)).abs() < 1e-14);
    }
    let spec = InstrumentSpec::rfr_caplet(1.0, 1.5, 0.01).unwrap();
    let e = mc_price(&m, &McPayoff::Instrument(spec), cfg(1000)).unwrap();
    assert!(e.std_error < 1e-15);
    let analytic = sinhrate_core::pricing::price(&m, &InstrumentSpec::rfr_caplet(1.0, 1.5, 0.01).unwrap()).unwrap().pv;
    assert!(rel(e.mean, analytic) < 1e-6);
}

#[test]
fn factor_moments_match_the_ou_transition() {
    let m = smile_model(DriftOrder::First);
    let n = 200_000;
    let paths = simulate_paths(&m, &[0.5, 3.0], cfg(n)).unwrap();
    for (i, t) in [0.5, 3.0].into_iter().enumerate() {
        let var = m.origin_slice().sigma_rr(t);
        // antithetic legs cancel the mean exactly
        let mean: f64 = paths.iter().map(|p| p[i].0).sum::<f64>() / n as f64;
        assert!(mean.abs() < 1e-15);
        let sq: Vec<f64> = paths.chunks(2).map(|c| 0.5 * (c[0][i].0.powi(2) + c[1][i].0.powi(2))).collect();
        let m2 = sq.iter().sum::<f64>() / sq.len() as f64;
        let se = (sq.iter().map(|x| (x - m2).powi(2)).sum::<f64>() / (sq.len() * (sq.len() - 1)) as f64).sqrt();
        assert!((m2 - var).abs() < 3.0 * se, "t={t}: {m2} vs {var} (se {se})");
    }
}

#[test]
fn runs_are_reproducible_and_seed_dependent() {
    let m = smile_model(DriftOrder::First);
    let pay = [McPayoff::Bond { maturity: 2.0 }];
    let a = mc_price_many(&m, &pay, cfg(20_000)).unwrap();
    let b = mc_price_many(&m, &pay, cfg(20_000)).unwrap();
    assert_eq!(a, b);
    let c = mc_price_many(&m, &pay, McConfig { seed: 7, ..cfg(20_000) }).unwrap();
    assert_ne!(a[0].mean, c[0].mean);
    // block results merged in any grouping give the same tree
    let run = McRun::new(&m, &pay, cfg(20_000)).unwrap();
    let blocks: Vec<_> = (0..run.blocks()).rev().map(|i| (i, run.run_block(i))).collect();
    let mut ordered: Vec<_> = blocks.into_iter().collect();
    ordered.sort_by_key(|x| x.0);
    let est = run.finish(ordered.into_iter().map(|x| x.1).collect());
    assert_eq!(est, a);
}

#[test]
fn discounting_matches_the_curve_in_hull_white_limit() {
    // the drift is exact here, so only sampling noise remains
    let m = hw_model(0.01);
    let ts = [1.0, 5.0, 10.0];
    let pay: Vec<McPayoff> = ts.iter().map(|&t| McPayoff::Bond { maturity: t }).collect();
    let est = mc_price_many(&m, &pay, cfg(100_000)).unwrap();
    for (e, t) in est.iter().zip(ts) {
        assert!((e.mean - m.df(t)).abs() < 3.0 * e.std_error, "t={t}: {e:?} vs {}", m.df(t));
    }
}

#[test]
fn unreachable_strike_is_worthless() {
    let m = smile_model(DriftOrder::First);
    let spec = InstrumentSpec::rfr_caplet(1.0, 1.5, 1.0).unwrap();
    let e = mc_price(&m, &McPayoff::Instrument(spec), cfg(10_000)).unwrap();
    assert_eq!(e.mean, 0.0);
}

#[test]
fn standard_error_scales_with_inverse_root_paths() {
    let m = smile_model(DriftOrder::First);
    let spec = InstrumentSpec::rfr_caplet(1.0, 1.5, 0.02).unwrap();
    let pay = McPayoff::Instrument(spec);
    let c = McConfig { steps_per_year: 16, ..McConfig::default() };
    let pts: Vec<(f64, f64)> = [10_000usize, 100_000, 1_000_000]
        .iter()
        .map(|&n| {
            let e = mc_price(&m, &pay, McConfig { paths: n, ..c }).unwrap();
            ((n as f64).ln(), e.std_error.ln())
        })
        .collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() < 0.05, "slope {slope}");
}
