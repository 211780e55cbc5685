use std::path::Path;
use std::process::{Command, Output};

use sinhrate::io::{read_model_dir, write_model_dir};
use sinhrate::manifest::Manifest;
use sinhrate_core::marketcal::{synthetic_quotes, CalibrationOptions};
use sinhrate_core::ModelParams;

fn sinhrate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sinhrate")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn model_dir(root: &Path, p: &ModelParams) -> std::path::PathBuf {
    let dir = root.join("model");
    write_model_dir(&dir, p).unwrap();
    dir
}

fn smile() -> ModelParams {
    ModelParams::constant(0.01, 0.15, 50.0, 0.004, 0.02).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn model_directory_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let p = smile();
    let back = read_model_dir(&model_dir(tmp.path(), &p)).unwrap();
    assert_eq!(back.sigma, p.sigma);
    assert_eq!(back.gamma, p.gamma);
    for t in [0.0, 0.5, 3.0, 20.0] {
        assert!((back.discount.df(t) - p.discount.df(t)).abs() < 1e-15);
    }
}

#[test]
fn empty_instrument_file_gives_header_only_output() {
    let tmp = tempfile::tempdir().unwrap();
    let model = model_dir(tmp.path(), &smile());
    let inst = tmp.path().join("inst.csv");
    std::fs::write(&inst, "id,kind,T0,T1,strike,delta\n").unwrap();
    let out = tmp.path().join("out");
    let o = sinhrate(&["price", "--model", s(&model), "--instruments", s(&inst), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("prices.csv")).unwrap();
    assert_eq!(csv, "instrument_id,pv,order0,order1,effective_variance,implied_hw_vol\n");
    let man = Manifest::read(&out.join("manifest.json")).unwrap();
    assert_eq!(man.command, "price");
    assert_eq!(man.inputs.len(), 6);
    assert_eq!(man.outputs.len(), 1);
}

#[test]
fn zero_volatility_caplet_prices_at_intrinsic_value() {
    let tmp = tempfile::tempdir().unwrap();
    let p = ModelParams::constant(0.0, 0.15, 50.0, 0.004, 0.02).unwrap();
    let model = model_dir(tmp.path(), &p);
    let inst = tmp.path().join("inst.csv");
    std::fs::write(&inst, "id,kind,T0,T1,strike,delta\ncap,rfr_caplet,1,1.5,0.01,0.5\n").unwrap();
    let out = tmp.path().join("out");
    let o = sinhrate(&["price", "--model", s(&model), "--instruments", s(&inst), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("prices.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "cap");
    let pv: f64 = row[1].parse().unwrap();
    let intrinsic = p.discount.df(1.0) - 1.005 * p.discount.df(1.5);
    assert!((pv - intrinsic).abs() < 1e-14, "{pv} vs {intrinsic}");
}

#[test]
fn malformed_inputs_exit_with_code_two_and_a_line_number() {
    let tmp = tempfile::tempdir().unwrap();
    let model = model_dir(tmp.path(), &smile());
    let inst = tmp.path().join("inst.csv");
    std::fs::write(&inst, "id,kind,T0,T1,strike,delta\na,rfr,1,1.5,0.02,0.5\nb,rfr,1,oops,0.02,0.5\n").unwrap();
    let out = tmp.path().join("out");
    let o = sinhrate(&["price", "--model", s(&model), "--instruments", s(&inst), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("inst.csv:3:"), "{}", stderr(&o));

    std::fs::write(model.join("sigma.csv"), "time,value\n0,0.01\n1,abc\n").unwrap();
    std::fs::write(&inst, "id,kind,T0,T1,strike,delta\na,rfr,1,1.5,0.02,0.5\n").unwrap();
    let o = sinhrate(&["price", "--model", s(&model), "--instruments", s(&inst), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sigma.csv:3:"), "{}", stderr(&o));
    // validation refuses a corrupted model before running any check
    let o = sinhrate(&["validate", "--model", s(&model), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&o.stdout).contains("criterion"));
}

#[test]
fn monte_carlo_runs_are_byte_identical_and_replayable() {
    let tmp = tempfile::tempdir().unwrap();
    let model = model_dir(tmp.path(), &smile());
    let inst = tmp.path().join("inst.csv");
    std::fs::write(
        &inst,
        "id,kind,T0,T1,T2,strike,d1,d2\n\
         sw,payer_swaption,1,1.5,2,0.02,0.5,0.5\n\
         id,kind,T0,T1,strike,delta\n\
         cap,rfr_caplet,1,1.5,0.02,0.5\n\
         lib,libor_caplet,1,1.5,0.02,0.5\n",
    )
    .unwrap();
    let mut outputs = Vec::new();
    for dir in ["a", "b"] {
        let out = tmp.path().join(dir);
        let o = sinhrate(&[
            "price", "--model", s(&model), "--instruments", s(&inst), "--out", s(&out),
            "--mc", "--paths", "4000", "--seed", "7", "--steps-per-year", "50",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        outputs.push(std::fs::read(out.join("prices.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert!(text.starts_with("instrument_id,pv,order0,order1,effective_variance,implied_hw_vol,mc_pv,mc_se,mc_within_3se\n"));
    assert_eq!(text.lines().count(), 4);

    let man = tmp.path().join("a").join("manifest.json");
    std::fs::remove_file(tmp.path().join("a").join("prices.csv")).unwrap();
    let o = sinhrate(&["replay", s(&man)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read(tmp.path().join("a").join("prices.csv")).unwrap(), outputs[0]);

    // a changed input is refused
    std::fs::write(&inst, "id,kind,T0,T1,strike,delta\n").unwrap();
    let o = sinhrate(&["replay", s(&man)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn hull_white_limit_surface_is_flat_in_strike() {
    let tmp = tempfile::tempdir().unwrap();
    let p = ModelParams::constant(0.01, 0.15, 1e-8, 0.0, 0.02).unwrap();
    let model = model_dir(tmp.path(), &p);
    let out = tmp.path().join("out");
    let o = sinhrate(&["surface", "--model", s(&model), "--out", s(&out), "--compare-libor"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("surface.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "maturity,strike,implied_vol,effective_variance,eps_diagnostic,libor_implied_vol"
    );
    for l in lines {
        let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[2] - 0.01).abs() < 1e-9, "{l}");
        assert!((v[5] - 0.01).abs() < 1e-9, "{l}");
    }
}

#[test]
fn smile_surface_and_forward_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let model = model_dir(tmp.path(), &smile());
    let out = tmp.path().join("out");
    let o = sinhrate(&["surface", "--model", s(&model), "--out", s(&out), "--maturities", "2", "--strikes", "0.01,0.02,0.03"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("surface.csv")).unwrap();
    let iv: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(iv.len(), 3);
    // the smile is convex in strike
    assert!(iv[0] - 2.0 * iv[1] + iv[2] > 0.0, "{iv:?}");

    let o = sinhrate(&["forwards", "--model", s(&model), "--out", s(&out), "--times", "1", "--points", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("forwards.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(csv.lines().next().unwrap(), "t,y,forward_rate,hw_forward_rate");
    assert_eq!(rows.len(), 5);
    assert!(rows.windows(2).all(|w| w[1][2] > w[0][2] && w[1][3] > w[0][3]));
    // the Hull-White column is linear in y
    let hw: Vec<f64> = rows.iter().map(|r| r[3]).collect();
    assert!((hw[0] - 2.0 * hw[2] + hw[4]).abs() < 1e-12);
}

#[test]
fn calibration_recovers_the_generating_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let p = ModelParams::constant(0.01, 0.15, 60.0, 0.25 / 60.0, 0.02).unwrap();
    let model = model_dir(tmp.path(), &p);
    let q = synthetic_quotes(&p, &[1.0, 2.0], 0.5, &[0.01, 0.015, 0.02, 0.025, 0.03], &CalibrationOptions::default())
        .unwrap();
    let mut text = String::from("maturity,tenor,strike,implied_vol\n");
    for r in q.rows() {
        text.push_str(&format!("{},{},{},{}\n", r.maturity, r.tenor, r.strike, r.implied_vol));
    }
    let quotes = tmp.path().join("quotes.csv");
    std::fs::write(&quotes, text).unwrap();
    let out = tmp.path().join("out");
    let o = sinhrate(&["calibrate", "--quotes", s(&quotes), "--model", s(&model), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let fitted = read_model_dir(&out.join("model")).unwrap();
    for t in [0.0, 1.5] {
        assert!((fitted.sigma.at(t) / 0.01 - 1.0).abs() < 1e-6);
        assert!((fitted.gamma.at(t) / 60.0 - 1.0).abs() < 1e-6);
    }
    let res = std::fs::read_to_string(out.join("residuals.csv")).unwrap();
    assert_eq!(res.lines().count(), 11);
    for l in res.lines().skip(1) {
        let r: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!(r.abs() < 1e-10, "{l}");
    }
}
