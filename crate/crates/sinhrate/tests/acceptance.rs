//! One test per acceptance criterion. Each prints a PASS/FAIL line with the
//! measured values; the tolerances live in `sinhrate::validation`.

use sinhrate::validation::{self, CriterionResult, ValidationConfig};

fn check(r: CriterionResult) {
    r.print();
    assert!(r.passed, "{}", r.line());
}

#[test]
fn criterion_1_hull_white_degeneration() {
    check(validation::criterion_1());
}

#[test]
fn criterion_2_no_arbitrage_drift() {
    check(validation::criterion_2(&ValidationConfig::default()));
}

#[test]
fn criterion_3_oracle_agreement() {
    check(validation::criterion_3(&ValidationConfig::default()));
}

#[test]
fn criterion_4_effective_variance_matching() {
    check(validation::criterion_4(&ValidationConfig::default()));
}

#[test]
fn criterion_5_integral_identity_and_drift_forms() {
    check(validation::criterion_5(&ValidationConfig::default()));
}

#[test]
fn criterion_6_calibration_round_trip() {
    check(validation::criterion_6());
}

#[test]
fn criterion_7_figure_shapes() {
    check(validation::criterion_7(&ValidationConfig::default()));
}

#[test]
fn criterion_8_kernel_cross_pricer() {
    check(validation::criterion_8(&ValidationConfig::default()));
}
