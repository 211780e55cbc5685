#![allow(dead_code)]

use sinhrate_core::{DriftOrder, Model, ModelParams, QuadratureSpec};

/// Smile parameters of the size reported for market fits: γ = 50, γy* = 0.2.
pub fn smile_params() -> ModelParams {
    ModelParams::constant(0.01, 0.15, 50.0, 0.2 / 50.0, 0.02).unwrap()
}

pub fn smile_model(order: DriftOrder) -> Model {
    Model::with_options(smile_params(), 12.0, QuadratureSpec::default(), order).unwrap()
}

pub fn hw_model(sigma: f64) -> Model {
    let p = ModelParams::constant(sigma, 0.15, 1e-8, 0.0, 0.02).unwrap();
    Model::with_options(p, 12.0, QuadratureSpec::default(), DriftOrder::First).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
