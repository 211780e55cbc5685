//! Asymptotic pricing for the sinh-transformed short-rate model.
//!
//! The factor `y` follows a Gaussian Ornstein-Uhlenbeck process and the short
//! rate is `r(y,t) = r̄(t) + R*(t) + sinh(γ(t)(y + y*(t)))/γ(t)`, where `r̄` is the
//! instantaneous forward of the discount curve and `R*` is the deterministic
//! drift that keeps the model arbitrage-free. The crate evaluates bond prices,
//! forward rates, compounded-rate and term-rate caplets and payer swaptions as
//! first-order expansions in the small parameter `γ²Σ_rr`, converts them into
//! effective Hull-White variances, calibrates the parameter curves to a caplet
//! volatility surface, and provides an exact-transition Monte Carlo reference.
//!
//! The crate is `no_std` (it needs `alloc`); file formats, the command line
//! and parallel Monte Carlo live in the `sinhrate` companion crate.

#![cfg_attr(not(any(test, feature = "std")), no_std)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod drift;
pub mod error;
pub mod implied;
pub mod kernel;
pub mod marketcal;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod pricing;
pub mod termstructure;

pub(crate) mod fmath;

pub use error::{Error, Result};
pub use model::{DriftOrder, Model};
pub use numerics::QuadratureSpec;
pub use termstructure::{DiscountCurve, ModelParams, PiecewiseCurve};
