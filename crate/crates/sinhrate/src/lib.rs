//! File formats, parallel Monte Carlo, the acceptance checks and the command
//! line for `sinhrate-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod io;
pub mod manifest;
pub mod mc;
pub mod validation;

pub use error::{CliError, CliResult};
