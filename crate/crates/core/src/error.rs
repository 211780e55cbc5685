use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument outside the operation's domain (negative time, bad ordering, ...).
    Domain(String),
    /// Invalid construction data (unsorted breakpoints, negative volatility, ...).
    InvalidInput(String),
    /// Quadrature refinement did not settle; carries the last two estimates.
    Tolerance { last: f64, previous: f64 },
    /// The root finder was handed an interval without a sign change.
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    /// A function evaluation produced NaN.
    Evaluation(String),
    /// A covariance matrix without a density.
    DegenerateCovariance,
    /// Effective-variance expansion outside its domain of validity.
    OutOfDomain(String),
    /// Not enough data to identify a fit.
    Underdetermined(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::InvalidInput(m) => write!(f, "invalid input: {m}"),
            Error::Tolerance { last, previous } => write!(
                f,
                "quadrature did not converge (last estimate {last:e}, previous {previous:e})"
            ),
            Error::Bracket { lo, hi, f_lo, f_hi } => write!(
                f,
                "no sign change on [{lo}, {hi}] (f = {f_lo:e}, {f_hi:e})"
            ),
            Error::Evaluation(m) => write!(f, "evaluation error: {m}"),
            Error::DegenerateCovariance => write!(f, "degenerate covariance matrix"),
            Error::OutOfDomain(m) => write!(f, "outside expansion domain: {m}"),
            Error::Underdetermined(m) => write!(f, "under-determined: {m}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
