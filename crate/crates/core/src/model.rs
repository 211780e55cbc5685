//! A parameter set bundled with its kernel tables and calibrated drift.

use alloc::sync::Arc;

use crate::drift::DriftTable;
use crate::error::{domain, Result};
use crate::kernel::{Kernel, Slice};
use crate::numerics::QuadratureSpec;
use crate::termstructure::ModelParams;

/// Which drift terms are installed in the short rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriftOrder {
    /// `R* = R₁*`.
    First,
    /// `R* = R₁* + R₂*`.
    #[default]
    Second,
}

/// The model ready for pricing: parameters, the origin-0 kernel tables and
/// the drift table, all valid on `[0, horizon]`.
#[derive(Debug, Clone)]
pub struct Model {
    params: ModelParams,
    kernel: Arc<Kernel>,
    origin: Slice,
    drift: DriftTable,
    spec: QuadratureSpec,
    order: DriftOrder,
}

impl Model {
    pub fn new(params: ModelParams, horizon: f64) -> Result<Self> {
        Self::with_options(params, horizon, QuadratureSpec::default(), DriftOrder::default())
    }

    pub fn with_options(
        params: ModelParams,
        horizon: f64,
        spec: QuadratureSpec,
        order: DriftOrder,
    ) -> Result<Self> {
        let kernel = Arc::new(Kernel::new(
            &params.alpha,
            &params.sigma,
            &params.gamma,
            params.y_star.breakpoints(),
            horizon,
            &spec,
        )?);
        let origin = Slice::new(kernel.clone(), 0.0, kernel.horizon())?;
        let drift = DriftTable::build(&params, &origin)?;
        Ok(Model { params, kernel, origin, drift, spec, order })
    }

    /// Same parameters with a different drift order (tables are shared).
    pub fn with_drift_order(&self, order: DriftOrder) -> Self {
        Model { order, ..self.clone() }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    pub fn drift_order(&self) -> DriftOrder {
        self.order
    }

    pub fn horizon(&self) -> f64 {
        self.kernel.horizon()
    }

    pub fn drift(&self) -> &DriftTable {
        &self.drift
    }

    /// Kernel tables for origin 0.
    pub fn origin_slice(&self) -> &Slice {
        &self.origin
    }

    /// Kernel tables for origin `t` up to `end`.
    pub fn slice(&self, t: f64, end: f64) -> Result<Slice> {
        if t == 0.0 && end <= self.horizon() {
            return Ok(self.origin.clone());
        }
        Slice::new(self.kernel.clone(), t, end)
    }

    pub(crate) fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0) || t > self.horizon() * (1.0 + 1e-12) {
            return Err(domain(alloc::format!(
                "time {t} outside the model range [0, {}]",
                self.horizon()
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn gamma(&self, t: f64) -> f64 {
        self.params.gamma.at(t)
    }

    #[inline]
    pub fn y_star(&self, t: f64) -> f64 {
        self.params.y_star.at(t)
    }

    #[inline]
    pub fn df(&self, t: f64) -> f64 {
        self.params.discount.df(t)
    }

    /// `D(t1, t2)`.
    #[inline]
    pub fn discount(&self, t1: f64, t2: f64) -> f64 {
        crate::fmath::exp(self.params.discount.log_discount(t2) - self.params.discount.log_discount(t1))
    }

    /// Installed drift `R*(t)`.
    pub fn r_star(&self, t: f64) -> f64 {
        match self.order {
            DriftOrder::First => self.drift.r1(t),
            DriftOrder::Second => self.drift.r1(t) + self.drift.r2(t),
        }
    }

    /// `∫ₐᵇ R*`.
    pub fn r_star_integral(&self, a: f64, b: f64) -> f64 {
        match self.order {
            DriftOrder::First => self.drift.r1_integral(b) - self.drift.r1_integral(a),
            DriftOrder::Second => self.drift.total_integral(b) - self.drift.total_integral(a),
        }
    }

    /// `∫ₐᵇ R₂*` if installed, else 0.
    pub fn r2_integral(&self, a: f64, b: f64) -> f64 {
        match self.order {
            DriftOrder::First => 0.0,
            DriftOrder::Second => self.drift.r2_integral(b) - self.drift.r2_integral(a),
        }
    }

    /// `R₂*(t)` if installed, else 0.
    pub fn r2_installed(&self, t: f64) -> f64 {
        match self.order {
            DriftOrder::First => 0.0,
            DriftOrder::Second => self.drift.r2(t),
        }
    }
}
