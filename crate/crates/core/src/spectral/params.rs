use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical parameters of the Oldroyd-B system.
///
/// `omega` is the retardation ratio in `(0, 1)`, `a` the slip parameter of
/// the upper/lower-convected family, `reynolds`/`weissenberg` the inertial
/// and relaxation scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidParams {
    omega: f64,
    a: f64,
    reynolds: f64,
    weissenberg: f64,
}

impl Default for FluidParams {
    fn default() -> Self {
        Self { omega: 0.5, a: 0.0, reynolds: 1.0, weissenberg: 1.0 }
    }
}

impl FluidParams {
    pub fn new(omega: f64, a: f64, reynolds: f64, weissenberg: f64) -> Result<Self> {
        if !(omega > 0.0 && omega < 1.0) {
            return Err(Error::param("omega", format!("must lie in (0, 1), got {omega}")));
        }
        if !(-1.0..=1.0).contains(&a) {
            return Err(Error::param("a", format!("must lie in [-1, 1], got {a}")));
        }
        if !(reynolds.is_finite() && reynolds > 0.0) {
            return Err(Error::param("reynolds", format!("must be positive, got {reynolds}")));
        }
        if !(weissenberg.is_finite() && weissenberg > 0.0) {
            return Err(Error::param("weissenberg", format!("must be positive, got {weissenberg}")));
        }
        Ok(Self { omega, a, reynolds, weissenberg })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn reynolds(&self) -> f64 {
        self.reynolds
    }
    pub fn weissenberg(&self) -> f64 {
        self.weissenberg
    }

    /// Effective viscosity `(1 - ω)/Re` of the linear momentum operator.
    pub fn viscosity(&self) -> f64 {
        (1.0 - self.omega) / self.reynolds
    }

    /// Length scale `sqrt(We/Re)` that maps the linear system onto the
    /// unit-coefficient one.
    pub fn length_scale(&self) -> f64 {
        (self.weissenberg / self.reynolds).sqrt()
    }
}
