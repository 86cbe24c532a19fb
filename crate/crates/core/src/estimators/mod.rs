//! Deconvolution kernels, density and regression estimators, and
//! truncation selection by cross-validation.

mod cv;
mod density;
mod kernel;

pub use cv::{
    cv_density_curve, cv_regression_curve, select_t_density, select_t_regression, CvCurve,
};
pub use density::{
    density_estimate, density_estimate_direct, naive_regression_estimate, regression_estimate,
    sample_coefficients, SampleCoefficients,
};
pub use kernel::{kernel_star_eval, DeconvKernel, KernelRows};

use crate::error::{Error, Result};
use crate::geom::{sphere_area, SpherePoint};

/// Denominator floor below which regression estimates are flagged.
pub fn instability_floor(d: usize) -> f64 {
    1e-6 / sphere_area(d)
}

/// Observed contaminated directions `Z_i` with optional responses `Y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    z: Vec<SpherePoint>,
    y: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(z: Vec<SpherePoint>, y: Option<Vec<f64>>) -> Result<Self> {
        let first = z.first().ok_or_else(|| Error::domain("dataset is empty"))?;
        let dim = first.dim();
        if z.iter().any(|p| p.dim() != dim) {
            return Err(Error::domain(
                "all observations must lie on the same sphere",
            ));
        }
        if let Some(y) = &y {
            if y.len() != z.len() {
                return Err(Error::domain(format!(
                    "{} responses for {} directions",
                    y.len(),
                    z.len()
                )));
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::domain("responses must be finite"));
            }
        }
        Ok(Self { dim, z, y })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn z(&self) -> &[SpherePoint] {
        &self.z
    }

    pub fn y(&self) -> Option<&[f64]> {
        self.y.as_deref()
    }

    pub(crate) fn require_y(&self) -> Result<&[f64]> {
        self.y()
            .ok_or_else(|| Error::domain("this operation needs responses Y"))
    }
}

/// Point estimates, variance estimates and interval bounds on a grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EstimateGrid {
    pub nodes: Vec<SpherePoint>,
    pub f_hat: Vec<f64>,
    pub m_hat: Option<Vec<f64>>,
    pub s1: Option<Vec<f64>>,
    pub s2: Option<Vec<f64>>,
    pub ci_low: Option<Vec<f64>>,
    pub ci_high: Option<Vec<f64>>,
    /// Regression denominator below the instability floor.
    pub unstable: Vec<bool>,
    /// Interval degenerate or truncated at the feasibility boundary.
    pub degenerate: Vec<bool>,
    pub warning: Option<String>,
}

impl EstimateGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The regression estimate when present, else the density estimate.
    pub fn estimate(&self) -> &[f64] {
        self.m_hat.as_deref().unwrap_or(&self.f_hat)
    }
}
