//! Deconvolution density estimation and nonparametric regression on the
//! unit hypersphere `S^d` when the observed directions have been perturbed
//! by unobserved random rotations.
//!
//! The crate is organised bottom-up:
//!
//! - [`geom`]: points on `S^d`, rotations in `SO(d+1)`, product quadrature
//!   rules and random samplers.
//! - [`harmonics`]: orthonormal hyperspherical harmonic bases and Wigner
//!   small-d matrices.
//! - [`fourier`]: rotational Fourier transforms of measurement-error
//!   distributions, their inverses and smoothness classes.
//! - [`estimators`]: the deconvolution kernel, density and regression
//!   estimators, and cross-validated truncation selection.
//! - [`inference`]: pointwise confidence intervals based on asymptotic
//!   normality and on empirical likelihood.
//! - [`simulation`]: the Monte Carlo harness used to study bias, variance
//!   and interval coverage.

pub mod error;
pub mod estimators;
pub mod fourier;
pub mod geom;
pub mod harmonics;
pub mod inference;
pub mod simulation;

pub use error::{Error, Result};
pub use num_complex::Complex64;
