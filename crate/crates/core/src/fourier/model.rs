use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::geom::{gauss_legendre, Rotation};

/// Growth scenario of `||(phi~^l)^{-1}||_op` in `l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Ordinary smooth: polynomial growth of order `beta`.
    S1,
    /// Super smooth: `l^alpha exp(gamma l^beta)` growth.
    S2,
    /// Log-super smooth.
    S3,
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scenario::S1 => "S1",
            Scenario::S2 => "S2",
            Scenario::S3 => "S3",
        })
    }
}

/// Smoothness class parameters. Only the fields relevant to the scenario
/// are populated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessClass {
    pub scenario: Scenario,
    pub beta: f64,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub xi1: Option<f64>,
    pub xi2: Option<f64>,
}

impl SmoothnessClass {
    fn ordinary(beta: f64) -> Self {
        Self {
            scenario: Scenario::S1,
            beta,
            alpha: None,
            gamma: None,
            xi1: None,
            xi2: None,
        }
    }
}

/// The named rotation-error distributions.
#[derive(Debug, Clone, PartialEq)]
pub enum ErrorKind {
    ErrorFree,
    Laplace { lambda: f64 },
    Gaussian { lambda: f64 },
    Rosenthal { theta: f64, p: f64 },
    VonMisesFisher { lambda: f64, mean: Rotation },
}

/// A measurement-error distribution on `SO(d+1)` with density taken with
/// respect to the normalised Haar measure.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorModel {
    kind: ErrorKind,
    dim: usize,
    smoothness: SmoothnessClass,
    /// `log c(lambda, A)` for von Mises-Fisher, zero otherwise.
    log_norm: f64,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::UnsupportedDimension(0))
    } else {
        Ok(())
    }
}

impl ErrorModel {
    pub fn error_free(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            kind: ErrorKind::ErrorFree,
            dim,
            smoothness: SmoothnessClass::ordinary(0.0),
            log_norm: 0.0,
        })
    }

    pub fn laplace(dim: usize, lambda: f64) -> Result<Self> {
        check_dim(dim)?;
        check_positive("Laplace lambda", lambda)?;
        Ok(Self {
            kind: ErrorKind::Laplace { lambda },
            dim,
            smoothness: SmoothnessClass::ordinary(2.0),
            log_norm: 0.0,
        })
    }

    pub fn gaussian(dim: usize, lambda: f64) -> Result<Self> {
        check_dim(dim)?;
        check_positive("Gaussian lambda", lambda)?;
        Ok(Self {
            kind: ErrorKind::Gaussian { lambda },
            dim,
            smoothness: SmoothnessClass {
                scenario: Scenario::S2,
                beta: 2.0,
                alpha: Some(0.0),
                gamma: Some(lambda * lambda / 2.0),
                xi1: None,
                xi2: None,
            },
            log_norm: 0.0,
        })
    }

    /// Rosenthal distribution on `SO(3)`: `theta in (0, pi]`, `p > 0`.
    pub fn rosenthal(dim: usize, theta: f64, p: f64) -> Result<Self> {
        if dim != 2 {
            return Err(Error::UnsupportedModel(format!(
                "Rosenthal distribution is defined on SO(3) only, not SO({})",
                dim + 1
            )));
        }
        if !(theta > 0.0 && theta <= PI) {
            return Err(Error::domain(format!(
                "Rosenthal theta = {theta} outside (0, pi]"
            )));
        }
        check_positive("Rosenthal p", p)?;
        Ok(Self {
            kind: ErrorKind::Rosenthal { theta, p },
            dim,
            smoothness: SmoothnessClass::ordinary(p),
            log_norm: 0.0,
        })
    }

    /// von Mises-Fisher distribution `c^{-1} exp(lambda tr(A^{-1} u))` on
    /// `SO(2)` or `SO(3)`.
    pub fn von_mises_fisher(dim: usize, lambda: f64, mean: Rotation) -> Result<Self> {
        check_positive("von Mises-Fisher lambda", lambda)?;
        if mean.dim() != dim {
            return Err(Error::domain("mean rotation dimension does not match"));
        }
        let (alpha, xi2) = match dim {
            1 => (0.0, 1.0 + (2.0 * lambda).ln()),
            2 => (4.0, 1.0 + (3.0 * lambda).ln()),
            _ => {
                return Err(Error::UnsupportedModel(format!(
                    "von Mises-Fisher on SO({}) is not supported",
                    dim + 1
                )))
            }
        };
        Ok(Self {
            kind: ErrorKind::VonMisesFisher { lambda, mean },
            dim,
            smoothness: SmoothnessClass {
                scenario: Scenario::S3,
                beta: 1.0,
                alpha: Some(alpha),
                gamma: Some(1.0),
                xi1: Some(1.0 + lambda.ln()),
                xi2: Some(xi2),
            },
            log_norm: vmf_log_norm(dim, lambda),
        })
    }

    pub fn kind(&self) -> &ErrorKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn smoothness(&self) -> SmoothnessClass {
        self.smoothness
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ErrorKind::ErrorFree => "error-free",
            ErrorKind::Laplace { .. } => "laplace",
            ErrorKind::Gaussian { .. } => "gaussian",
            ErrorKind::Rosenthal { .. } => "rosenthal",
            ErrorKind::VonMisesFisher { .. } => "vmf",
        }
    }

    /// True when every transform block is a real multiple `s_l` of the
    /// identity.
    pub fn has_scalar_blocks(&self) -> bool {
        !matches!(self.kind, ErrorKind::VonMisesFisher { .. })
    }

    /// The scalar `s_l` with `phi~^l = s_l I`, or `None` for matrix-valued
    /// models.
    pub fn scalar_symbol(&self, l: usize) -> Result<Option<f64>> {
        let lf = l as f64;
        let eig = lf * (lf + self.dim as f64 - 1.0);
        Ok(Some(match self.kind {
            ErrorKind::ErrorFree => 1.0,
            ErrorKind::Laplace { lambda } => 1.0 / (1.0 + lambda * lambda * eig),
            ErrorKind::Gaussian { lambda } => (-lambda * lambda * eig / 2.0).exp(),
            ErrorKind::Rosenthal { theta, p } => {
                let base = rosenthal_base(l, theta);
                if base < 0.0 && p.fract() != 0.0 {
                    return Err(Error::domain(format!(
                        "Rosenthal symbol at degree {l} has negative base {base} and non-integer power {p}"
                    )));
                }
                base.powf(p)
            }
            ErrorKind::VonMisesFisher { .. } => return Ok(None),
        }))
    }

    /// Density of the rotation angle on `SO(2)` with respect to `dphi / 2pi`.
    pub fn so2_density(&self, phi: f64) -> Result<f64> {
        if self.dim != 1 {
            return Err(Error::domain("so2_density needs d = 1"));
        }
        let phi = phi.rem_euclid(TAU);
        match &self.kind {
            ErrorKind::Laplace { lambda } => {
                // Equivalent to the two-exponential form, without overflow.
                let l = *lambda;
                let num = ((PI - phi) / l).cosh();
                let den = (PI / l).sinh();
                if den.is_finite() && num.is_finite() {
                    Ok(PI / l * num / den)
                } else {
                    let d = (phi - PI).abs();
                    Ok(TAU / l * ((d - PI) / l).exp())
                }
            }
            ErrorKind::Gaussian { lambda } => {
                let l = *lambda;
                let s: f64 = (-10..=10)
                    .map(|s| {
                        let a = phi + TAU * s as f64;
                        (-(a * a) / (2.0 * l * l)).exp()
                    })
                    .sum();
                Ok((TAU).sqrt() / l * s)
            }
            ErrorKind::VonMisesFisher { lambda, mean } => {
                let a = mean.circle_angle().unwrap_or(0.0);
                Ok((2.0 * lambda * (phi - a).cos() - self.log_norm).exp())
            }
            ErrorKind::ErrorFree => Err(Error::UnsupportedModel(
                "the error-free model is a point mass without density".into(),
            )),
            ErrorKind::Rosenthal { .. } => unreachable!("Rosenthal is SO(3) only"),
        }
    }

    /// Class-function density on `SO(3)` as a function of the rotation angle
    /// `r in (0, pi]`. Rosenthal and Gaussian series are truncated at
    /// `max_degree` when given.
    pub fn so3_class_density(&self, r: f64, max_degree: Option<usize>) -> Result<f64> {
        if self.dim != 2 {
            return Err(Error::domain("so3_class_density needs d = 2"));
        }
        match &self.kind {
            ErrorKind::Laplace { lambda } => {
                let s = (r / 2.0).sin();
                if s <= 0.0 {
                    return Ok(f64::INFINITY);
                }
                Ok(PI / (lambda * lambda) * laplace_ratio(*lambda, r) / s)
            }
            ErrorKind::Gaussian { .. } => Ok(self.class_series(r, max_degree, 1e-14)),
            ErrorKind::Rosenthal { .. } => match max_degree {
                Some(_) => Ok(self.class_series(r, max_degree, 0.0)),
                None => Err(Error::UnsupportedModel(
                    "the Rosenthal density series needs an explicit truncation degree".into(),
                )),
            },
            ErrorKind::VonMisesFisher { lambda, mean } => {
                let tr = 1.0 + 2.0 * r.cos();
                if *mean == Rotation::identity(2) {
                    Ok((lambda * tr - self.log_norm).exp())
                } else {
                    Err(Error::UnsupportedModel(
                        "von Mises-Fisher with A != I is not a class function".into(),
                    ))
                }
            }
            ErrorKind::ErrorFree => Err(Error::UnsupportedModel(
                "the error-free model is a point mass without density".into(),
            )),
        }
    }

    /// Marginal density of the rotation angle `r` on `[0, pi]` for class
    /// functions on `SO(3)`: `f(r) (1 - cos r) / pi`.
    pub(crate) fn so3_angle_marginal(&self, r: f64) -> Result<f64> {
        match &self.kind {
            ErrorKind::Laplace { lambda } => {
                Ok(2.0 / (lambda * lambda) * laplace_ratio(*lambda, r) * (r / 2.0).sin())
            }
            _ => Ok(self.so3_class_density(r, None)? * (1.0 - r.cos()) / PI),
        }
    }

    /// `sum_l (2l+1) s_l chi_l(r)` with `chi_l(r) = sin((2l+1)r/2) / sin(r/2)`.
    fn class_series(&self, r: f64, max_degree: Option<usize>, cutoff: f64) -> f64 {
        let half = (r / 2.0).sin();
        let mut acc = 0.0;
        let mut l = 0usize;
        loop {
            if let Some(m) = max_degree {
                if l > m {
                    break;
                }
            }
            let s = self.scalar_symbol(l).ok().flatten().unwrap_or(0.0);
            let w = 2.0 * l as f64 + 1.0;
            let chi = if half.abs() < 1e-12 {
                w
            } else {
                ((w * r / 2.0).sin()) / half
            };
            acc += w * s * chi;
            if max_degree.is_none() && (w * w * s.abs() < cutoff || l > 100_000) {
                break;
            }
            l += 1;
        }
        acc
    }

    /// Haar density `f_U(u)` for `d in {1, 2}`. The Rosenthal series is
    /// evaluated through degree `max_degree` when supplied.
    pub fn density(&self, u: &Rotation, max_degree: Option<usize>) -> Result<f64> {
        if u.dim() != self.dim {
            return Err(Error::domain("rotation dimension does not match the model"));
        }
        match self.dim {
            1 => self.so2_density(
                u.circle_angle()
                    .unwrap_or_else(|| u.matrix()[(1, 0)].atan2(u.matrix()[(0, 0)])),
            ),
            2 => match &self.kind {
                ErrorKind::VonMisesFisher { lambda, mean } => {
                    let t = (mean.matrix().transpose() * u.matrix()).trace();
                    Ok((lambda * t - self.log_norm).exp())
                }
                _ => self.so3_class_density(u.rotation_angle(), max_degree),
            },
            d => Err(Error::UnsupportedDimension(d)),
        }
    }
}

pub(crate) fn rosenthal_base(l: usize, theta: f64) -> f64 {
    let w = 2.0 * l as f64 + 1.0;
    let h = (theta / 2.0).sin();
    if h.abs() < 1e-12 {
        1.0
    } else {
        (w * theta / 2.0).sin() / (w * h)
    }
}

/// `cos(a (pi - r)) / cos(a pi)` with `a = sqrt(1/4 - lambda^{-2})`,
/// evaluated in real arithmetic on both branches.
fn laplace_ratio(lambda: f64, r: f64) -> f64 {
    let a2 = 0.25 - 1.0 / (lambda * lambda);
    if a2 >= 0.0 {
        let a = a2.sqrt();
        (a * (PI - r)).cos() / (a * PI).cos()
    } else {
        let b = (-a2).sqrt();
        ((-b * r).exp() + (-b * (TAU - r)).exp()) / (1.0 + (-b * TAU).exp())
    }
}

/// `log int exp(lambda tr u) dmu(u)`, independent of the mean by Haar
/// invariance.
fn vmf_log_norm(dim: usize, lambda: f64) -> f64 {
    let (x, w) = gauss_legendre(200);
    match dim {
        1 => {
            // int exp(2 lambda cos phi) dphi / 2pi
            let s: f64 = x
                .iter()
                .zip(&w)
                .map(|(t, w)| {
                    let phi = PI * (t + 1.0);
                    w * (2.0 * lambda * (phi.cos() - 1.0)).exp()
                })
                .sum();
            2.0 * lambda + (s / 2.0).ln()
        }
        _ => {
            // int exp(lambda (1 + 2 cos r)) (1 - cos r) / pi dr over [0, pi]
            let s: f64 = x
                .iter()
                .zip(&w)
                .map(|(t, w)| {
                    let r = PI * (t + 1.0) / 2.0;
                    w * (lambda * (2.0 * r.cos() - 2.0)).exp() * (1.0 - r.cos())
                })
                .sum();
            3.0 * lambda + (s / 2.0).ln()
        }
    }
}
