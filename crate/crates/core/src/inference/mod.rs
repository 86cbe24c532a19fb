//! Pointwise confidence intervals for the deconvolution density and
//! regression estimators, by asymptotic normality (AN) and by empirical
//! likelihood (EL).
//!
//! Bias is estimated as zero in both constructions.

mod el;
mod quantile;

pub use el::{el_log_ratio, el_profile, ElProfile};
pub use quantile::{chi2_1_critical, normal_cdf, normal_quantile, z_critical};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{instability_floor, Dataset, DeconvKernel, EstimateGrid, KernelRows};
use crate::fourier::{ErrorModel, Scenario};
use crate::geom::SpherePoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiMethod {
    An,
    El,
}

impl std::fmt::Display for CiMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CiMethod::An => "AN",
            CiMethod::El => "EL",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceInterval {
    pub center: Option<f64>,
    pub low: f64,
    pub high: f64,
    pub level: f64,
    pub method: CiMethod,
    pub degenerate: bool,
}

impl ConfidenceInterval {
    pub fn length(&self) -> f64 {
        self.high - self.low
    }

    pub fn contains(&self, v: f64) -> bool {
        self.low <= v && v <= self.high
    }
}

/// Warning for error models outside the ordinary-smooth scenario, where the
/// interval theory is not established.
pub fn scenario_warning(model: &ErrorModel) -> Option<String> {
    match model.smoothness().scenario {
        Scenario::S1 => None,
        s => Some(format!(
            "interval theory covers ordinary-smooth errors only; the {} model is in scenario {s}",
            model.name()
        )),
    }
}

fn mean(v: impl Iterator<Item = f64>, n: usize) -> f64 {
    v.sum::<f64>() / n as f64
}

/// AN interval for `f_X(x)` from the kernel row `Re K_T(x, Z_i)`.
pub(crate) fn an_density_from_row(row: &[f64], z: f64) -> (f64, f64, ConfidenceInterval) {
    let n = row.len();
    let f = mean(row.iter().copied(), n);
    let s2 = mean(row.iter().map(|r| r * r), n) - f * f;
    let degenerate = s2 <= 0.0;
    let s = s2.max(0.0).sqrt();
    let half = z * s / (n as f64).sqrt();
    let ci = ConfidenceInterval {
        center: Some(f),
        low: f - half,
        high: f + half,
        level: 0.0,
        method: CiMethod::An,
        degenerate,
    };
    (f, s, ci)
}

/// AN interval for `m(x)`; returns `(f^, m^, s2, interval)`.
pub(crate) fn an_regression_from_row(
    row: &[f64],
    y: &[f64],
    z: f64,
    floor: f64,
) -> (f64, f64, f64, ConfidenceInterval) {
    let n = row.len();
    let f = mean(row.iter().copied(), n);
    let g = mean(row.iter().zip(y).map(|(r, y)| r * y), n);
    let m = g / f;
    let resid: Vec<f64> = row.iter().zip(y).map(|(r, y)| r * (y - m)).collect();
    let cross = mean(resid.iter().copied(), n);
    let scale = mean(resid.iter().map(|v| v.abs()), n).max(1.0);
    let mut s2 = mean(resid.iter().map(|v| v * v), n);
    if cross.abs() > 1e-9 * scale {
        // the simplified form needs sum Re K (Y - m^) = 0
        s2 -= cross * cross;
    }
    s2 /= f * f;
    let unstable = f.abs() < floor || !m.is_finite();
    let s = if s2.is_finite() {
        s2.max(0.0).sqrt()
    } else {
        0.0
    };
    let half = z * s / (n as f64).sqrt();
    let ci = ConfidenceInterval {
        center: Some(m),
        low: m - half,
        high: m + half,
        level: 0.0,
        method: CiMethod::An,
        degenerate: unstable || s == 0.0,
    };
    (f, m, s, ci)
}

fn el_from(
    f: el::AffineF<'_>,
    center: f64,
    sd: f64,
    n: usize,
    crit: f64,
) -> Result<ConfidenceInterval> {
    let step = if sd > 0.0 && sd.is_finite() {
        sd / (n as f64).sqrt()
    } else {
        1e-8 * (1.0 + center.abs())
    };
    let at_center = f.deviance(center)?.0;
    let (low, lb) = f.endpoint(center, step, -1.0, crit)?;
    let (high, hb) = f.endpoint(center, step, 1.0, crit)?;
    Ok(ConfidenceInterval {
        center: Some(center),
        low,
        high,
        level: 0.0,
        method: CiMethod::El,
        degenerate: at_center.is_infinite() || lb || hb,
    })
}

pub(crate) fn el_density_from_row(row: &[f64], crit: f64) -> Result<ConfidenceInterval> {
    let (f, s, _) = an_density_from_row(row, 0.0);
    let ones = vec![1.0; row.len()];
    el_from(el::AffineF { a: row, b: &ones }, f, s, row.len(), crit)
}

pub(crate) fn el_regression_from_row(
    row: &[f64],
    y: &[f64],
    crit: f64,
    floor: f64,
) -> Result<ConfidenceInterval> {
    let (f, m, s, _) = an_regression_from_row(row, y, 0.0, floor);
    if !m.is_finite() {
        return Ok(ConfidenceInterval {
            center: Some(m),
            low: m,
            high: m,
            level: 0.0,
            method: CiMethod::El,
            degenerate: true,
        });
    }
    let ry: Vec<f64> = row.iter().zip(y).map(|(r, y)| r * y).collect();
    let mut ci = el_from(el::AffineF { a: &ry, b: row }, m, s, row.len(), crit)?;
    ci.degenerate |= f.abs() < floor;
    Ok(ci)
}

fn check_n(data: &Dataset) -> Result<()> {
    if data.len() < 2 {
        return Err(Error::domain("intervals need at least 2 observations"));
    }
    Ok(())
}

/// AN interval `f^_X(x) +- z_{alpha/2} s1(x) / sqrt(n)`.
pub fn an_interval_density(
    data: &Dataset,
    k: &DeconvKernel,
    x: &SpherePoint,
    level: f64,
) -> Result<ConfidenceInterval> {
    check_n(data)?;
    let z = z_critical(level)?;
    let row = KernelRows::new(k, data)?.row(x)?;
    let mut ci = an_density_from_row(&row, z).2;
    ci.level = level;
    Ok(ci)
}

/// AN interval `m^(x) +- z_{alpha/2} s2(x) / sqrt(n)`.
pub fn an_interval_regression(
    data: &Dataset,
    k: &DeconvKernel,
    x: &SpherePoint,
    level: f64,
) -> Result<ConfidenceInterval> {
    check_n(data)?;
    let y = data.require_y()?;
    let z = z_critical(level)?;
    let row = KernelRows::new(k, data)?.row(x)?;
    let mut ci = an_regression_from_row(&row, y, z, instability_floor(data.dim())).3;
    ci.level = level;
    Ok(ci)
}

/// EL interval `{theta : -2 log EL_f(theta; x) <= chi^2_alpha(1)}`.
pub fn el_interval_density(
    data: &Dataset,
    k: &DeconvKernel,
    x: &SpherePoint,
    level: f64,
) -> Result<ConfidenceInterval> {
    check_n(data)?;
    let crit = chi2_1_critical(level)?;
    let row = KernelRows::new(k, data)?.row(x)?;
    let mut ci = el_density_from_row(&row, crit)?;
    ci.level = level;
    Ok(ci)
}

/// EL interval `{theta : -2 log EL_m(theta; x) <= chi^2_alpha(1)}`.
pub fn el_interval_regression(
    data: &Dataset,
    k: &DeconvKernel,
    x: &SpherePoint,
    level: f64,
) -> Result<ConfidenceInterval> {
    check_n(data)?;
    let y = data.require_y()?;
    let crit = chi2_1_critical(level)?;
    let row = KernelRows::new(k, data)?.row(x)?;
    let mut ci = el_regression_from_row(&row, y, crit, instability_floor(data.dim()))?;
    ci.level = level;
    Ok(ci)
}

/// Point estimates with intervals at every grid node. Regression
/// intervals are built when the data carry responses, density intervals
/// otherwise.
pub fn intervals_on_grid(
    data: &Dataset,
    k: &DeconvKernel,
    grid: &[SpherePoint],
    level: f64,
    method: CiMethod,
) -> Result<EstimateGrid> {
    check_n(data)?;
    let z = z_critical(level)?;
    let crit = chi2_1_critical(level)?;
    let floor = instability_floor(data.dim());
    let rows = KernelRows::new(k, data)?;
    let y = data.y();
    let per_node: Vec<(f64, Option<f64>, f64, Option<f64>, ConfidenceInterval, bool)> = grid
        .par_iter()
        .map(|x| {
            let row = rows.row(x)?;
            let (f, s1, an_f) = an_density_from_row(&row, z);
            match y {
                None => {
                    let ci = match method {
                        CiMethod::An => an_f,
                        CiMethod::El => el_density_from_row(&row, crit)?,
                    };
                    Ok((f, None, s1, None, ci, false))
                }
                Some(y) => {
                    let (_, m, s2, an_m) = an_regression_from_row(&row, y, z, floor);
                    let ci = match method {
                        CiMethod::An => an_m,
                        CiMethod::El => el_regression_from_row(&row, y, crit, floor)?,
                    };
                    Ok((f, Some(m), s1, Some(s2), ci, f.abs() < floor))
                }
            }
        })
        .collect::<Result<_>>()?;
    let has_y = y.is_some();
    Ok(EstimateGrid {
        nodes: grid.to_vec(),
        f_hat: per_node.iter().map(|v| v.0).collect(),
        m_hat: has_y.then(|| per_node.iter().map(|v| v.1.unwrap()).collect()),
        s1: Some(per_node.iter().map(|v| v.2).collect()),
        s2: has_y.then(|| per_node.iter().map(|v| v.3.unwrap()).collect()),
        ci_low: Some(per_node.iter().map(|v| v.4.low).collect()),
        ci_high: Some(per_node.iter().map(|v| v.4.high).collect()),
        unstable: per_node.iter().map(|v| v.5).collect(),
        degenerate: per_node.iter().map(|v| v.4.degenerate).collect(),
        warning: scenario_warning(k.blocks().model()),
    })
}
