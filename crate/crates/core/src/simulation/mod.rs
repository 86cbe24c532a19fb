//! Monte Carlo harness for the regression estimators: data generation,
//! integrated squared bias / variance / mean squared error, and coverage
//! and length of pointwise intervals.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{cv_regression_curve, regression_estimate, Dataset, DeconvKernel};
use crate::fourier::{transform_blocks, ErrorKind, ErrorModel, Scenario, TransformBlocks};
use crate::geom::{
    derive_seed, fibonacci_grid, product_quadrature, sample_error, sample_vmf_sphere, Rotation,
    SpherePoint,
};
use crate::inference::{intervals_on_grid, CiMethod};

/// Truncation rule used in every replicate.
#[derive(Debug, Clone, PartialEq)]
pub enum TruncationRule {
    /// K-fold regression cross-validation over the grid.
    Cv {
        grid: Vec<f64>,
        folds: usize,
    },
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub label: String,
    pub model: ErrorModel,
    pub n: usize,
    pub replicates: usize,
    pub truncation: TruncationRule,
    /// Product-quadrature resolution for the integrated criteria.
    pub quad_resolution: usize,
    /// Number of Fibonacci nodes for coverage averaging.
    pub grid_size: usize,
    pub levels: Vec<f64>,
    pub seed: u64,
    pub x_concentration: f64,
    pub x_mean: SpherePoint,
    pub noise_sd: f64,
}

/// Error model of a named scenario: Laplace(0.5), Gaussian(0.5) or
/// von Mises-Fisher(2, I) on `SO(3)`.
pub fn scenario_model(scenario: Scenario) -> ErrorModel {
    match scenario {
        Scenario::S1 => ErrorModel::laplace(2, 0.5),
        Scenario::S2 => ErrorModel::gaussian(2, 0.5),
        Scenario::S3 => ErrorModel::von_mises_fisher(2, 2.0, Rotation::identity(2)),
    }
    .expect("valid scenario parameters")
}

impl SimConfig {
    /// Desk-scale defaults: `R = 50`, quadrature resolution 24, 400 grid
    /// nodes, 5-fold CV over `T = 1..=10`.
    pub fn desk(scenario: Scenario, n: usize) -> Self {
        Self {
            label: scenario.to_string(),
            model: scenario_model(scenario),
            n,
            replicates: 50,
            truncation: TruncationRule::Cv {
                grid: (1..=10).map(|t| t as f64).collect(),
                folds: 5,
            },
            quad_resolution: 24,
            grid_size: 400,
            levels: vec![0.90, 0.95],
            seed: 20240601,
            x_concentration: 0.1,
            x_mean: SpherePoint::from_coords(vec![1.0, 1.0, 1.0]).expect("nonzero"),
            noise_sd: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.model.dim() != 2 || self.x_mean.dim() != 2 {
            return Err(Error::UnsupportedDimension(self.model.dim()));
        }
        if self.replicates < 2 {
            return Err(Error::domain("need at least 2 replicates"));
        }
        if self.n < 10 {
            return Err(Error::domain("need n >= 10"));
        }
        if let TruncationRule::Cv { grid, folds } = &self.truncation {
            if grid.is_empty() || *folds < 2 || *folds > self.n {
                return Err(Error::domain("invalid cross-validation settings"));
            }
        }
        if self.grid_size == 0 {
            return Err(Error::domain("coverage grid is empty"));
        }
        if self.levels.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
            return Err(Error::domain("levels must lie in (0, 1)"));
        }
        if !(self.noise_sd >= 0.0) || !(self.x_concentration >= 0.0) {
            return Err(Error::domain("noise and concentration must be >= 0"));
        }
        Ok(())
    }

    fn max_degree(&self) -> usize {
        match &self.truncation {
            TruncationRule::Cv { grid, .. } => {
                grid.iter().fold(0.0f64, |a, b| a.max(*b)).floor() as usize
            }
            TruncationRule::Fixed(t) => t.floor() as usize,
        }
    }
}

/// True regression function `m(x) = x_0 + x_1 + x_2`.
pub fn true_regression(x: &SpherePoint) -> f64 {
    x.coords().iter().sum()
}

/// One simulated sample with its latent directions.
#[derive(Debug, Clone)]
pub struct Replicate {
    pub x: Vec<SpherePoint>,
    pub data: Dataset,
}

pub fn generate_replicate(cfg: &SimConfig, r: usize) -> Result<Replicate> {
    if r >= cfg.replicates {
        return Err(Error::domain(format!("replicate {r} out of range")));
    }
    let r = r as u64;
    let x = sample_vmf_sphere(
        &cfg.x_mean,
        cfg.x_concentration,
        cfg.n,
        derive_seed(cfg.seed, r, 0),
    )?;
    let u = sample_error(&cfg.model, cfg.n, derive_seed(cfg.seed, r, 1))?;
    let noise = Normal::new(0.0, cfg.noise_sd).map_err(|e| Error::domain(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, r, 2));
    let y = x
        .iter()
        .map(|p| true_regression(p) + noise.sample(&mut rng))
        .collect();
    let z = match cfg.model.kind() {
        ErrorKind::ErrorFree => x.clone(),
        _ => x
            .iter()
            .zip(&u)
            .map(|(x, u)| u.apply(x))
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(Replicate {
        x,
        data: Dataset::new(z, Some(y))?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImseRow {
    pub scenario: String,
    pub n: usize,
    pub estimator: String,
    pub isb: f64,
    pub iv: f64,
    pub imse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub level: f64,
    pub n: usize,
    pub method: CiMethod,
    pub coverage: f64,
    /// Average over intervals with finite length.
    pub length: f64,
    /// Fraction of intervals flagged degenerate or unbounded.
    pub flagged: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimReport {
    pub imse: Vec<ImseRow>,
    pub coverage: Vec<CoverageRow>,
    pub replicates: usize,
    pub failures: usize,
    /// Selected truncation per successful replicate: (deconvolution, naive).
    pub selected_t: Vec<(f64, f64)>,
}

impl SimReport {
    /// More than 5% of replicates failed.
    pub fn is_valid(&self) -> bool {
        self.failures * 20 <= self.replicates
    }

    pub fn merge(&mut self, other: SimReport) {
        self.imse.extend(other.imse);
        self.coverage.extend(other.coverage);
        self.replicates += other.replicates;
        self.failures += other.failures;
        self.selected_t.extend(other.selected_t);
    }

    pub fn table1_csv(&self) -> String {
        let mut s = String::from("scenario,n,estimator,ISB,IV,IMSE\n");
        for r in &self.imse {
            let _ = writeln!(
                s,
                "{},{},{},{:.16e},{:.16e},{:.16e}",
                r.scenario, r.n, r.estimator, r.isb, r.iv, r.imse
            );
        }
        s
    }

    pub fn table2_csv(&self) -> String {
        let mut s = String::from("level,n,method,coverage,length\n");
        for r in &self.coverage {
            let _ = writeln!(
                s,
                "{},{},{},{:.16e},{:.16e}",
                r.level, r.n, r.method, r.coverage, r.length
            );
        }
        s
    }

    /// Flat `key = value` summary.
    pub fn key_values(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "replicates = {}", self.replicates);
        let _ = writeln!(s, "failures = {}", self.failures);
        let _ = writeln!(s, "valid = {}", self.is_valid());
        for r in &self.imse {
            let key = format!("{}.n{}.{}", r.scenario, r.n, r.estimator);
            let _ = writeln!(s, "{key}.isb = {:.16e}", r.isb);
            let _ = writeln!(s, "{key}.iv = {:.16e}", r.iv);
            let _ = writeln!(s, "{key}.imse = {:.16e}", r.imse);
        }
        for r in &self.coverage {
            let key = format!("level{}.n{}.{}", r.level, r.n, r.method);
            let _ = writeln!(s, "{key}.coverage = {:.16e}", r.coverage);
            let _ = writeln!(s, "{key}.length = {:.16e}", r.length);
            let _ = writeln!(s, "{key}.flagged = {:.16e}", r.flagged);
        }
        s
    }
}

/// ISB, IV and IMSE from per-replicate estimates on quadrature nodes.
pub fn integrated_errors(
    estimates: &[Vec<f64>],
    truth: &[f64],
    weights: &[f64],
) -> (f64, f64, f64) {
    let r = estimates.len() as f64;
    let mean: Vec<f64> = (0..truth.len())
        .map(|j| estimates.iter().map(|e| e[j]).sum::<f64>() / r)
        .collect();
    let isb = weights
        .iter()
        .zip(mean.iter().zip(truth))
        .map(|(w, (m, t))| w * (m - t).powi(2))
        .sum();
    let iv = estimates
        .iter()
        .map(|e| {
            weights
                .iter()
                .zip(e.iter().zip(&mean))
                .map(|(w, (v, m))| w * (m - v).powi(2))
                .sum::<f64>()
        })
        .sum::<f64>()
        / r;
    let imse = estimates
        .iter()
        .map(|e| {
            weights
                .iter()
                .zip(e.iter().zip(truth))
                .map(|(w, (v, t))| w * (v - t).powi(2))
                .sum::<f64>()
        })
        .sum::<f64>()
        / r;
    (isb, iv, imse)
}

struct Shared {
    blocks: Arc<TransformBlocks>,
    naive: Arc<TransformBlocks>,
}

fn select(
    cfg: &SimConfig,
    data: &Dataset,
    blocks: &Arc<TransformBlocks>,
    r: usize,
    stream: u64,
) -> Result<f64> {
    match &cfg.truncation {
        TruncationRule::Fixed(t) => Ok(*t),
        TruncationRule::Cv { grid, folds } => Ok(cv_regression_curve(
            data,
            blocks.clone(),
            grid,
            *folds,
            derive_seed(cfg.seed, r as u64, stream),
        )?
        .selected),
    }
}

struct ReplicateOutput {
    t: (f64, f64),
    m_hat: Vec<f64>,
    m_naive: Vec<f64>,
    // per level, per method: (covered, finite length, flagged) per node
    intervals: Vec<Vec<(bool, f64, bool)>>,
}

fn run_replicate(
    cfg: &SimConfig,
    shared: &Shared,
    r: usize,
    quad_nodes: Option<&[SpherePoint]>,
    grid: Option<&[SpherePoint]>,
) -> Result<ReplicateOutput> {
    let rep = generate_replicate(cfg, r)?;
    let t = select(cfg, &rep.data, &shared.blocks, r, 3)?;
    let k = DeconvKernel::new(shared.blocks.clone(), t)?;
    let mut out = ReplicateOutput {
        t: (t, f64::NAN),
        m_hat: Vec::new(),
        m_naive: Vec::new(),
        intervals: Vec::new(),
    };
    if let Some(nodes) = quad_nodes {
        let tn = select(cfg, &rep.data, &shared.naive, r, 4)?;
        let kn = DeconvKernel::new(shared.naive.clone(), tn)?;
        out.t.1 = tn;
        out.m_hat = regression_estimate(&rep.data, &k, nodes)?
            .m_hat
            .unwrap_or_default();
        out.m_naive = regression_estimate(&rep.data, &kn, nodes)?
            .m_hat
            .unwrap_or_default();
        if out.m_hat.iter().chain(&out.m_naive).any(|v| !v.is_finite()) {
            return Err(Error::domain("non-finite regression estimate"));
        }
    }
    if let Some(grid) = grid {
        let truth: Vec<f64> = grid.iter().map(true_regression).collect();
        for &level in &cfg.levels {
            for method in [CiMethod::An, CiMethod::El] {
                let est = intervals_on_grid(&rep.data, &k, grid, level, method)?;
                let (lo, hi) = (
                    est.ci_low.unwrap_or_default(),
                    est.ci_high.unwrap_or_default(),
                );
                out.intervals.push(
                    (0..grid.len())
                        .map(|i| {
                            let covered = lo[i] <= truth[i] && truth[i] <= hi[i];
                            (covered, hi[i] - lo[i], est.degenerate[i] || est.unstable[i])
                        })
                        .collect(),
                );
            }
        }
    }
    Ok(out)
}

fn run(cfg: &SimConfig, want_imse: bool, want_coverage: bool) -> Result<SimReport> {
    cfg.validate()?;
    let lmax = cfg.max_degree();
    let shared = Shared {
        blocks: Arc::new(transform_blocks(&cfg.model, lmax)?),
        naive: Arc::new(transform_blocks(&ErrorModel::error_free(2)?, lmax)?),
    };
    let quad = product_quadrature(2, cfg.quad_resolution)?;
    let grid = fibonacci_grid(cfg.grid_size);
    let outputs: Vec<Result<ReplicateOutput>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            run_replicate(
                cfg,
                &shared,
                r,
                want_imse.then(|| quad.nodes()),
                want_coverage.then_some(grid.as_slice()),
            )
        })
        .collect();
    let ok: Vec<ReplicateOutput> = outputs.into_iter().filter_map(|o| o.ok()).collect();
    let mut report = SimReport {
        replicates: cfg.replicates,
        failures: cfg.replicates - ok.len(),
        selected_t: ok.iter().map(|o| o.t).collect(),
        ..Default::default()
    };
    if ok.is_empty() {
        return Err(Error::domain("every replicate failed"));
    }
    if want_imse {
        let truth: Vec<f64> = quad.nodes().iter().map(true_regression).collect();
        for (name, pick) in [("deconvolution", 0), ("naive", 1)] {
            let est: Vec<Vec<f64>> = ok
                .iter()
                .map(|o| {
                    if pick == 0 {
                        o.m_hat.clone()
                    } else {
                        o.m_naive.clone()
                    }
                })
                .collect();
            let (isb, iv, imse) = integrated_errors(&est, &truth, quad.weights());
            report.imse.push(ImseRow {
                scenario: cfg.label.clone(),
                n: cfg.n,
                estimator: name.to_string(),
                isb,
                iv,
                imse,
            });
        }
    }
    if want_coverage {
        let mut idx = 0;
        for &level in &cfg.levels {
            for method in [CiMethod::An, CiMethod::El] {
                let (mut cov, mut len, mut nlen, mut flagged, mut total) =
                    (0.0, 0.0, 0usize, 0usize, 0usize);
                for o in &ok {
                    for &(c, l, f) in &o.intervals[idx] {
                        total += 1;
                        cov += c as u8 as f64;
                        flagged += f as usize;
                        if l.is_finite() {
                            len += l;
                            nlen += 1;
                        }
                    }
                }
                report.coverage.push(CoverageRow {
                    level,
                    n: cfg.n,
                    method,
                    coverage: cov / total as f64,
                    length: if nlen > 0 {
                        len / nlen as f64
                    } else {
                        f64::INFINITY
                    },
                    flagged: flagged as f64 / total as f64,
                });
                idx += 1;
            }
        }
    }
    Ok(report)
}

/// ISB, IV and IMSE of the deconvolution and naive regression estimators.
pub fn mc_study(cfg: &SimConfig) -> Result<SimReport> {
    run(cfg, true, false)
}

/// Grid-averaged coverage and length of AN and EL intervals for `m`.
pub fn coverage_study(cfg: &SimConfig) -> Result<SimReport> {
    run(cfg, false, true)
}

/// Both studies from the same replicates.
pub fn full_study(cfg: &SimConfig) -> Result<SimReport> {
    run(cfg, true, true)
}
