use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use sphdecon_core::estimators::{
    density_estimate, regression_estimate, select_t_density, select_t_regression, Dataset,
    DeconvKernel, EstimateGrid,
};
use sphdecon_core::fourier::{ErrorModel, Scenario};
use sphdecon_core::geom::{product_quadrature, Rotation};
use sphdecon_core::inference::{intervals_on_grid, scenario_warning, CiMethod};
use sphdecon_core::simulation::{full_study, mc_study, SimConfig, SimReport, TruncationRule};

use crate::config::{parse_list, parse_t_grid, parse_value, path_value, read_config};
use crate::error::{CliError, CliResult};
use crate::io::{read_observations_file, write_grid, GridRows, IntervalColumns};
use crate::{EstimateArgs, SimulateArgs};

const DEFAULT_T_GRID: &str = "1..10";
const FOLDS: usize = 5;

/// Applies configuration-file values to fields the command line left unset.
fn merge_estimate(mut a: EstimateArgs) -> CliResult<EstimateArgs> {
    let Some(path) = a.config.clone() else {
        return Ok(a);
    };
    for (k, v) in read_config(&path)? {
        match k.as_str() {
            "input" => a.input = a.input.or(Some(path_value(&v))),
            "model" => a.model = a.model.or(Some(v)),
            "lambda" => a.lambda = a.lambda.or(Some(parse_value(&k, &v)?)),
            "theta" => a.theta = a.theta.or(Some(parse_value(&k, &v)?)),
            "p" => a.p = a.p.or(Some(parse_value(&k, &v)?)),
            "T" => a.t = a.t.or(Some(parse_value(&k, &v)?)),
            "T-grid" => a.t_grid = a.t_grid.or(Some(v)),
            "ci" => a.ci = a.ci.or(Some(v)),
            "level" => a.level = a.level.or(Some(parse_value(&k, &v)?)),
            "grid-res" => a.grid_res = a.grid_res.or(Some(parse_value(&k, &v)?)),
            "seed" => a.seed = a.seed.or(Some(parse_value(&k, &v)?)),
            "out" => a.out = a.out.or(Some(path_value(&v))),
            _ => return Err(CliError::Config(format!("unknown key `{k}`"))),
        }
    }
    Ok(a)
}

/// Builds the error model on `S^2`. A zero Laplace or Gaussian parameter
/// means no contamination.
pub fn build_model(
    name: &str,
    lambda: Option<f64>,
    theta: Option<f64>,
    p: Option<f64>,
) -> CliResult<ErrorModel> {
    let need = |v: Option<f64>, what: &str| {
        v.ok_or_else(|| CliError::Config(format!("model `{name}` needs --{what}")))
    };
    let model = match name {
        "error-free" | "none" => ErrorModel::error_free(2),
        "laplace" | "gaussian" => {
            let l = need(lambda, "lambda")?;
            if l == 0.0 {
                ErrorModel::error_free(2)
            } else if name == "laplace" {
                ErrorModel::laplace(2, l)
            } else {
                ErrorModel::gaussian(2, l)
            }
        }
        "rosenthal" => ErrorModel::rosenthal(2, need(theta, "theta")?, need(p, "p")?),
        "vmf" => ErrorModel::von_mises_fisher(2, need(lambda, "lambda")?, Rotation::identity(2)),
        other => return Err(CliError::Config(format!("unknown model `{other}`"))),
    };
    model.map_err(CliError::config)
}

enum Truncation {
    Fixed(f64),
    Grid(Vec<f64>),
}

struct EstimateSetup {
    data: Dataset,
    model: ErrorModel,
    truncation: Truncation,
    ci: Option<CiMethod>,
    level: f64,
    grid_res: usize,
    seed: u64,
    out: Option<PathBuf>,
}

fn setup(args: EstimateArgs, need_y: bool) -> CliResult<EstimateSetup> {
    let a = merge_estimate(args)?;
    let input = a
        .input
        .clone()
        .ok_or_else(|| CliError::Config("--input is required".to_string()))?;
    let model = build_model(
        a.model.as_deref().unwrap_or("error-free"),
        a.lambda,
        a.theta,
        a.p,
    )?;
    let truncation = match (a.t, &a.t_grid) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config("give either --T or --T-grid".to_string()))
        }
        (Some(t), None) if t >= 0.0 && t.is_finite() => Truncation::Fixed(t),
        (Some(t), None) => return Err(CliError::Config(format!("invalid truncation {t}"))),
        (None, g) => Truncation::Grid(parse_t_grid(g.as_deref().unwrap_or(DEFAULT_T_GRID))?),
    };
    let ci = match a.ci.as_deref().unwrap_or("none") {
        "none" => None,
        "an" => Some(CiMethod::An),
        "el" => Some(CiMethod::El),
        other => {
            return Err(CliError::Config(format!(
                "unknown interval method `{other}`"
            )))
        }
    };
    let level = a.level.unwrap_or(0.95);
    if !(level > 0.0 && level < 1.0) {
        return Err(CliError::Config(format!("level {level} outside (0, 1)")));
    }
    let grid_res = a.grid_res.unwrap_or(32);
    if grid_res < 4 {
        return Err(CliError::Config(
            "grid resolution must be at least 4".to_string(),
        ));
    }
    let obs = read_observations_file(&input, need_y)?;
    let data = Dataset::new(obs.points, obs.y).map_err(|e| CliError::Input(e.to_string()))?;
    if ci.is_some() && data.len() < 2 {
        return Err(CliError::Input(
            "intervals need at least 2 observations".to_string(),
        ));
    }
    Ok(EstimateSetup {
        data,
        model,
        truncation,
        ci,
        level,
        grid_res,
        seed: a.seed.unwrap_or(0),
        out: a.out,
    })
}

fn open_out(out: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::Config(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn flags(est: &EstimateGrid) -> Vec<&'static str> {
    est.unstable
        .iter()
        .zip(&est.degenerate)
        .map(|(u, d)| match (u, d) {
            (true, _) => "unstable",
            (false, true) => "degenerate",
            _ => "ok",
        })
        .collect()
}

fn estimate(args: EstimateArgs, regression: bool) -> CliResult<()> {
    let s = setup(args, regression)?;
    let t = match &s.truncation {
        Truncation::Fixed(t) => *t,
        Truncation::Grid(g) => {
            let t = if regression {
                select_t_regression(&s.data, &s.model, g, FOLDS, s.seed)
            } else {
                select_t_density(&s.data, &s.model, g)
            }
            .map_err(CliError::numerical)?;
            eprintln!("selected T = {t}");
            t
        }
    };
    let k = DeconvKernel::from_model(&s.model, t).map_err(CliError::numerical)?;
    let quad = product_quadrature(2, s.grid_res).map_err(CliError::config)?;
    let nodes = quad.nodes();
    let est = match s.ci {
        Some(method) => intervals_on_grid(&s.data, &k, nodes, s.level, method),
        None if regression => regression_estimate(&s.data, &k, nodes),
        None => density_estimate(&s.data, &k, nodes),
    }
    .map_err(CliError::numerical)?;
    if s.ci.is_some() {
        if let Some(w) = scenario_warning(&s.model) {
            eprintln!("warning: {w}");
        }
    }
    if !regression {
        eprintln!("mass = {:.12}", quad.integrate_values(&est.f_hat));
    }
    let unstable = est.unstable.iter().filter(|u| **u).count();
    if unstable > 0 {
        eprintln!("warning: {unstable} nodes have a density estimate below the instability floor");
    }
    let values: &[f64] = if regression {
        est.m_hat.as_deref().unwrap_or(&est.f_hat)
    } else {
        &est.f_hat
    };
    let root_n = (s.data.len() as f64).sqrt();
    let intervals = s.ci.map(|_| {
        let sd = if regression {
            est.s2.as_ref()
        } else {
            est.s1.as_ref()
        };
        IntervalColumns {
            stderr: sd
                .map(|v| v.iter().map(|s| s / root_n).collect())
                .unwrap_or_default(),
            low: est.ci_low.as_deref().unwrap_or(&[]),
            high: est.ci_high.as_deref().unwrap_or(&[]),
            flags: flags(&est),
        }
    });
    let rows = GridRows {
        nodes,
        estimate: values,
        intervals,
    };
    write_grid(open_out(&s.out)?, &rows)
}

pub fn cmd_density(args: EstimateArgs) -> CliResult<()> {
    estimate(args, false)
}

pub fn cmd_regress(args: EstimateArgs) -> CliResult<()> {
    estimate(args, true)
}

fn merge_simulate(mut a: SimulateArgs) -> CliResult<SimulateArgs> {
    let Some(path) = a.config.clone() else {
        return Ok(a);
    };
    for (k, v) in read_config(&path)? {
        match k.as_str() {
            "preset" => a.preset = a.preset.or(Some(v)),
            "scenario" => a.scenario = a.scenario.or(Some(v)),
            "n" => a.n = a.n.or(Some(v)),
            "R" => a.r = a.r.or(Some(parse_value(&k, &v)?)),
            "T" => a.t = a.t.or(Some(parse_value(&k, &v)?)),
            "T-grid" => a.t_grid = a.t_grid.or(Some(v)),
            "level" => a.level = a.level.or(Some(v)),
            "grid-res" => a.grid_res = a.grid_res.or(Some(parse_value(&k, &v)?)),
            "seed" => a.seed = a.seed.or(Some(parse_value(&k, &v)?)),
            "out" => a.out = a.out.or(Some(path_value(&v))),
            _ => return Err(CliError::Config(format!("unknown key `{k}`"))),
        }
    }
    Ok(a)
}

fn parse_scenario(s: &str) -> CliResult<Scenario> {
    match s.trim() {
        "S1" | "s1" => Ok(Scenario::S1),
        "S2" | "s2" => Ok(Scenario::S2),
        "S3" | "s3" => Ok(Scenario::S3),
        other => Err(CliError::Config(format!("unknown scenario `{other}`"))),
    }
}

/// Runs the simulation study. Coverage is computed for the first listed
/// scenario only.
pub fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    let a = merge_simulate(args)?;
    let (mut scenarios, mut ns, mut r) = (vec![Scenario::S1], vec![250], 50);
    match a.preset.as_deref() {
        None => {}
        Some("s1-desk") => {
            scenarios = vec![Scenario::S1, Scenario::S2, Scenario::S3];
            ns = vec![250, 500];
        }
        Some(other) => return Err(CliError::Config(format!("unknown preset `{other}`"))),
    }
    if let Some(s) = &a.scenario {
        scenarios = s.split(',').map(parse_scenario).collect::<CliResult<_>>()?;
    }
    if let Some(n) = &a.n {
        ns = parse_list("n", n)?;
    }
    if let Some(v) = a.r {
        r = v;
    }
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let mut report = SimReport::default();
    for (si, &scenario) in scenarios.iter().enumerate() {
        for &n in &ns {
            let mut cfg = SimConfig::desk(scenario, n);
            cfg.replicates = r;
            if let Some(seed) = a.seed {
                cfg.seed = seed;
            }
            if let Some(res) = a.grid_res {
                cfg.quad_resolution = res;
            }
            if let Some(levels) = &a.level {
                cfg.levels = parse_list("level", levels)?;
            }
            cfg.truncation = match (a.t, &a.t_grid) {
                (Some(_), Some(_)) => {
                    return Err(CliError::Config("give either --T or --T-grid".to_string()))
                }
                (Some(t), None) => TruncationRule::Fixed(t),
                (None, Some(g)) => TruncationRule::Cv {
                    grid: parse_t_grid(g)?,
                    folds: FOLDS,
                },
                (None, None) => cfg.truncation,
            };
            cfg.validate().map_err(CliError::config)?;
            let study = if si == 0 {
                full_study(&cfg)
            } else {
                mc_study(&cfg)
            };
            let rep = study.map_err(CliError::numerical)?;
            eprintln!(
                "{scenario} n={n}: {} replicates, {} failed",
                rep.replicates, rep.failures
            );
            if !rep.is_valid() {
                return Err(CliError::Numerical(format!(
                    "{scenario} n={n}: more than 5% of replicates failed"
                )));
            }
            report.merge(rep);
        }
    }
    std::fs::create_dir_all(&out)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", out.display())))?;
    let write = |name: &str, text: String| {
        let p = out.join(name);
        std::fs::write(&p, text)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display())))
    };
    write("table1.csv", report.table1_csv())?;
    write("table2.csv", report.table2_csv())?;
    write("summary.txt", report.key_values())?;
    Ok(())
}
