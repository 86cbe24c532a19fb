//! Acceptance suite. Each test prints one `A# PASS|FAIL` line followed by
//! the individual checks.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sphdecon_core::estimators::{density_estimate, kernel_star_eval, Dataset, DeconvKernel};
use sphdecon_core::fourier::{big_d_matrices, convolve_check, ErrorKind, ErrorModel, Scenario};
use sphdecon_core::geom::{
    product_quadrature, sample_error, sample_haar_so3, sample_vmf_sphere,
    so3_axis_angle_quadrature, so3_quadrature, Rotation, SpherePoint,
};
use sphdecon_core::harmonics::{eval_basis, legendre_dim, n_dl, wigner_small_d};
use sphdecon_core::inference::{el_log_ratio, CiMethod};
use sphdecon_core::simulation::{full_study, mc_study, SimConfig, SimReport};
use sphdecon_core::Complex64;

struct Checks {
    name: &'static str,
    lines: Vec<(bool, String)>,
    start: Instant,
}

impl Checks {
    fn new(name: &'static str) -> Self {
        Checks {
            name,
            lines: Vec::new(),
            start: Instant::now(),
        }
    }

    fn check(&mut self, ok: bool, detail: String) {
        self.lines.push((ok, detail));
    }

    fn finish(self, budget_secs: f64) {
        let secs = self.start.elapsed().as_secs_f64();
        let mut lines = self.lines;
        lines.push((
            secs < budget_secs,
            format!("runtime {secs:.1} s (budget {budget_secs} s)"),
        ));
        let ok = lines.iter().all(|(ok, _)| *ok);
        println!("{} {}", self.name, if ok { "PASS" } else { "FAIL" });
        for (ok, line) in &lines {
            println!("  [{}] {line}", if *ok { "pass" } else { "FAIL" });
        }
        assert!(ok, "{} failed", self.name);
    }
}

fn max_dev(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn random_point(rng: &mut ChaCha8Rng) -> SpherePoint {
    let v: Vec<f64> = (0..3).map(|_| rng.random::<f64>() - 0.5).collect();
    SpherePoint::from_coords(v).unwrap()
}

fn a1_models() -> Vec<ErrorModel> {
    vec![
        ErrorModel::laplace(2, 0.5).unwrap(),
        ErrorModel::gaussian(2, 0.4).unwrap(),
        ErrorModel::rosenthal(2, 0.6, 2.0).unwrap(),
        ErrorModel::von_mises_fisher(2, 3.0, Rotation::from_euler(0.7, 1.1, 2.5).unwrap()).unwrap(),
    ]
}

fn rotation_rule(model: &ErrorModel) -> sphdecon_core::geom::RotationQuadrature {
    match model.kind() {
        ErrorKind::VonMisesFisher { .. } => so3_quadrature(24).unwrap(),
        _ => so3_axis_angle_quadrature(24).unwrap(),
    }
}

#[test]
fn a1_property_suite() {
    let mut c = Checks::new("A1");
    let mut rng = ChaCha8Rng::seed_from_u64(2024);

    for d in [1usize, 2] {
        let quad = product_quadrature(d, 32).unwrap();
        let vals: Vec<Vec<Complex64>> = quad
            .nodes()
            .iter()
            .map(|x| {
                (0..=12)
                    .flat_map(|l| eval_basis(d, l, x).unwrap())
                    .collect()
            })
            .collect();
        let m = vals[0].len();
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let g: Complex64 = vals
                    .iter()
                    .zip(quad.weights())
                    .map(|(v, w)| v[i] * v[j].conj() * *w)
                    .sum();
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - want).norm());
            }
        }
        c.check(
            worst < 1e-8,
            format!("orthonormality d={d}, l <= 12: max Gram deviation {worst:.2e}"),
        );
    }

    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let theta = rng.random::<f64>() * PI;
        for l in 0..=12 {
            let w = wigner_small_d(l, theta).unwrap();
            let n = w.size();
            let m = DMatrix::from_fn(n, n, |i, j| w.get(i + 1, j + 1));
            worst = worst.max((&m * m.transpose() - DMatrix::identity(n, n)).abs().max());
        }
    }
    let u = sample_haar_so3(&mut rng);
    for (l, dl) in big_d_matrices(2, 12, &u).unwrap().iter().enumerate() {
        let n = 2 * l + 1;
        worst = worst.max(max_dev(&(dl * dl.adjoint()), &DMatrix::identity(n, n)));
    }
    c.check(
        worst < 1e-10,
        format!("Wigner and D unitarity, l <= 12: {worst:.2e}"),
    );

    let mut worst: f64 = 0.0;
    for d in [1usize, 2] {
        for _ in 0..5 {
            let (u, v) = if d == 1 {
                (
                    Rotation::from_angle(rng.random::<f64>() * 6.0),
                    Rotation::from_angle(rng.random::<f64>() * 6.0),
                )
            } else {
                (sample_haar_so3(&mut rng), sample_haar_so3(&mut rng))
            };
            let du = big_d_matrices(d, 10, &u).unwrap();
            let dv = big_d_matrices(d, 10, &v).unwrap();
            let duv = big_d_matrices(d, 10, &u.compose(&v).unwrap()).unwrap();
            for l in 0..=10 {
                worst = worst.max(max_dev(&(&du[l] * &dv[l]), &duv[l]));
            }
        }
    }
    c.check(
        worst < 1e-9,
        format!("representation property D(uv) = D(u) D(v): {worst:.2e}"),
    );

    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let (x, y) = (random_point(&mut rng), random_point(&mut rng));
        for l in 0..=12 {
            let s: Complex64 = eval_basis(2, l, &x)
                .unwrap()
                .iter()
                .zip(eval_basis(2, l, &y).unwrap())
                .map(|(a, b)| a * b.conj())
                .sum();
            let want = n_dl(2, l) as f64 / (4.0 * PI) * legendre_dim(l, 3, x.dot(&y));
            worst = worst.max((s - want).norm());
        }
    }
    c.check(
        worst < 1e-10,
        format!("addition identity, l <= 12: {worst:.2e}"),
    );

    let quad = product_quadrature(2, 16).unwrap();
    let mut worst: f64 = 0.0;
    for model in a1_models() {
        for t in [0.0, 2.5, 6.0] {
            let k = DeconvKernel::from_model(&model, t).unwrap();
            let z = random_point(&mut rng);
            let mass = quad.integrate(|x| k.eval_re(x, &z).unwrap());
            worst = worst.max((mass - 1.0).abs());
        }
    }
    c.check(
        worst < 1e-8,
        format!("kernel mass: max |mass - 1| = {worst:.2e}"),
    );

    let t = 4.0;
    let mut worst: f64 = 0.0;
    for model in a1_models() {
        let k = DeconvKernel::from_model(&model, t).unwrap();
        let rot = rotation_rule(&model);
        let (x, xs) = (random_point(&mut rng), random_point(&mut rng));
        let mut acc = Complex64::new(0.0, 0.0);
        rot.for_each(|u, w| {
            let g = model.density(u, Some(t as usize)).unwrap();
            acc += k.eval(&x, &u.apply(&xs).unwrap()).unwrap() * (w * g);
        });
        worst = worst.max((acc - kernel_star_eval(2, t, &x, &xs).unwrap()).norm());
    }
    c.check(
        worst < 1e-6,
        format!("unbiased scoring by SO(3) quadrature: {worst:.2e}"),
    );

    let f = |x: &SpherePoint| (2.0 * x.coords()[2]).exp() * (1.0 + 0.3 * x.coords()[0]);
    let mut worst: f64 = 0.0;
    for model in a1_models() {
        let dev = convolve_check(&model, f, &quad, &rotation_rule(&model), 5).unwrap();
        worst = worst.max(dev);
    }
    c.check(worst < 1e-6, format!("convolution identity: {worst:.2e}"));

    // energy identity with only the order-zero term d^l_00(theta_x)^2 on the right, at generic x
    let equad = product_quadrature(2, 20).unwrap();
    let (mut worst_zonal, mut worst_full, mut min_energy): (f64, f64, f64) =
        (0.0, 0.0, f64::INFINITY);
    for model in [
        ErrorModel::laplace(2, 0.5).unwrap(),
        ErrorModel::gaussian(2, 0.3).unwrap(),
    ] {
        let k = DeconvKernel::from_model(&model, 6.0).unwrap();
        for _ in 0..3 {
            let x = random_point(&mut rng);
            let theta_x = x.thetas()[0];
            let energy = equad.integrate(|z| {
                let v = k.eval(&x, z).unwrap();
                v.re * v.re - v.im * v.im
            });
            let (mut zonal, mut full) = (0.0, 0.0);
            for l in 0..=6usize {
                let s = model.scalar_symbol(l).unwrap().unwrap();
                let d00 = wigner_small_d(l, theta_x).unwrap().get(l + 1, l + 1);
                let w = (2 * l + 1) as f64 / (4.0 * PI * s * s);
                zonal += d00 * d00 * w;
                full += w;
            }
            worst_zonal = worst_zonal.max((energy - zonal).abs());
            worst_full = worst_full.max((energy - full).abs());
            min_energy = min_energy.min(energy);
        }
    }
    c.check(
        worst_zonal < 1e-7,
        format!(
            "energy identity, right-hand side d^l_00(theta_x)^2: max deviation {worst_zonal:.3e}"
        ),
    );
    c.check(
        worst_full < 1e-7,
        format!("energy identity, right-hand side summed over all orders: max deviation {worst_full:.2e}"),
    );
    c.check(
        min_energy >= 0.0,
        format!("energy nonnegative: min {min_energy:.4}"),
    );

    let mut worst: f64 = 0.0;
    let mut cases = vec![vec![3.0, -1.0, -1.0, -1.0]];
    for _ in 0..5 {
        cases.push((0..30).map(|_| rng.random::<f64>() * 2.0 - 0.6).collect());
    }
    for f in &cases {
        let (_, lambda) = el_log_ratio(f).unwrap();
        let lambda = lambda.unwrap();
        let (fmax, fmin) = f
            .iter()
            .fold((f64::MIN, f64::MAX), |(a, b), v| (a.max(*v), b.min(*v)));
        let score = |l: f64| f.iter().map(|v| v / (1.0 + l * v)).sum::<f64>();
        let n = f.len() as f64;
        let (mut lo, mut hi) = ((1.0 / n - 1.0) / fmax, (1.0 / n - 1.0) / fmin);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if score(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        worst = worst.max((lambda - 0.5 * (lo + hi)).abs());
    }
    c.check(
        worst < 1e-8,
        format!("EL multiplier vs bisection on the estimating equation: {worst:.2e}"),
    );

    c.finish(120.0);
}

fn imse(report: &SimReport, label: &str, n: usize, estimator: &str) -> (f64, f64) {
    let r = report
        .imse
        .iter()
        .find(|r| r.scenario == label && r.n == n && r.estimator == estimator)
        .expect("row present");
    (r.isb, r.imse)
}

#[test]
fn a2_integrated_errors() {
    let mut c = Checks::new("A2");
    let mut report = SimReport::default();
    let cfg = SimConfig::desk(Scenario::S1, 250);
    report.merge(mc_study(&cfg).unwrap());
    for s in [Scenario::S1, Scenario::S2, Scenario::S3] {
        report.merge(mc_study(&SimConfig::desk(s, 500)).unwrap());
    }
    c.check(
        report.is_valid(),
        format!(
            "{} failures in {} replicates",
            report.failures, report.replicates
        ),
    );
    let (isb, _) = imse(&report, "S1", 250, "deconvolution");
    let (isb_naive, _) = imse(&report, "S1", 250, "naive");
    c.check(
        isb <= 0.10,
        format!("S1 n=250 ISB(deconvolution) = {isb:.3} (<= 0.10)"),
    );
    c.check(
        isb_naive >= 0.7,
        format!("S1 n=250 ISB(naive) = {isb_naive:.3} (>= 0.7)"),
    );
    for s in ["S1", "S2", "S3"] {
        let (_, a) = imse(&report, s, 500, "deconvolution");
        let (_, b) = imse(&report, s, 500, "naive");
        c.check(
            a < b,
            format!("{s} n=500 IMSE deconvolution {a:.3} < naive {b:.3}"),
        );
    }
    c.finish(1800.0);
}

#[test]
fn a3_interval_coverage() {
    let mut c = Checks::new("A3");
    let mut rows = Vec::new();
    for n in [250, 500] {
        let mut cfg = SimConfig::desk(Scenario::S1, n);
        cfg.levels = vec![0.95];
        let report = full_study(&cfg).unwrap();
        c.check(
            report.is_valid(),
            format!(
                "n={n}: {} failures in {} replicates",
                report.failures, report.replicates
            ),
        );
        rows.extend(report.coverage);
    }
    let get = |n: usize, m: CiMethod| {
        rows.iter()
            .find(|r| r.n == n && r.method == m)
            .unwrap()
            .clone()
    };
    for (m, lo, hi, len) in [
        (CiMethod::An, 0.90, 0.99, 0.66),
        (CiMethod::El, 0.89, 0.99, 0.69),
    ] {
        let r = get(500, m);
        c.check(
            (lo..=hi).contains(&r.coverage),
            format!("{m} n=500 coverage {:.3} in [{lo}, {hi}]", r.coverage),
        );
        c.check(
            (r.length - len).abs() <= 0.25 * len,
            format!(
                "{m} n=500 length {:.3} within 25% of {len} (flagged {:.3})",
                r.length, r.flagged
            ),
        );
        let r250 = get(250, m);
        c.check(
            r.length < r250.length,
            format!(
                "{m} length decreases: {:.3} (n=250) -> {:.3} (n=500)",
                r250.length, r.length
            ),
        );
    }
    c.finish(1800.0);
}

fn vmf_density(kappa: f64, mean: &SpherePoint, x: &SpherePoint) -> f64 {
    kappa / (4.0 * PI * kappa.sinh()) * (kappa * mean.dot(x)).exp()
}

fn density_ise(model: &ErrorModel, n: usize, t: f64, seed: u64) -> f64 {
    let mean = SpherePoint::north_pole(2);
    let x = sample_vmf_sphere(&mean, 5.0, n, seed).unwrap();
    let z: Vec<SpherePoint> = if matches!(model.kind(), ErrorKind::ErrorFree) {
        x
    } else {
        let u = sample_error(model, n, seed ^ 0x5eed).unwrap();
        x.iter().zip(&u).map(|(x, u)| u.apply(x).unwrap()).collect()
    };
    let quad = product_quadrature(2, 24).unwrap();
    let k = DeconvKernel::from_model(model, t).unwrap();
    let est = density_estimate(&Dataset::new(z, None).unwrap(), &k, quad.nodes()).unwrap();
    let err: Vec<f64> = quad
        .nodes()
        .iter()
        .zip(&est.f_hat)
        .map(|(p, f)| (f - vmf_density(5.0, &mean, p)).powi(2))
        .collect();
    quad.integrate_values(&err)
}

#[test]
fn a4_convergence() {
    let mut c = Checks::new("A4");
    let sizes = [100usize, 400, 1600];
    let free = ErrorModel::error_free(2).unwrap();
    let mut decreasing = 0;
    for seed in 0..20u64 {
        let e: Vec<f64> = sizes
            .iter()
            .map(|&n| {
                density_ise(
                    &free,
                    n,
                    (3.0 * (n as f64).powf(1.0 / 10.0)).floor(),
                    7000 + 31 * seed + n as u64,
                )
            })
            .collect();
        decreasing += (e[0] > e[1] && e[1] > e[2]) as usize;
    }
    c.check(
        decreasing >= 18,
        format!("error-free ISE decreasing over n in {{100, 400, 1600}}: {decreasing} of 20 seeds"),
    );

    let laplace = ErrorModel::laplace(2, 0.5).unwrap();
    let oracle_t = |n: usize| (3.0 * (n as f64).powf(1.0 / 14.0)).floor();
    let mean_ise = |n: usize| {
        (0..20u64)
            .map(|s| density_ise(&laplace, n, oracle_t(n), 9000 + s))
            .sum::<f64>()
            / 20.0
    };
    let (e100, e1600) = (mean_ise(100), mean_ise(1600));
    c.check(
        e1600 * 2.0 <= e100,
        format!(
            "Laplace(0.5) mean ISE: n=100 (T={}) {e100:.4}, n=1600 (T={}) {e1600:.4}, ratio {:.1}",
            oracle_t(100),
            oracle_t(1600),
            e100 / e1600
        ),
    );
    c.finish(600.0);
}

fn write_sunspots(path: &Path, n: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = String::from("lon,lat\n");
    for _ in 0..n {
        let (u1, u2): (f64, f64) = (rng.random::<f64>().max(1e-300), rng.random());
        let g = (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos();
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let lat = (sign * (15.0 + 7.0 * g)).clamp(-90.0, 90.0);
        let lon = rng.random::<f64>() * 360.0;
        s.push_str(&format!("{lon},{lat}\n"));
    }
    std::fs::write(path, s).unwrap();
}

fn read_grid(path: &Path) -> Vec<(f64, f64, f64)> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            let v = |i: usize| r[i].parse::<f64>().unwrap();
            (v(0), v(1), v(2))
        })
        .collect()
}

#[test]
fn a5_sunspot_workflow() {
    let mut c = Checks::new("A5");
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("sunspots.csv");
    write_sunspots(&input, 50_000, 11);
    let res = 64;
    let quad = product_quadrature(2, res).unwrap();
    let mut peaks = Vec::new();
    for (i, lambda) in [0.0f64, 0.05, 0.1, 0.15]
        .iter()
        .map(|v| v.sqrt())
        .enumerate()
    {
        let out = dir.path().join(format!("grid{i}.csv"));
        let code = sphdecon_cli::run([
            "sphdecon".to_string(),
            "density".into(),
            "--input".into(),
            input.display().to_string(),
            "--model".into(),
            "laplace".into(),
            "--lambda".into(),
            lambda.to_string(),
            "--T-grid".into(),
            "1..40".into(),
            "--grid-res".into(),
            res.to_string(),
            "--out".into(),
            out.display().to_string(),
        ]);
        c.check(code == 0, format!("lambda = {lambda:.4}: exit code {code}"));
        let rows = read_grid(&out);
        let values: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let mass = quad.integrate_values(&values);
        c.check(
            (mass - 1.0).abs() < 1e-6,
            format!("lambda = {lambda:.4}: mass {mass:.10}"),
        );
        // rows come in latitude rings of 2 * res nodes
        let peak = rows
            .chunks(2 * res)
            .map(|ring| (ring[0].1.abs(), ring.iter().map(|r| r.2).sum::<f64>()))
            .fold(
                (0.0, f64::MIN),
                |best, (lat, v)| if v > best.1 { (lat, v) } else { best },
            );
        println!(
            "  lambda = {lambda:.4}: zonal-mean peak at |lat| = {:.3}",
            peak.0
        );
        peaks.push(peak.0);
    }
    let monotone = peaks.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    c.check(
        monotone,
        format!("peak |lat| non-increasing in lambda: {peaks:.3?}"),
    );
    c.check(
        peaks[3] < peaks[0],
        format!(
            "peak moves toward the equator: {:.3} -> {:.3}",
            peaks[0], peaks[3]
        ),
    );
    c.finish(300.0);
}
