use std::sync::Arc;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::density::{apply_inverse_flat, sample_coefficients};
use super::kernel::DeconvKernel;
use super::{instability_floor, Dataset};
use crate::error::{Error, Result};
use crate::fourier::{transform_blocks, ErrorModel, TransformBlocks};
use crate::geom::sphere_area;
use crate::harmonics::{conjugation_map, n_dl};

/// Cross-validation scores over a truncation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CvCurve {
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub selected: f64,
}

fn check_grid(t_grid: &[f64]) -> Result<usize> {
    if t_grid.is_empty() {
        return Err(Error::domain("truncation grid is empty"));
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(Error::domain(format!("truncation {t} must be >= 0")));
    }
    Ok(t_grid.iter().map(|t| t.floor() as usize).max().unwrap_or(0))
}

/// Smallest `T` whose score is within `1e-10 (1 + |best|)` of the minimum.
fn select(t_grid: &[f64], values: &[f64]) -> f64 {
    let best = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = 1e-10 * (1.0 + best.abs());
    t_grid
        .iter()
        .zip(values)
        .filter(|(_, v)| **v <= best + tol)
        .map(|(t, _)| *t)
        .fold(f64::INFINITY, f64::min)
}

fn cumulative(per_degree: &[f64], t_grid: &[f64]) -> Vec<f64> {
    let mut cum = Vec::with_capacity(per_degree.len());
    let mut acc = 0.0;
    for v in per_degree {
        acc += v;
        cum.push(acc);
    }
    t_grid.iter().map(|t| cum[t.floor() as usize]).collect()
}

/// Least-squares cross-validation
/// `CV(T) = int f^_X^2 dnu - (2/n) sum_i f^_X^{(-i)}(Z_i)`, evaluated in
/// coefficient space for every `T` in `t_grid`.
pub fn cv_density_curve(
    data: &Dataset,
    blocks: Arc<TransformBlocks>,
    t_grid: &[f64],
) -> Result<CvCurve> {
    let tmax = check_grid(t_grid)?;
    let n = data.len();
    if n < 2 {
        return Err(Error::domain(
            "cross-validation needs at least 2 observations",
        ));
    }
    let d = data.dim();
    let k = DeconvKernel::new(blocks, tmax as f64)?;
    let coef = sample_coefficients(&k, data)?;
    let (a, b) = (coef.density_coefficients(), coef.mean_conj_basis());
    let nf = n as f64;
    let area = sphere_area(d);

    // t_l = n^{-1} sum_i Re B^l(Z_i)^T (phi~^l)^{-1} conj(B^l(Z_i)) for dense blocks
    let mut trace_terms = vec![0.0; tmax + 1];
    if !k.blocks().is_scalar() {
        let mut buf = Vec::new();
        for z in data.z() {
            buf.clear();
            k.basis().eval_into(z, &mut buf)?;
            let conj: Vec<Complex64> = buf.iter().map(|v| v.conj()).collect();
            let inv = apply_inverse_flat(&k, &conj);
            for (l, t) in trace_terms.iter_mut().enumerate() {
                if k.blocks().scalar(l).is_some() {
                    continue;
                }
                let off = k.basis().offset(l);
                let len = k.basis().basis_dim(l);
                *t += (off..off + len).map(|p| (buf[p] * inv[p]).re).sum::<f64>() / nf;
            }
        }
    }

    let mut per_degree = Vec::with_capacity(tmax + 1);
    for l in 0..=tmax {
        let off = k.basis().offset(l);
        let len = k.basis().basis_dim(l);
        let al = &a[off..off + len];
        // coefficients of Re(sum_p a_p B_p)
        let mut re = vec![Complex64::new(0.0, 0.0); len];
        for (q, (target, sign)) in conjugation_map(d, l).into_iter().enumerate() {
            re[q] += al[q] * 0.5;
            re[target] += al[q].conj() * (0.5 * sign);
        }
        let energy: f64 = re.iter().map(|c| c.norm_sqr()).sum();
        let cross: f64 = (off..off + len).map(|p| (b[p].conj() * a[p]).re).sum();
        let trace = match k.blocks().scalar(l) {
            Some(s) => n_dl(d, l) as f64 / (s * area),
            None => trace_terms[l],
        };
        per_degree.push(energy - 2.0 / (nf * (nf - 1.0)) * (nf * nf * cross - nf * trace));
    }
    let values = cumulative(&per_degree, t_grid);
    Ok(CvCurve {
        selected: select(t_grid, &values),
        t_grid: t_grid.to_vec(),
        values,
    })
}

/// Truncation minimizing the density cross-validation score.
pub fn select_t_density(data: &Dataset, model: &ErrorModel, t_grid: &[f64]) -> Result<f64> {
    let tmax = check_grid(t_grid)?;
    let blocks = Arc::new(transform_blocks(model, tmax)?);
    Ok(cv_density_curve(data, blocks, t_grid)?.selected)
}

/// Fold index of each observation from a seeded shuffle.
pub(crate) fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (pos, &i) in perm.iter().enumerate() {
        fold[i] = pos % folds;
    }
    fold
}

/// `folds`-fold cross-validated squared prediction error of the
/// regression estimator at the observed `Z_i`, for every `T` in `t_grid`.
///
/// Where the held-out density estimate falls below the instability floor the
/// prediction is the training mean of `Y`.
pub fn cv_regression_curve(
    data: &Dataset,
    blocks: Arc<TransformBlocks>,
    t_grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<CvCurve> {
    let tmax = check_grid(t_grid)?;
    let y = data.require_y()?;
    let n = data.len();
    if folds < 2 {
        return Err(Error::domain("need at least 2 folds"));
    }
    if n < folds {
        return Err(Error::domain(format!("{n} observations for {folds} folds")));
    }
    let k = DeconvKernel::new(blocks, tmax as f64)?;
    let len = k.basis().total_dim();
    let floor = instability_floor(data.dim());
    let fold = fold_assignment(n, folds, seed);

    let mut basis = Vec::with_capacity(n * len);
    for z in data.z() {
        k.basis().eval_into(z, &mut basis)?;
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut sb = vec![vec![zero; len]; folds];
    let mut sc = vec![vec![zero; len]; folds];
    let mut sy = vec![0.0; folds];
    let mut count = vec![0usize; folds];
    for i in 0..n {
        let f = fold[i];
        let row = &basis[i * len..(i + 1) * len];
        for p in 0..len {
            let c = row[p].conj();
            sb[f][p] += c;
            sc[f][p] += c * y[i];
        }
        sy[f] += y[i];
        count[f] += 1;
    }
    let tot_b: Vec<Complex64> = (0..len).map(|p| sb.iter().map(|v| v[p]).sum()).collect();
    let tot_c: Vec<Complex64> = (0..len).map(|p| sc.iter().map(|v| v[p]).sum()).collect();
    let tot_y: f64 = sy.iter().sum();

    let mut sse = vec![0.0; t_grid.len()];
    let mut f_cum = vec![0.0; tmax + 1];
    let mut g_cum = vec![0.0; tmax + 1];
    for f in 0..folds {
        let m = (n - count[f]) as f64;
        let b: Vec<Complex64> = (0..len).map(|p| (tot_b[p] - sb[f][p]) / m).collect();
        let c: Vec<Complex64> = (0..len).map(|p| (tot_c[p] - sc[f][p]) / m).collect();
        let a = apply_inverse_flat(&k, &b);
        let ac = apply_inverse_flat(&k, &c);
        let mean_y = (tot_y - sy[f]) / m;
        for i in (0..n).filter(|&i| fold[i] == f) {
            let row = &basis[i * len..(i + 1) * len];
            let (mut fa, mut ga) = (0.0, 0.0);
            for l in 0..=tmax {
                let off = k.basis().offset(l);
                for p in off..off + k.basis().basis_dim(l) {
                    fa += (row[p] * a[p]).re;
                    ga += (row[p] * ac[p]).re;
                }
                f_cum[l] = fa;
                g_cum[l] = ga;
            }
            for (s, t) in sse.iter_mut().zip(t_grid) {
                let l = t.floor() as usize;
                let pred = if f_cum[l].abs() < floor {
                    mean_y
                } else {
                    g_cum[l] / f_cum[l]
                };
                *s += (y[i] - pred).powi(2);
            }
        }
    }
    Ok(CvCurve {
        selected: select(t_grid, &sse),
        t_grid: t_grid.to_vec(),
        values: sse,
    })
}

/// Truncation minimizing the `folds`-fold regression cross-validation score.
pub fn select_t_regression(
    data: &Dataset,
    model: &ErrorModel,
    t_grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<f64> {
    let tmax = check_grid(t_grid)?;
    let blocks = Arc::new(transform_blocks(model, tmax)?);
    Ok(cv_regression_curve(data, blocks, t_grid, folds, seed)?.selected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{density_estimate, regression_estimate, KernelRows};
    use crate::geom::{product_quadrature, sample_error, sample_vmf_sphere, Rotation, SpherePoint};
    use std::f64::consts::PI;

    fn data(model: &ErrorModel, n: usize, seed: u64, with_y: bool) -> Dataset {
        let d = model.dim();
        let x = sample_vmf_sphere(&SpherePoint::north_pole(d), 4.0, n, seed).unwrap();
        let u = sample_error(model, n, seed + 1).unwrap();
        let z: Vec<SpherePoint> = x.iter().zip(&u).map(|(x, u)| u.apply(x).unwrap()).collect();
        let y = with_y.then(|| x.iter().map(|p| p.coords().iter().sum::<f64>()).collect());
        Dataset::new(z, y).unwrap()
    }

    fn brute_density_cv(data: &Dataset, model: &ErrorModel, t: f64) -> f64 {
        let k = DeconvKernel::from_model(model, t).unwrap();
        let quad = product_quadrature(data.dim(), 2 * t as usize + 4).unwrap();
        let est = density_estimate(data, &k, quad.nodes()).unwrap();
        let sq: Vec<f64> = est.f_hat.iter().map(|v| v * v).collect();
        let energy = quad.integrate_values(&sq);
        let rows = KernelRows::new(&k, data).unwrap();
        let n = data.len() as f64;
        let mut loo = 0.0;
        for (i, z) in data.z().iter().enumerate() {
            let row = rows.row(z).unwrap();
            loo += (row.iter().sum::<f64>() - row[i]) / (n - 1.0);
        }
        energy - 2.0 / n * loo
    }

    #[test]
    fn density_curve_matches_brute_force() {
        for model in [
            ErrorModel::laplace(2, 0.4).unwrap(),
            ErrorModel::von_mises_fisher(2, 3.0, Rotation::from_euler(0.2, 0.7, 1.3).unwrap())
                .unwrap(),
            ErrorModel::gaussian(1, 0.3).unwrap(),
        ] {
            let data = data(&model, 40, 3, false);
            let grid = [0.0, 1.0, 2.5, 4.0];
            let blocks = Arc::new(transform_blocks(&model, 4).unwrap());
            let curve = cv_density_curve(&data, blocks, &grid).unwrap();
            for (t, v) in grid.iter().zip(&curve.values) {
                let want = brute_density_cv(&data, &model, *t);
                assert!(
                    (v - want).abs() < 1e-9 * (1.0 + want.abs()),
                    "{} T={t}: {v} vs {want}",
                    model.name()
                );
            }
        }
    }

    #[test]
    fn density_cv_at_zero() {
        for d in [1, 2, 3] {
            let pts: Vec<SpherePoint> = (0..5)
                .map(|i| {
                    let mut v = vec![0.3; d + 1];
                    v[i % (d + 1)] = 1.0;
                    SpherePoint::from_coords(v).unwrap()
                })
                .collect();
            let data = Dataset::new(pts, None).unwrap();
            let blocks =
                Arc::new(transform_blocks(&ErrorModel::error_free(d).unwrap(), 0).unwrap());
            let curve = cv_density_curve(&data, blocks, &[0.0]).unwrap();
            assert!((curve.values[0] + 1.0 / sphere_area(d)).abs() < 1e-15);
        }
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn single_element_grids() {
        let model = ErrorModel::laplace(2, 0.5).unwrap();
        let data = data(&model, 30, 1, true);
        assert_eq!(select_t_density(&data, &model, &[3.0]).unwrap(), 3.0);
        assert_eq!(
            select_t_regression(&data, &model, &[3.0], 5, 0).unwrap(),
            3.0
        );
    }

    #[test]
    fn errors() {
        let model = ErrorModel::laplace(2, 0.5).unwrap();
        let d = data(&model, 4, 1, true);
        assert!(select_t_density(&d, &model, &[]).is_err());
        assert!(select_t_regression(&d, &model, &[1.0], 5, 0).is_err());
        assert!(select_t_density(&d, &model, &[-1.0]).is_err());
    }

    #[test]
    fn constant_response_picks_smallest() {
        let model = ErrorModel::laplace(2, 0.5).unwrap();
        let d = data(&model, 50, 2, false);
        let d = Dataset::new(d.z().to_vec(), Some(vec![1.5; 50])).unwrap();
        let t = select_t_regression(&d, &model, &[6.0, 2.0, 4.0], 5, 9).unwrap();
        assert_eq!(t, 2.0);
    }

    #[test]
    fn regression_curve_matches_refits() {
        let model = ErrorModel::laplace(2, 0.5).unwrap();
        let data = data(&model, 40, 4, true);
        let grid = [1.0, 3.0];
        let blocks = Arc::new(transform_blocks(&model, 3).unwrap());
        let curve = cv_regression_curve(&data, blocks, &grid, 5, 17).unwrap();
        let fold = fold_assignment(40, 5, 17);
        let y = data.y().unwrap();
        for (t, v) in grid.iter().zip(&curve.values) {
            let k = DeconvKernel::from_model(&model, *t).unwrap();
            let mut sse = 0.0;
            for f in 0..5 {
                let train: Vec<usize> = (0..40).filter(|&i| fold[i] != f).collect();
                let test: Vec<usize> = (0..40).filter(|&i| fold[i] == f).collect();
                let td = Dataset::new(
                    train.iter().map(|&i| data.z()[i].clone()).collect(),
                    Some(train.iter().map(|&i| y[i]).collect()),
                )
                .unwrap();
                let pts: Vec<SpherePoint> = test.iter().map(|&i| data.z()[i].clone()).collect();
                let est = regression_estimate(&td, &k, &pts).unwrap();
                for (j, &i) in test.iter().enumerate() {
                    sse += (y[i] - est.m_hat.as_ref().unwrap()[j]).powi(2);
                }
            }
            assert!((v - sse).abs() < 1e-9 * (1.0 + sse));
        }
    }

    #[test]
    fn folds_are_balanced() {
        let f = fold_assignment(23, 5, 1);
        for k in 0..5 {
            let c = f.iter().filter(|&&v| v == k).count();
            assert!(c == 4 || c == 5);
        }
        assert_eq!(f, fold_assignment(23, 5, 1));
    }
}
