use num_complex::Complex64;
use rayon::prelude::*;

use super::kernel::{DeconvKernel, KernelRows};
use super::{instability_floor, Dataset, EstimateGrid};
use crate::error::{Error, Result};
use crate::fourier::ErrorModel;
use crate::geom::SpherePoint;

/// Per-degree sample transforms in the flat basis layout.
///
/// `b = n^{-1} sum conj(B(Z_i))`, `a_l = (phi~^l)^{-1} b_l`, and the same
/// with weights `Y_i` for the regression numerator.
#[derive(Debug, Clone)]
pub struct SampleCoefficients {
    n: usize,
    b: Vec<Complex64>,
    a: Vec<Complex64>,
    c: Option<Vec<Complex64>>,
    ac: Option<Vec<Complex64>>,
}

impl SampleCoefficients {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `n^{-1} sum_i conj(B(Z_i))`.
    pub fn mean_conj_basis(&self) -> &[Complex64] {
        &self.b
    }

    /// Deconvolved density coefficients.
    pub fn density_coefficients(&self) -> &[Complex64] {
        &self.a
    }

    /// Deconvolved regression-numerator coefficients.
    pub fn numerator_coefficients(&self) -> Option<&[Complex64]> {
        self.ac.as_deref()
    }

    pub fn mean_weighted_conj_basis(&self) -> Option<&[Complex64]> {
        self.c.as_deref()
    }
}

pub(crate) fn apply_inverse_flat(k: &DeconvKernel, v: &[Complex64]) -> Vec<Complex64> {
    let basis = k.basis();
    let mut out = Vec::with_capacity(v.len());
    for l in 0..=k.degree() {
        let off = basis.offset(l);
        let n = basis.basis_dim(l);
        out.extend(k.blocks().apply_inverse(l, &v[off..off + n]));
    }
    out
}

pub fn sample_coefficients(k: &DeconvKernel, data: &Dataset) -> Result<SampleCoefficients> {
    if data.dim() != k.dim() {
        return Err(Error::domain("data dimension does not match the kernel"));
    }
    let len = k.basis().total_dim();
    let mut b = vec![Complex64::new(0.0, 0.0); len];
    let mut c = data.y().map(|_| vec![Complex64::new(0.0, 0.0); len]);
    let mut buf = Vec::with_capacity(len);
    for (i, z) in data.z().iter().enumerate() {
        buf.clear();
        k.basis().eval_into(z, &mut buf)?;
        for (acc, v) in b.iter_mut().zip(&buf) {
            *acc += v.conj();
        }
        if let (Some(c), Some(y)) = (c.as_mut(), data.y()) {
            for (acc, v) in c.iter_mut().zip(&buf) {
                *acc += v.conj() * y[i];
            }
        }
    }
    let inv_n = 1.0 / data.len() as f64;
    b.iter_mut().for_each(|v| *v *= inv_n);
    if let Some(c) = c.as_mut() {
        c.iter_mut().for_each(|v| *v *= inv_n);
    }
    let a = apply_inverse_flat(k, &b);
    let ac = c.as_ref().map(|c| apply_inverse_flat(k, c));
    Ok(SampleCoefficients {
        n: data.len(),
        b,
        a,
        c,
        ac,
    })
}

fn contract(bx: &[Complex64], a: &[Complex64]) -> f64 {
    bx.iter()
        .zip(a)
        .map(|(u, v)| u.re * v.re - u.im * v.im)
        .sum()
}

/// `(f^(x), numerator(x))` at each node from precomputed coefficients.
pub(crate) fn evaluate_coefficients(
    k: &DeconvKernel,
    coef: &SampleCoefficients,
    grid: &[SpherePoint],
) -> Result<Vec<(f64, Option<f64>)>> {
    grid.par_iter()
        .map(|x| {
            let bx = k.basis().eval_flat(x)?;
            let f = contract(&bx, &coef.a);
            let g = coef.ac.as_ref().map(|ac| contract(&bx, ac));
            Ok((f, g))
        })
        .collect()
}

/// `f^_X(x) = n^{-1} sum_i Re K_T(x, Z_i)` at each grid node.
pub fn density_estimate(
    data: &Dataset,
    k: &DeconvKernel,
    grid: &[SpherePoint],
) -> Result<EstimateGrid> {
    let coef = sample_coefficients(k, data)?;
    let vals = evaluate_coefficients(k, &coef, grid)?;
    Ok(EstimateGrid {
        nodes: grid.to_vec(),
        f_hat: vals.iter().map(|v| v.0).collect(),
        unstable: vec![false; grid.len()],
        degenerate: vec![false; grid.len()],
        ..Default::default()
    })
}

/// Density estimate by the pointwise kernel sum.
pub fn density_estimate_direct(
    data: &Dataset,
    k: &DeconvKernel,
    grid: &[SpherePoint],
) -> Result<Vec<f64>> {
    let rows = KernelRows::new(k, data)?;
    let n = data.len() as f64;
    grid.iter()
        .map(|x| Ok(rows.row(x)?.iter().sum::<f64>() / n))
        .collect()
}

/// `m^(x) = f^_X(x)^{-1} n^{-1} sum_i Re K_T(x, Z_i) Y_i`.
pub fn regression_estimate(
    data: &Dataset,
    k: &DeconvKernel,
    grid: &[SpherePoint],
) -> Result<EstimateGrid> {
    data.require_y()?;
    let coef = sample_coefficients(k, data)?;
    let vals = evaluate_coefficients(k, &coef, grid)?;
    let floor = instability_floor(k.dim());
    let f_hat: Vec<f64> = vals.iter().map(|v| v.0).collect();
    let m_hat = vals
        .iter()
        .map(|(f, g)| g.expect("responses present") / f)
        .collect();
    Ok(EstimateGrid {
        nodes: grid.to_vec(),
        unstable: f_hat.iter().map(|f| f.abs() < floor).collect(),
        degenerate: vec![false; grid.len()],
        f_hat,
        m_hat: Some(m_hat),
        ..Default::default()
    })
}

/// Regression estimate that ignores the contamination and uses `K*_T`
/// on the observed `Z_i`.
pub fn naive_regression_estimate(
    data: &Dataset,
    truncation: f64,
    grid: &[SpherePoint],
) -> Result<EstimateGrid> {
    let k = DeconvKernel::from_model(&ErrorModel::error_free(data.dim())?, truncation)?;
    regression_estimate(data, &k, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{product_quadrature, sample_error, sample_vmf_sphere, Rotation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn contaminated(n: usize, model: &ErrorModel, seed: u64) -> Vec<SpherePoint> {
        let d = model.dim();
        let x = sample_vmf_sphere(&SpherePoint::north_pole(d), 3.0, n, seed).unwrap();
        let u = sample_error(model, n, seed + 1).unwrap();
        x.iter().zip(&u).map(|(x, u)| u.apply(x).unwrap()).collect()
    }

    #[test]
    fn single_point_on_circle() {
        let z = SpherePoint::from_angles(1, 0.0, &[]).unwrap();
        let data = Dataset::new(vec![z.clone()], None).unwrap();
        let k = DeconvKernel::from_model(&ErrorModel::error_free(1).unwrap(), 1.0).unwrap();
        let est = density_estimate(&data, &k, &[z]).unwrap();
        assert!((est.f_hat[0] - (1.0 / (2.0 * PI) + 1.0 / PI)).abs() < 1e-14);
    }

    #[test]
    fn estimate_has_unit_mass() {
        for model in [
            ErrorModel::laplace(2, 0.5).unwrap(),
            ErrorModel::gaussian(2, 0.2).unwrap(),
            ErrorModel::von_mises_fisher(2, 3.0, Rotation::from_euler(1.0, 0.5, 0.2).unwrap())
                .unwrap(),
        ] {
            let data = Dataset::new(contaminated(60, &model, 7), None).unwrap();
            let k = DeconvKernel::from_model(&model, 7.0).unwrap();
            let quad = product_quadrature(2, 16).unwrap();
            let est = density_estimate(&data, &k, quad.nodes()).unwrap();
            let mass = quad.integrate_values(&est.f_hat);
            assert!((mass - 1.0).abs() < 1e-8, "{} mass {mass}", model.name());
        }
        let model = ErrorModel::laplace(1, 0.3).unwrap();
        let data = Dataset::new(contaminated(40, &model, 9), None).unwrap();
        let k = DeconvKernel::from_model(&model, 9.0).unwrap();
        let quad = product_quadrature(1, 64).unwrap();
        let est = density_estimate(&data, &k, quad.nodes()).unwrap();
        assert!((quad.integrate_values(&est.f_hat) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn coefficient_path_matches_pointwise_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for model in [
            ErrorModel::laplace(2, 0.5).unwrap(),
            ErrorModel::von_mises_fisher(2, 2.0, Rotation::from_euler(0.4, 0.9, 2.1).unwrap())
                .unwrap(),
            ErrorModel::gaussian(3, 0.2).unwrap(),
        ] {
            let d = model.dim();
            let mut point = || {
                let v: Vec<f64> = (0..=d).map(|_| rng.random::<f64>() - 0.5).collect();
                SpherePoint::from_coords(v).unwrap()
            };
            let z: Vec<SpherePoint> = (0..50).map(|_| point()).collect();
            let grid: Vec<SpherePoint> = (0..15).map(|_| point()).collect();
            let data = Dataset::new(z, None).unwrap();
            let k = DeconvKernel::from_model(&model, 5.0).unwrap();
            let a = density_estimate(&data, &k, &grid).unwrap();
            let b = density_estimate_direct(&data, &k, &grid).unwrap();
            for (u, v) in a.f_hat.iter().zip(&b) {
                assert!((u - v).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn constant_response_is_reproduced() {
        let model = ErrorModel::laplace(2, 0.5).unwrap();
        let z = contaminated(80, &model, 3);
        let data = Dataset::new(z, Some(vec![2.5; 80])).unwrap();
        let k = DeconvKernel::from_model(&model, 6.0).unwrap();
        let grid = product_quadrature(2, 8).unwrap().nodes().to_vec();
        let est = regression_estimate(&data, &k, &grid).unwrap();
        for m in est.m_hat.unwrap() {
            assert!((m - 2.5).abs() < 1e-9);
        }
        let naive = naive_regression_estimate(&data, 6.0, &grid).unwrap();
        for m in naive.m_hat.unwrap() {
            assert!((m - 2.5).abs() < 1e-9);
        }
    }

    #[test]
    fn naive_equals_deconvolution_without_error() {
        let model = ErrorModel::error_free(2).unwrap();
        let z = contaminated(40, &model, 5);
        let y: Vec<f64> = z.iter().map(|p| p.coords()[2]).collect();
        let data = Dataset::new(z, Some(y)).unwrap();
        let grid = product_quadrature(2, 6).unwrap().nodes().to_vec();
        let k = DeconvKernel::from_model(&model, 4.0).unwrap();
        let a = regression_estimate(&data, &k, &grid).unwrap();
        let b = naive_regression_estimate(&data, 4.0, &grid).unwrap();
        assert_eq!(a.m_hat, b.m_hat);
    }

    #[test]
    fn regression_requires_responses() {
        let data = Dataset::new(vec![SpherePoint::north_pole(2)], None).unwrap();
        let k = DeconvKernel::from_model(&ErrorModel::error_free(2).unwrap(), 2.0).unwrap();
        assert!(regression_estimate(&data, &k, &[SpherePoint::north_pole(2)]).is_err());
    }

    #[test]
    fn low_density_nodes_are_flagged() {
        // all mass near the north pole, T = 1: the estimate is negative near the south pole
        let z = vec![SpherePoint::north_pole(2); 10];
        let data = Dataset::new(z, Some(vec![1.0; 10])).unwrap();
        let k = DeconvKernel::from_model(&ErrorModel::error_free(2).unwrap(), 1.0).unwrap();
        let south = SpherePoint::from_angles(2, 0.0, &[PI]).unwrap();
        // f^(south) = (1 - 3) / (4 pi)
        let est = regression_estimate(&data, &k, &[south]).unwrap();
        assert!((est.f_hat[0] + 2.0 / (4.0 * PI)).abs() < 1e-12);
        assert!(!est.unstable[0]);
        let eq = SpherePoint::from_angles(2, 0.0, &[(-1.0f64 / 3.0).acos()]).unwrap();
        let est = regression_estimate(&data, &k, &[eq]).unwrap();
        assert!(est.unstable[0]);
    }
}
