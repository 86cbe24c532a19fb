use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::Dataset;
use crate::error::{Error, Result};
use crate::fourier::{transform_blocks, ErrorModel, TransformBlocks};
use crate::geom::{sphere_area, SpherePoint};
use crate::harmonics::{legendre_dim_all, n_dl, HarmonicBasis};

/// Truncated deconvolution kernel
/// `K_T(x, z) = sum_{l <= floor(T)} B^l(x)^T (phi~^l)^{-1} conj(B^l(z))`.
#[derive(Debug, Clone)]
pub struct DeconvKernel {
    blocks: Arc<TransformBlocks>,
    truncation: f64,
    degree: usize,
    basis: HarmonicBasis,
    // transposed inverses of the non-scalar blocks
    inv_t: Vec<Option<DMatrix<Complex64>>>,
}

impl DeconvKernel {
    /// Uses the blocks of degrees `0..=floor(T)` from `blocks`.
    pub fn new(blocks: Arc<TransformBlocks>, truncation: f64) -> Result<Self> {
        if !(truncation >= 0.0) || !truncation.is_finite() {
            return Err(Error::domain(format!(
                "truncation {truncation} must be >= 0"
            )));
        }
        let degree = truncation.floor() as usize;
        if degree > blocks.max_degree() {
            return Err(Error::domain(format!(
                "truncation {truncation} exceeds the precomputed degree {}",
                blocks.max_degree()
            )));
        }
        let basis = HarmonicBasis::new(blocks.dim(), degree)?;
        let inv_t = (0..=degree)
            .map(|l| {
                blocks
                    .scalar(l)
                    .is_none()
                    .then(|| blocks.inverse(l).transpose())
            })
            .collect();
        Ok(Self {
            blocks,
            truncation,
            degree,
            basis,
            inv_t,
        })
    }

    pub fn from_model(model: &ErrorModel, truncation: f64) -> Result<Self> {
        if !(truncation >= 0.0) || !truncation.is_finite() {
            return Err(Error::domain(format!(
                "truncation {truncation} must be >= 0"
            )));
        }
        let blocks = transform_blocks(model, truncation.floor() as usize)?;
        Self::new(Arc::new(blocks), truncation)
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    /// Effective degree `floor(T)`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn blocks(&self) -> &TransformBlocks {
        &self.blocks
    }

    pub fn basis(&self) -> &HarmonicBasis {
        &self.basis
    }

    /// `s_l^{-1} N(d,l) / nu(S^d)` for scalar blocks, so that
    /// `K_T(x, z) = sum_l w_l P_{l,d+1}(x . z)`.
    pub(crate) fn radial_weights(&self) -> Option<Vec<f64>> {
        let d = self.dim();
        let area = sphere_area(d);
        (0..=self.degree)
            .map(|l| {
                self.blocks
                    .scalar(l)
                    .map(|s| n_dl(d, l) as f64 / (s * area))
            })
            .collect()
    }

    /// `c(x)` with `K_T(x, z) = c(x) . conj(B(z))` in the flat layout.
    pub(crate) fn left_vector(&self, x: &SpherePoint) -> Result<Vec<Complex64>> {
        let bx = self.basis.eval_flat(x)?;
        let mut out = Vec::with_capacity(bx.len());
        for l in 0..=self.degree {
            let off = self.basis.offset(l);
            let n = self.basis.basis_dim(l);
            let slice = &bx[off..off + n];
            match (&self.inv_t[l], self.blocks.scalar(l)) {
                (Some(inv_t), _) => {
                    let v = inv_t * DVector::from_column_slice(slice);
                    out.extend_from_slice(v.as_slice());
                }
                (None, Some(s)) => out.extend(slice.iter().map(|b| b / s)),
                (None, None) => unreachable!(),
            }
        }
        Ok(out)
    }

    fn check_points(&self, x: &SpherePoint, z: &SpherePoint) -> Result<()> {
        if x.dim() != self.dim() || z.dim() != self.dim() {
            return Err(Error::domain("point dimension does not match the kernel"));
        }
        Ok(())
    }

    /// `K_T(x, z)` by per-degree contraction.
    pub fn eval(&self, x: &SpherePoint, z: &SpherePoint) -> Result<Complex64> {
        self.check_points(x, z)?;
        let c = self.left_vector(x)?;
        let bz = self.basis.eval_flat(z)?;
        Ok(c.iter().zip(&bz).map(|(a, b)| a * b.conj()).sum())
    }

    /// `Re K_T(x, z)`, through the addition theorem when the blocks are
    /// scalar.
    pub fn eval_re(&self, x: &SpherePoint, z: &SpherePoint) -> Result<f64> {
        self.check_points(x, z)?;
        match self.radial_weights() {
            Some(w) => Ok(radial_sum(&w, self.dim(), x.dot(z))),
            None => Ok(self.eval(x, z)?.re),
        }
    }
}

fn radial_sum(w: &[f64], d: usize, t: f64) -> f64 {
    let p = legendre_dim_all(w.len() - 1, d + 1, t.clamp(-1.0, 1.0));
    w.iter().zip(&p).map(|(a, b)| a * b).sum()
}

/// `K*_T(x, x*) = sum_{l <= floor(T)} sum_q conj(B^l_q(x*)) B^l_q(x)`.
pub fn kernel_star_eval(
    d: usize,
    truncation: f64,
    x: &SpherePoint,
    xs: &SpherePoint,
) -> Result<Complex64> {
    if !(truncation >= 0.0) || !truncation.is_finite() {
        return Err(Error::domain(format!(
            "truncation {truncation} must be >= 0"
        )));
    }
    if x.dim() != d || xs.dim() != d {
        return Err(Error::domain("point dimension does not match"));
    }
    let basis = HarmonicBasis::new(d, truncation.floor() as usize)?;
    let bx = basis.eval_flat(x)?;
    let bs = basis.eval_flat(xs)?;
    Ok(bx.iter().zip(&bs).map(|(a, b)| a * b.conj()).sum())
}

/// Evaluates rows `(Re K_T(x, Z_i))_i` for many `x`, caching the data-side
/// basis when the blocks are not scalar.
pub struct KernelRows<'a> {
    kernel: &'a DeconvKernel,
    data: &'a Dataset,
    radial: Option<Vec<f64>>,
    conj_basis: Vec<Complex64>,
}

impl<'a> KernelRows<'a> {
    pub fn new(kernel: &'a DeconvKernel, data: &'a Dataset) -> Result<Self> {
        if data.dim() != kernel.dim() {
            return Err(Error::domain("data dimension does not match the kernel"));
        }
        let radial = kernel.radial_weights();
        let mut conj_basis = Vec::new();
        if radial.is_none() {
            conj_basis.reserve(data.len() * kernel.basis.total_dim());
            for z in data.z() {
                let start = conj_basis.len();
                kernel.basis.eval_into(z, &mut conj_basis)?;
                conj_basis[start..].iter_mut().for_each(|b| *b = b.conj());
            }
        }
        Ok(Self {
            kernel,
            data,
            radial,
            conj_basis,
        })
    }

    /// `Re K_T(x, Z_i)` for every observation.
    pub fn row(&self, x: &SpherePoint) -> Result<Vec<f64>> {
        if x.dim() != self.kernel.dim() {
            return Err(Error::domain("point dimension does not match the kernel"));
        }
        match &self.radial {
            Some(w) => Ok(self
                .data
                .z()
                .iter()
                .map(|z| radial_sum(w, self.kernel.dim(), x.dot(z)))
                .collect()),
            None => {
                let c = self.kernel.left_vector(x)?;
                let dlen = c.len();
                Ok(self
                    .conj_basis
                    .chunks(dlen)
                    .map(|g| c.iter().zip(g).map(|(a, b)| (a * b).re).sum())
                    .collect())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{product_quadrature, Rotation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_point(d: usize, rng: &mut ChaCha8Rng) -> SpherePoint {
        let v: Vec<f64> = (0..=d).map(|_| rng.random::<f64>() - 0.5).collect();
        SpherePoint::from_coords(v).unwrap()
    }

    #[test]
    fn circle_hand_value() {
        let k = DeconvKernel::from_model(&ErrorModel::error_free(1).unwrap(), 1.0).unwrap();
        let x = SpherePoint::from_angles(1, 0.0, &[]).unwrap();
        let v = k.eval(&x, &x).unwrap();
        assert!((v.re - (1.0 / (2.0 * PI) + 1.0 / PI)).abs() < 1e-15);
        assert!((v.re - 0.477_464_829_275_686).abs() < 1e-12);
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn error_free_kernel_is_reproducing_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in [1, 2, 3] {
            let k = DeconvKernel::from_model(&ErrorModel::error_free(d).unwrap(), 4.5).unwrap();
            for _ in 0..5 {
                let x = random_point(d, &mut rng);
                let z = random_point(d, &mut rng);
                let a = k.eval(&x, &z).unwrap();
                let b = kernel_star_eval(d, 4.5, &x, &z).unwrap();
                assert!((a - b).norm() < 1e-12);
                assert!((k.eval_re(&x, &z).unwrap() - a.re).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn star_kernel_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_point(2, &mut rng);
        let y = random_point(2, &mut rng);
        let v = kernel_star_eval(2, 0.0, &x, &y).unwrap();
        assert!((v.re - 1.0 / (4.0 * PI)).abs() < 1e-15);
        let diag = kernel_star_eval(2, 6.0, &x, &x).unwrap();
        let want: f64 = (0..=6).map(|l| (2 * l + 1) as f64).sum::<f64>() / (4.0 * PI);
        assert!((diag.re - want).abs() < 1e-12 && diag.im.abs() < 1e-14);
        let a = kernel_star_eval(2, 6.0, &x, &y).unwrap();
        let b = kernel_star_eval(2, 6.0, &y, &x).unwrap();
        assert!((a - b.conj()).norm() < 1e-14);
    }

    #[test]
    fn radial_and_contraction_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (d, model) in [
            (1, ErrorModel::laplace(1, 0.5).unwrap()),
            (2, ErrorModel::gaussian(2, 0.3).unwrap()),
            (3, ErrorModel::laplace(3, 0.2).unwrap()),
        ] {
            let k = DeconvKernel::from_model(&model, 5.0).unwrap();
            for _ in 0..5 {
                let x = random_point(d, &mut rng);
                let z = random_point(d, &mut rng);
                let c = k.eval(&x, &z).unwrap();
                assert!((k.eval_re(&x, &z).unwrap() - c.re).abs() < 1e-10);
                assert!(c.im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn kernel_mass_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let quad = product_quadrature(2, 20).unwrap();
        for model in [
            ErrorModel::laplace(2, 0.5).unwrap(),
            ErrorModel::von_mises_fisher(2, 2.0, Rotation::from_euler(0.3, 1.0, 2.0).unwrap())
                .unwrap(),
        ] {
            let k = DeconvKernel::from_model(&model, 6.0).unwrap();
            let z = random_point(2, &mut rng);
            let m = quad.integrate(|x| k.eval(x, &z).unwrap().re);
            assert!((m - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn rows_match_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let zs: Vec<SpherePoint> = (0..20).map(|_| random_point(2, &mut rng)).collect();
        let data = Dataset::new(zs.clone(), None).unwrap();
        let model = ErrorModel::von_mises_fisher(2, 2.0, Rotation::identity(2)).unwrap();
        let k = DeconvKernel::from_model(&model, 3.0).unwrap();
        let rows = KernelRows::new(&k, &data).unwrap();
        let x = random_point(2, &mut rng);
        for (v, z) in rows.row(&x).unwrap().iter().zip(&zs) {
            assert!((v - k.eval(&x, z).unwrap().re).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_truncation() {
        let m = ErrorModel::error_free(2).unwrap();
        assert!(DeconvKernel::from_model(&m, -1.0).is_err());
        assert!(DeconvKernel::from_model(&m, f64::NAN).is_err());
        let blocks = Arc::new(transform_blocks(&m, 3).unwrap());
        assert!(DeconvKernel::new(blocks, 4.0).is_err());
        assert!(matches!(
            DeconvKernel::from_model(&m, 200.0),
            Err(Error::DegreeOverflow { .. })
        ));
    }
}
