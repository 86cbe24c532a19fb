use nalgebra::DMatrix;
use num_complex::Complex64;

use super::blocks::transform_blocks;
use super::model::{ErrorKind, ErrorModel};
use crate::error::{Error, Result};
use crate::geom::{Rotation, RotationQuadrature, SpherePoint, SphereQuadrature};
use crate::harmonics::{wigner_small_d_all, HarmonicBasis};

fn circle_angle(u: &Rotation) -> f64 {
    u.circle_angle()
        .unwrap_or_else(|| u.matrix()[(1, 0)].atan2(u.matrix()[(0, 0)]))
}

/// `D^0(u), ..., D^L(u)` for `u in SO(2)` or `SO(3)`.
pub fn big_d_matrices(d: usize, lmax: usize, u: &Rotation) -> Result<Vec<DMatrix<Complex64>>> {
    if u.dim() != d {
        return Err(Error::domain("rotation dimension does not match"));
    }
    match d {
        1 => {
            let a = circle_angle(u);
            Ok((0..=lmax)
                .map(|l| {
                    if l == 0 {
                        return DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
                    }
                    let (s, c) = (l as f64 * a).sin_cos();
                    DMatrix::from_row_slice(2, 2, &[c, -s, s, c].map(|v| Complex64::new(v, 0.0)))
                })
                .collect())
        }
        2 => {
            let (phi, theta, psi) = u.euler_zyz().expect("SO(3) rotations carry Euler angles");
            let ds = wigner_small_d_all(lmax, theta)?;
            Ok(ds
                .iter()
                .enumerate()
                .map(|(l, w)| {
                    let n = 2 * l + 1;
                    let li = l as f64;
                    DMatrix::from_fn(n, n, |i, j| {
                        let mp = i as f64 - li;
                        let m = j as f64 - li;
                        Complex64::from_polar(w.get(i + 1, j + 1), -(mp * phi + m * psi))
                    })
                })
                .collect())
        }
        _ => Err(Error::UnsupportedDimension(d)),
    }
}

/// `D^l(u)` with entries `int conj(B^l_q(ux)) B^l_r(x) dnu(x)`.
pub fn big_d_matrix(d: usize, l: usize, u: &Rotation) -> Result<DMatrix<Complex64>> {
    Ok(big_d_matrices(d, l, u)?.pop().expect("degree l present"))
}

/// Per-degree coefficients `phi^l_q(f) = int f conj(B^l_q) dnu` by
/// quadrature.
pub fn forward_transform<F: Fn(&SpherePoint) -> f64>(
    f: F,
    quad: &SphereQuadrature,
    lmax: usize,
) -> Result<Vec<Vec<Complex64>>> {
    let values: Vec<f64> = quad.nodes().iter().map(f).collect();
    forward_transform_values(&values, quad, lmax)
}

/// [`forward_transform`] from values precomputed at the quadrature nodes.
pub(crate) fn forward_transform_values(
    values: &[f64],
    quad: &SphereQuadrature,
    lmax: usize,
) -> Result<Vec<Vec<Complex64>>> {
    let basis = HarmonicBasis::new(quad.dim(), lmax)?;
    let mut flat = vec![Complex64::new(0.0, 0.0); basis.total_dim()];
    let mut buf = Vec::with_capacity(flat.len());
    for ((x, w), v) in quad.nodes().iter().zip(quad.weights()).zip(values) {
        buf.clear();
        basis.eval_into(x, &mut buf)?;
        let fx = v * w;
        flat.iter_mut()
            .zip(&buf)
            .for_each(|(a, b)| *a += b.conj() * fx);
    }
    Ok((0..=lmax)
        .map(|l| flat[basis.offset(l)..basis.offset(l) + basis.basis_dim(l)].to_vec())
        .collect())
}

/// Largest absolute deviation over `l <= L` between the coefficients of the
/// convolution `g * f`, computed by double quadrature, and
/// `phi~^l(g) phi^l(f)`.
pub fn convolve_check<F: Fn(&SpherePoint) -> f64>(
    g: &ErrorModel,
    f: F,
    quad: &SphereQuadrature,
    rotquad: &RotationQuadrature,
    lmax: usize,
) -> Result<f64> {
    let d = quad.dim();
    if g.dim() != d || rotquad.dim() != d {
        return Err(Error::domain(
            "model, quadrature and rotation rule dimensions differ",
        ));
    }
    let conv_values: Vec<f64> = if let ErrorKind::ErrorFree = g.kind() {
        quad.nodes().iter().map(&f).collect()
    } else {
        let mut rots: Vec<(DMatrix<f64>, f64)> = Vec::with_capacity(rotquad.len());
        let mut err = None;
        rotquad.for_each(|u, w| match g.density(u, Some(lmax)) {
            Ok(gu) if gu.is_finite() => rots.push((u.matrix().transpose(), w * gu)),
            Ok(_) => {}
            Err(e) => err = Some(e),
        });
        if let Some(e) = err {
            return Err(e);
        }
        quad.nodes()
            .iter()
            .map(|z| {
                let zc = nalgebra::DVector::from_column_slice(z.coords());
                let mut acc = 0.0;
                for (ut, w) in &rots {
                    let v = ut * &zc;
                    let p = SpherePoint::from_coords(v.as_slice().to_vec())?;
                    acc += w * f(&p);
                }
                Ok(acc)
            })
            .collect::<Result<_>>()?
    };
    let lhs = forward_transform_values(&conv_values, quad, lmax)?;
    let rhs_f = forward_transform(&f, quad, lmax)?;
    let blocks = transform_blocks(g, lmax)?;
    let mut worst: f64 = 0.0;
    for l in 0..=lmax {
        let b = blocks.block(l);
        for q in 0..lhs[l].len() {
            let r: Complex64 = (0..rhs_f[l].len()).map(|k| b[(q, k)] * rhs_f[l][k]).sum();
            worst = worst.max((lhs[l][q] - r).norm());
        }
    }
    Ok(worst)
}
