use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::model::{ErrorKind, ErrorModel};
use crate::error::{Error, Result};
use crate::geom::{euler_matrix3, gen_r, EulerGrid};
use crate::harmonics::{check_degree, n_dl, wigner_small_d_all};

/// Blocks whose condition number exceeds this are rejected.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Default Euler-grid resolution for numerically transformed models.
const VMF_RESOLUTION: usize = 64;

#[derive(Debug, Clone)]
enum Block {
    Scalar(f64),
    Dense {
        block: DMatrix<Complex64>,
        inverse: DMatrix<Complex64>,
        inverse_norm: f64,
    },
}

/// Transform blocks `phi~^l(f_U)` for `l = 0..=L` with cached inverses.
#[derive(Debug, Clone)]
pub struct TransformBlocks {
    model: ErrorModel,
    blocks: Vec<Block>,
}

impl TransformBlocks {
    pub fn model(&self) -> &ErrorModel {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn max_degree(&self) -> usize {
        self.blocks.len() - 1
    }

    /// `s_l` when the block is `s_l I`.
    pub fn scalar(&self, l: usize) -> Option<f64> {
        match self.blocks[l] {
            Block::Scalar(s) => Some(s),
            Block::Dense { .. } => None,
        }
    }

    pub fn is_scalar(&self) -> bool {
        self.blocks.iter().all(|b| matches!(b, Block::Scalar(_)))
    }

    /// The block `phi~^l` as a dense matrix.
    pub fn block(&self, l: usize) -> DMatrix<Complex64> {
        match &self.blocks[l] {
            Block::Scalar(s) => {
                let n = n_dl(self.dim(), l);
                DMatrix::from_diagonal_element(n, n, Complex64::new(*s, 0.0))
            }
            Block::Dense { block, .. } => block.clone(),
        }
    }

    /// The cached inverse `(phi~^l)^{-1}` as a dense matrix.
    pub fn inverse(&self, l: usize) -> DMatrix<Complex64> {
        match &self.blocks[l] {
            Block::Scalar(s) => {
                let n = n_dl(self.dim(), l);
                DMatrix::from_diagonal_element(n, n, Complex64::new(1.0 / s, 0.0))
            }
            Block::Dense { inverse, .. } => inverse.clone(),
        }
    }

    /// `(phi~^l)^{-1} v`.
    pub fn apply_inverse(&self, l: usize, v: &[Complex64]) -> Vec<Complex64> {
        match &self.blocks[l] {
            Block::Scalar(s) => v.iter().map(|z| z / s).collect(),
            Block::Dense { inverse, .. } => {
                let out = inverse * DVector::from_column_slice(v);
                out.as_slice().to_vec()
            }
        }
    }

    /// `||(phi~^l)^{-1}||_op`.
    pub fn inverse_norm(&self, l: usize) -> f64 {
        match &self.blocks[l] {
            Block::Scalar(s) => 1.0 / s.abs(),
            Block::Dense { inverse_norm, .. } => *inverse_norm,
        }
    }

    /// Blocks restricted to degrees `0..=L`.
    pub fn truncated(&self, lmax: usize) -> Result<Self> {
        if lmax > self.max_degree() {
            return Err(Error::domain(format!(
                "cannot truncate blocks of degree {} to {lmax}",
                self.max_degree()
            )));
        }
        Ok(Self {
            model: self.model.clone(),
            blocks: self.blocks[..=lmax].to_vec(),
        })
    }
}

/// Largest singular value by power iteration on `M* M`.
pub fn operator_norm(m: &DMatrix<Complex64>) -> f64 {
    let n = m.ncols();
    if n == 0 || m.nrows() == 0 {
        return 0.0;
    }
    let mtm = m.adjoint() * m;
    // deterministic start vector with no special alignment
    let mut v = DVector::from_fn(n, |i, _| {
        Complex64::new(
            1.0 + 0.37 * (i as f64 * 1.7).sin(),
            0.11 * (i as f64 * 0.9).cos(),
        )
    });
    v /= Complex64::new(v.norm(), 0.0);
    let mut est = 0.0;
    for _ in 0..100_000 {
        let w = &mtm * &v;
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        let rq = v.dotc(&w).re;
        v = w / Complex64::new(nw, 0.0);
        if (rq - est).abs() <= 1e-14 * rq.abs() {
            est = rq;
            break;
        }
        est = rq;
    }
    est.max(0.0).sqrt()
}

fn dense_block(degree: usize, block: DMatrix<Complex64>) -> Result<Block> {
    let n = block.nrows();
    let inverse = block.clone().try_inverse().ok_or(Error::NotInvertible {
        degree,
        condition: f64::INFINITY,
    })?;
    let inverse_norm = operator_norm(&inverse);
    let condition = operator_norm(&block) * inverse_norm;
    if !condition.is_finite() || condition > CONDITION_LIMIT {
        return Err(Error::NotInvertible { degree, condition });
    }
    let resid = (&block * &inverse - DMatrix::<Complex64>::identity(n, n))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if resid >= 1e-8 {
        return Err(Error::NotInvertible { degree, condition });
    }
    Ok(Block::Dense {
        block,
        inverse,
        inverse_norm,
    })
}

/// Transform blocks of `model` for degrees `0..=L`.
///
/// Closed-form models give scalar blocks. von Mises-Fisher blocks are
/// computed by quadrature of `f_U D^l` (trapezoid on `SO(2)`, Euler-angle
/// product rule on `SO(3)`) and normalised so that `phi~^0 = 1`.
pub fn transform_blocks(model: &ErrorModel, lmax: usize) -> Result<TransformBlocks> {
    let d = model.dim();
    check_degree(d, lmax)?;
    let blocks = match model.kind() {
        ErrorKind::VonMisesFisher { lambda, mean } => {
            let raw = match d {
                1 => vmf_blocks_so2(*lambda, mean.circle_angle().unwrap_or(0.0), lmax),
                2 => vmf_blocks_so3(*lambda, &mean.matrix3(), lmax)?,
                _ => return Err(Error::UnsupportedDimension(d)),
            };
            raw.into_iter()
                .enumerate()
                .map(|(l, b)| {
                    if l == 0 {
                        Ok(Block::Scalar(1.0))
                    } else {
                        dense_block(l, b)
                    }
                })
                .collect::<Result<Vec<_>>>()?
        }
        _ => (0..=lmax)
            .map(|l| {
                let s = model.scalar_symbol(l)?.expect("scalar model");
                // phi~^0 = 1, so 1 / |s_l| plays the role of a condition number
                let condition = 1.0 / s.abs();
                if !condition.is_finite() || condition > CONDITION_LIMIT {
                    Err(Error::NotInvertible {
                        degree: l,
                        condition,
                    })
                } else {
                    Ok(Block::Scalar(s))
                }
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(TransformBlocks {
        model: model.clone(),
        blocks,
    })
}

fn vmf_blocks_so2(lambda: f64, mean_angle: f64, lmax: usize) -> Vec<DMatrix<Complex64>> {
    let m = (4 * lmax + 16).max(256);
    let angles: Vec<f64> = (0..m).map(|j| TAU * j as f64 / m as f64).collect();
    let f: Vec<f64> = angles
        .iter()
        .map(|a| (2.0 * lambda * ((a - mean_angle).cos() - 1.0)).exp())
        .collect();
    let mass: f64 = f.iter().sum();
    (0..=lmax)
        .map(|l| {
            if l == 0 {
                return DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
            }
            let (mut c, mut s) = (0.0, 0.0);
            for (a, fa) in angles.iter().zip(&f) {
                let (sn, cs) = (l as f64 * a).sin_cos();
                c += fa * cs;
                s += fa * sn;
            }
            let (c, s) = (c / mass, s / mass);
            DMatrix::from_row_slice(2, 2, &[c, -s, s, c].map(|v| Complex64::new(v, 0.0)))
        })
        .collect()
}

fn vmf_blocks_so3(
    lambda: f64,
    mean: &[[f64; 3]; 3],
    lmax: usize,
) -> Result<Vec<DMatrix<Complex64>>> {
    let res = VMF_RESOLUTION.max(2 * lmax + 8);
    let grid = EulerGrid::new(res);
    let na = grid.angles.len();
    let lm = lmax as i64;
    let nm = 2 * lmax + 1;
    // e^{-i m a_j}, m = -L..=L
    let phase: Vec<Complex64> = (0..nm)
        .flat_map(|mi| {
            let m = mi as f64 - lm as f64;
            grid.angles
                .iter()
                .map(move |a| Complex64::from_polar(1.0, -m * a))
        })
        .collect();
    let mut out: Vec<DMatrix<Complex64>> = (0..=lmax)
        .map(|l| DMatrix::zeros(2 * l + 1, 2 * l + 1))
        .collect();
    let rot_psi: Vec<[[f64; 3]; 3]> = grid.angles.iter().map(|a| gen_r(*a)).collect();
    let mut fvals = vec![0.0; na * na];
    let mut h = vec![Complex64::new(0.0, 0.0); na * nm];
    for (theta, wt) in grid.thetas.iter().zip(&grid.theta_weights) {
        for (jp, phi) in grid.angles.iter().enumerate() {
            let left = euler_matrix3(*phi, *theta, 0.0);
            // A^T R(phi) S(theta): trace(A^T L R(psi)) = sum_ik (A^T L)_{ik} R_{ki}
            let mut atl = [[0.0; 3]; 3];
            for i in 0..3 {
                for k in 0..3 {
                    atl[i][k] = (0..3).map(|j| mean[j][i] * left[j][k]).sum();
                }
            }
            for (js, r) in rot_psi.iter().enumerate() {
                let mut tr = 0.0;
                for i in 0..3 {
                    for k in 0..3 {
                        tr += atl[i][k] * r[k][i];
                    }
                }
                fvals[jp * na + js] = (lambda * (tr - 3.0)).exp();
            }
        }
        for jp in 0..na {
            for mi in 0..nm {
                let row = &phase[mi * na..(mi + 1) * na];
                h[jp * nm + mi] = fvals[jp * na..(jp + 1) * na]
                    .iter()
                    .zip(row)
                    .map(|(f, p)| p * *f)
                    .sum();
            }
        }
        let ds = wigner_small_d_all(lmax, *theta)?;
        for mpi in 0..nm {
            let row = &phase[mpi * na..(mpi + 1) * na];
            for mi in 0..nm {
                let g: Complex64 = (0..na).map(|jp| row[jp] * h[jp * nm + mi]).sum();
                let (mp, m) = (mpi as i64 - lm, mi as i64 - lm);
                let l0 = mp.unsigned_abs().max(m.unsigned_abs()) as usize;
                for l in l0..=lmax {
                    let li = l as i64;
                    let dv = ds[l].by_order(mp, m);
                    out[l][((mp + li) as usize, (m + li) as usize)] += g * (dv * wt);
                }
            }
        }
    }
    let mass = out[0][(0, 0)].re;
    for b in out.iter_mut() {
        *b /= Complex64::new(mass, 0.0);
    }
    Ok(out)
}
