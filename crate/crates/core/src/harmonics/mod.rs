//! Orthonormal hyperspherical harmonic bases and Wigner small-d matrices.

mod legendre;
mod wigner;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geom::{sphere_area, SpherePoint};

pub use legendre::{
    legendre_dim, legendre_dim_all, legendre_dim_explicit, normalized_assoc_legendre,
};
pub(crate) use wigner::wigner_zero_columns;
pub use wigner::{
    wigner_entry_explicit, wigner_small_d, wigner_small_d_all, WignerSmallD, WIGNER_DEGREE_CAP,
};

/// Largest degree accepted for `d >= 3`.
pub const GENERAL_DEGREE_CAP: usize = 64;

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Dimension `N(d, l)` of the degree-`l` harmonic space on `S^d`.
pub fn n_dl(d: usize, l: usize) -> usize {
    assert!(d >= 1, "sphere dimension must be at least 1");
    if l == 0 {
        return 1;
    }
    (binomial(l + d - 1, d - 1) + binomial(l + d - 2, d - 1)) as usize
}

/// Largest supported degree on `S^d`.
pub fn degree_cap(d: usize) -> usize {
    match d {
        1 => usize::MAX / 4,
        2 => WIGNER_DEGREE_CAP,
        _ => GENERAL_DEGREE_CAP,
    }
}

pub(crate) fn check_degree(d: usize, l: usize) -> Result<()> {
    let cap = degree_cap(d);
    if l > cap {
        Err(Error::DegreeOverflow {
            degree: l,
            cap,
            dim: d,
        })
    } else {
        Ok(())
    }
}

/// `(cos(l phi) / sqrt(pi), sin(l phi) / sqrt(pi))` for `l >= 1` on `S^1`.
pub fn eval_basis_d1(l: usize, x: &SpherePoint) -> Vec<Complex64> {
    let a = l as f64 * x.phi();
    let s = 1.0 / PI.sqrt();
    vec![
        Complex64::new(a.cos() * s, 0.0),
        Complex64::new(a.sin() * s, 0.0),
    ]
}

/// `sqrt((2l+1)/4pi) e^{i (q-l-1) phi} d^l_{q(l+1)}(theta)`, `q = 1..=2l+1`.
pub fn eval_basis_d2(l: usize, x: &SpherePoint) -> Result<Vec<Complex64>> {
    check_degree(2, l)?;
    let theta = x.thetas()[0];
    let cols = wigner_zero_columns(l, theta)?;
    Ok(d2_degree(l, x.phi(), &cols[l]))
}

fn d2_degree(l: usize, phi: f64, col: &[f64]) -> Vec<Complex64> {
    let norm = ((2 * l + 1) as f64 / (4.0 * PI)).sqrt();
    col.iter()
        .enumerate()
        .map(|(i, v)| {
            let m = i as f64 - l as f64;
            Complex64::from_polar(norm * v, m * phi)
        })
        .collect()
}

/// Recursive basis on `S^d`, `d >= 3`: entries ordered by `j` ascending
/// and, within `j`, by the `S^{d-1}` index ascending.
pub fn eval_basis_general(d: usize, l: usize, x: &SpherePoint) -> Result<Vec<Complex64>> {
    if d < 3 {
        return Err(Error::domain("eval_basis_general needs d >= 3"));
    }
    check_degree(d, l)?;
    if x.dim() != d {
        return Err(Error::domain("point dimension does not match"));
    }
    let thetas = x.thetas();
    let t = thetas[d - 2].cos();
    let s = SpherePoint::from_angles(d - 1, x.phi(), &thetas[..d - 2])?;
    let mut out = Vec::with_capacity(n_dl(d, l));
    for j in 0..=l {
        let p = normalized_assoc_legendre(l, d, j, t);
        for b in eval_basis(d - 1, j, &s)? {
            out.push(b * p);
        }
    }
    debug_assert_eq!(out.len(), n_dl(d, l));
    Ok(out)
}

/// `B^l(x)` on `S^d`, dispatching on `d`.
pub fn eval_basis(d: usize, l: usize, x: &SpherePoint) -> Result<Vec<Complex64>> {
    if x.dim() != d {
        return Err(Error::domain(format!(
            "point lies on S^{} but the basis is for S^{d}",
            x.dim()
        )));
    }
    check_degree(d, l)?;
    if l == 0 {
        return Ok(vec![Complex64::new(sphere_area(d).powf(-0.5), 0.0)]);
    }
    match d {
        1 => Ok(eval_basis_d1(l, x)),
        2 => eval_basis_d2(l, x),
        _ => eval_basis_general(d, l, x),
    }
}

/// Index map of complex conjugation within a degree block:
/// `conj(B^l_q) = sign_q * B^l_{target_q}` (0-based targets).
pub fn conjugation_map(d: usize, l: usize) -> Vec<(usize, f64)> {
    match (d, l) {
        (_, 0) | (1, _) => (0..n_dl(d, l)).map(|q| (q, 1.0)).collect(),
        (2, _) => (0..=2 * l)
            .map(|q| {
                let m = q as i64 - l as i64;
                let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                (2 * l - q, sign)
            })
            .collect(),
        _ => {
            let mut out = Vec::with_capacity(n_dl(d, l));
            let mut offset = 0;
            for j in 0..=l {
                let inner = conjugation_map(d - 1, j);
                let len = inner.len();
                out.extend(inner.into_iter().map(|(t, s)| (offset + t, s)));
                offset += len;
            }
            out
        }
    }
}

/// Basis of all degrees `0..=L` on `S^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HarmonicBasis {
    dim: usize,
    max_degree: usize,
}

impl HarmonicBasis {
    pub fn new(dim: usize, max_degree: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::UnsupportedDimension(0));
        }
        check_degree(dim, max_degree)?;
        Ok(Self { dim, max_degree })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn basis_dim(&self, l: usize) -> usize {
        n_dl(self.dim, l)
    }

    /// Total number of basis functions over all degrees.
    pub fn total_dim(&self) -> usize {
        (0..=self.max_degree).map(|l| self.basis_dim(l)).sum()
    }

    /// `B^l(x)` for every `l <= L`, concatenated in degree order.
    pub fn eval_flat(&self, x: &SpherePoint) -> Result<Vec<Complex64>> {
        let mut out = Vec::with_capacity(self.total_dim());
        self.eval_into(x, &mut out)?;
        Ok(out)
    }

    /// Appends `B^0(x), ..., B^L(x)` to `out`.
    pub fn eval_into(&self, x: &SpherePoint, out: &mut Vec<Complex64>) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::domain("point dimension does not match the basis"));
        }
        let c0 = Complex64::new(sphere_area(self.dim).powf(-0.5), 0.0);
        match self.dim {
            1 => {
                out.push(c0);
                let s = 1.0 / PI.sqrt();
                let (s1, c1) = x.phi().sin_cos();
                let (mut sn, mut cn) = (0.0, 1.0);
                for _ in 1..=self.max_degree {
                    let c = cn * c1 - sn * s1;
                    sn = sn * c1 + cn * s1;
                    cn = c;
                    out.push(Complex64::new(cn * s, 0.0));
                    out.push(Complex64::new(sn * s, 0.0));
                }
            }
            2 => {
                let cols = wigner_zero_columns(self.max_degree, x.thetas()[0])?;
                out.push(c0);
                for (l, col) in cols.iter().enumerate().skip(1) {
                    out.extend(d2_degree(l, x.phi(), col));
                }
            }
            d => {
                for l in 0..=self.max_degree {
                    out.extend(eval_basis(d, l, x)?);
                }
            }
        }
        Ok(())
    }

    /// Per-degree vectors `B^l(x)`.
    pub fn eval(&self, x: &SpherePoint) -> Result<Vec<Vec<Complex64>>> {
        let flat = self.eval_flat(x)?;
        let mut out = Vec::with_capacity(self.max_degree + 1);
        let mut k = 0;
        for l in 0..=self.max_degree {
            let n = self.basis_dim(l);
            out.push(flat[k..k + n].to_vec());
            k += n;
        }
        Ok(out)
    }

    /// Start offset of degree `l` in the flat layout.
    pub fn offset(&self, l: usize) -> usize {
        (0..l).map(|k| self.basis_dim(k)).sum()
    }
}
