use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

use super::point::SpherePoint;
use crate::error::{Error, Result};

const ORTHO_TOL: f64 = 1e-10;

/// Parametric description retained alongside the matrix when available.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RotationParams {
    /// `SO(2)`: counter-clockwise angle.
    Angle(f64),
    /// `SO(3)`: `R(phi) S(theta) R(psi)` with `R` about the third axis and
    /// `S` about the second.
    Euler {
        phi: f64,
        theta: f64,
        psi: f64,
    },
    MatrixOnly,
}

/// An element of `SO(d+1)` acting on `S^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    matrix: DMatrix<f64>,
    params: RotationParams,
}

fn wrap(a: f64) -> f64 {
    let p = a.rem_euclid(TAU);
    if p >= TAU {
        0.0
    } else {
        p
    }
}

/// Rotation by `a` about the third axis.
pub(crate) fn gen_r(a: f64) -> [[f64; 3]; 3] {
    let (s, c) = a.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

/// Rotation by `a` about the second axis.
pub(crate) fn gen_s(a: f64) -> [[f64; 3]; 3] {
    let (s, c) = a.sin_cos();
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

pub(crate) fn mul3(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// `R(phi) S(theta) R(psi)` as a plain 3x3 array.
pub(crate) fn euler_matrix3(phi: f64, theta: f64, psi: f64) -> [[f64; 3]; 3] {
    mul3(&mul3(&gen_r(phi), &gen_s(theta)), &gen_r(psi))
}

/// Inverse of [`euler_matrix3`]; at `theta in {0, pi}` the angle `psi` is
/// set to zero.
pub(crate) fn euler_from_matrix3(m: &[[f64; 3]; 3]) -> (f64, f64, f64) {
    let st = m[0][2].hypot(m[1][2]);
    let theta = st.atan2(m[2][2]);
    if st > 1e-12 {
        let phi = m[1][2].atan2(m[0][2]);
        let psi = m[2][1].atan2(-m[2][0]);
        (wrap(phi), theta, wrap(psi))
    } else if m[2][2] > 0.0 {
        (wrap(m[1][0].atan2(m[0][0])), 0.0, 0.0)
    } else {
        (wrap((-m[1][0]).atan2(-m[0][0])), std::f64::consts::PI, 0.0)
    }
}

impl Rotation {
    pub fn identity(dim: usize) -> Self {
        let params = match dim {
            1 => RotationParams::Angle(0.0),
            2 => RotationParams::Euler {
                phi: 0.0,
                theta: 0.0,
                psi: 0.0,
            },
            _ => RotationParams::MatrixOnly,
        };
        Self {
            matrix: DMatrix::identity(dim + 1, dim + 1),
            params,
        }
    }

    /// `SO(2)` element rotating counter-clockwise by `angle` (any real; it is
    /// wrapped to `[0, 2pi)`).
    pub fn from_angle(angle: f64) -> Self {
        let a = wrap(angle);
        let (s, c) = a.sin_cos();
        Self {
            matrix: DMatrix::from_row_slice(2, 2, &[c, -s, s, c]),
            params: RotationParams::Angle(a),
        }
    }

    /// `SO(3)` element `R(phi) S(theta) R(psi)`; `phi, psi in [0, 2pi)`,
    /// `theta in [0, pi]`.
    pub fn from_euler(phi: f64, theta: f64, psi: f64) -> Result<Self> {
        if !(0.0..TAU).contains(&phi) || !(0.0..TAU).contains(&psi) {
            return Err(Error::domain(format!(
                "Euler angles phi = {phi}, psi = {psi} must lie in [0, 2pi)"
            )));
        }
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(Error::domain(format!(
                "Euler angle theta = {theta} outside [0, pi]"
            )));
        }
        Ok(Self::from_euler_unchecked(phi, theta, psi))
    }

    pub(crate) fn from_euler_unchecked(phi: f64, theta: f64, psi: f64) -> Self {
        let m = euler_matrix3(phi, theta, psi);
        Self {
            matrix: DMatrix::from_fn(3, 3, |i, j| m[i][j]),
            params: RotationParams::Euler { phi, theta, psi },
        }
    }

    /// `SO(3)` rotation by `angle` about the unit vector `axis` (Rodrigues).
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Result<Self> {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::domain(
                "rotation axis must be a nonzero finite vector",
            ));
        }
        let [x, y, z] = [axis[0] / n, axis[1] / n, axis[2] / n];
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        let m = [
            [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
            [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
            [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
        ];
        Ok(Self::from_matrix3(m))
    }

    pub(crate) fn from_matrix3(m: [[f64; 3]; 3]) -> Self {
        let (phi, theta, psi) = euler_from_matrix3(&m);
        Self {
            matrix: DMatrix::from_fn(3, 3, |i, j| m[i][j]),
            params: RotationParams::Euler { phi, theta, psi },
        }
    }

    /// Wraps an arbitrary matrix, checking `M^T M = I` and `det M = 1`.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n < 2 || matrix.ncols() != n {
            return Err(Error::domain("rotation matrix must be square of size >= 2"));
        }
        let defect = (matrix.transpose() * &matrix - DMatrix::identity(n, n)).amax();
        if defect > ORTHO_TOL {
            return Err(Error::domain(format!(
                "matrix is not orthogonal (defect {defect:e})"
            )));
        }
        let det = matrix.determinant();
        if (det - 1.0).abs() > ORTHO_TOL {
            return Err(Error::domain(format!("determinant {det} is not 1")));
        }
        Ok(Self::from_matrix_unchecked(matrix))
    }

    fn from_matrix_unchecked(matrix: DMatrix<f64>) -> Self {
        let params = match matrix.nrows() {
            2 => RotationParams::Angle(wrap(matrix[(1, 0)].atan2(matrix[(0, 0)]))),
            3 => {
                let m = std::array::from_fn(|i| std::array::from_fn(|j| matrix[(i, j)]));
                let (phi, theta, psi) = euler_from_matrix3(&m);
                RotationParams::Euler { phi, theta, psi }
            }
            _ => RotationParams::MatrixOnly,
        };
        Self { matrix, params }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows() - 1
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn params(&self) -> RotationParams {
        self.params
    }

    pub(crate) fn matrix3(&self) -> [[f64; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.matrix[(i, j)]))
    }

    /// Euler angles `(phi, theta, psi)` for `SO(3)`.
    pub fn euler_zyz(&self) -> Option<(f64, f64, f64)> {
        match self.params {
            RotationParams::Euler { phi, theta, psi } => Some((phi, theta, psi)),
            _ => None,
        }
    }

    /// Counter-clockwise angle for `SO(2)`.
    pub fn circle_angle(&self) -> Option<f64> {
        match self.params {
            RotationParams::Angle(a) => Some(a),
            _ => None,
        }
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// Rotation angle `r = arccos((tr - 1) / 2)` in `[0, pi]` for `SO(3)`.
    pub fn rotation_angle(&self) -> f64 {
        ((self.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
    }

    /// Matrix product `self * other`.
    pub fn compose(&self, other: &Rotation) -> Result<Rotation> {
        if self.dim() != other.dim() {
            return Err(Error::domain(
                "cannot compose rotations of different dimension",
            ));
        }
        Ok(Self::from_matrix_unchecked(&self.matrix * &other.matrix))
    }

    pub fn inverse(&self) -> Rotation {
        Self::from_matrix_unchecked(self.matrix.transpose())
    }

    /// `u x`, renormalised to absorb rounding.
    pub fn apply(&self, x: &SpherePoint) -> Result<SpherePoint> {
        if x.dim() != self.dim() {
            return Err(Error::domain(format!(
                "rotation in SO({}) cannot act on S^{}",
                self.dim() + 1,
                x.dim()
            )));
        }
        let v = &self.matrix * DVector::from_column_slice(x.coords());
        SpherePoint::from_coords(v.as_slice().to_vec())
    }
}
