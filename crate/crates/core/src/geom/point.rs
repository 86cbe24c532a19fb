use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// A point on the unit hypersphere `S^d`, stored as a unit vector in
/// `R^{d+1}` together with its hyperspherical angles.
///
/// The angle convention is
///
/// ```text
/// x_0 = cos(phi) * prod_{k=1}^{d-1} sin(theta_k)
/// x_1 = sin(phi) * prod_{k=1}^{d-1} sin(theta_k)
/// x_j = cos(theta_{j-1}) * prod_{k=j}^{d-1} sin(theta_k)     (2 <= j <= d)
/// ```
///
/// so that for `d = 2` the single polar angle is the colatitude and
/// `x = (cos phi sin theta, sin phi sin theta, cos theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    coords: Vec<f64>,
    phi: f64,
    thetas: Vec<f64>,
}

fn wrap_angle(phi: f64) -> f64 {
    let mut p = phi.rem_euclid(TAU);
    if p >= TAU {
        p = 0.0;
    }
    p
}

impl SpherePoint {
    /// Builds a point from its angles. `phi` must lie in `[0, 2pi)` and each
    /// polar angle in `[0, pi]`; `thetas` must have `dim - 1` entries.
    pub fn from_angles(dim: usize, phi: f64, thetas: &[f64]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("sphere dimension must be at least 1"));
        }
        if thetas.len() != dim - 1 {
            return Err(Error::domain(format!(
                "expected {} polar angles for S^{dim}, got {}",
                dim - 1,
                thetas.len()
            )));
        }
        if !(0.0..TAU).contains(&phi) {
            return Err(Error::domain(format!("azimuth {phi} outside [0, 2pi)")));
        }
        if let Some(t) = thetas.iter().find(|t| !(0.0..=PI).contains(*t)) {
            return Err(Error::domain(format!("polar angle {t} outside [0, pi]")));
        }
        let coords = angles_to_coords(phi, thetas);
        Ok(Self {
            coords,
            phi,
            thetas: thetas.to_vec(),
        })
    }

    /// Builds a point from a nonzero vector, normalising it to unit length.
    pub fn from_coords(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::domain(
                "a point on S^d needs at least two coordinates",
            ));
        }
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::domain(
                "cannot normalise a zero or non-finite vector",
            ));
        }
        let coords: Vec<f64> = coords.into_iter().map(|c| c / norm).collect();
        let (phi, thetas) = coords_to_angles(&coords);
        Ok(Self {
            coords,
            phi,
            thetas,
        })
    }

    /// The "north pole" `(0, ..., 0, 1)`.
    pub fn north_pole(dim: usize) -> Self {
        let mut coords = vec![0.0; dim + 1];
        coords[dim] = 1.0;
        Self::from_coords(coords).expect("unit vector")
    }

    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Azimuth in `[0, 2pi)`.
    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Polar angles `theta_1 .. theta_{d-1}`, each in `[0, pi]`.
    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn to_angles(&self) -> (f64, Vec<f64>) {
        (self.phi, self.thetas.clone())
    }

    pub fn dot(&self, other: &SpherePoint) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b)
            .sum()
    }
}

pub(crate) fn angles_to_coords(phi: f64, thetas: &[f64]) -> Vec<f64> {
    let d = thetas.len() + 1;
    let mut coords = vec![0.0; d + 1];
    // running product of sin(theta_k) for k >= j
    let mut tail = 1.0;
    for j in (2..=d).rev() {
        let t = thetas[j - 2];
        coords[j] = t.cos() * tail;
        tail *= t.sin();
    }
    coords[0] = phi.cos() * tail;
    coords[1] = phi.sin() * tail;
    coords
}

/// Inverse of [`angles_to_coords`]. At singular points (a vanishing lower
/// block) the remaining angles are set to zero.
pub(crate) fn coords_to_angles(coords: &[f64]) -> (f64, Vec<f64>) {
    let d = coords.len() - 1;
    let mut thetas = vec![0.0; d - 1];
    // squared norm of coords[0..j]
    let mut partial: Vec<f64> = Vec::with_capacity(d + 1);
    let mut acc = 0.0;
    for c in coords {
        partial.push(acc);
        acc += c * c;
    }
    let mut singular = false;
    for j in (2..=d).rev() {
        if singular {
            thetas[j - 2] = 0.0;
            continue;
        }
        let lower = partial[j].sqrt();
        thetas[j - 2] = lower.atan2(coords[j]);
        if lower == 0.0 {
            singular = true;
        }
    }
    let phi = if singular || (coords[0] == 0.0 && coords[1] == 0.0) {
        0.0
    } else {
        wrap_angle(coords[1].atan2(coords[0]))
    };
    (phi, thetas)
}
