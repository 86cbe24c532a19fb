use std::f64::consts::{PI, TAU};

use super::point::SpherePoint;
use super::rotation::Rotation;
use crate::error::{Error, Result};

/// Surface area `nu(S^d) = 2 pi^{(d+1)/2} / Gamma((d+1)/2)`.
pub fn sphere_area(d: usize) -> f64 {
    // Recurrence area(S^d) = 2 pi / (d - 1) * area(S^{d-2}).
    match d {
        0 => 2.0,
        1 => TAU,
        _ => TAU / (d as f64 - 1.0) * sphere_area(d - 2),
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss-Chebyshev rule of the second kind for `int_{-1}^{1} f(t) sqrt(1-t^2) dt`.
fn gauss_chebyshev_second(n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = PI / (n as f64 + 1.0);
    (1..=n)
        .rev()
        .map(|k| {
            let a = k as f64 * h;
            (a.cos(), h * a.sin().powi(2))
        })
        .unzip()
}

/// A product quadrature rule on `S^d` with respect to `nu`.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    dim: usize,
    nodes: Vec<SpherePoint>,
    weights: Vec<f64>,
}

impl SphereQuadrature {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[SpherePoint] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(&SpherePoint) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(x))
            .sum()
    }

    /// Weighted sum of precomputed node values.
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}

/// Product rule on `S^d`, `d in {1, 2, 3}`.
///
/// Nodes are ordered with the outermost polar angle slowest and the azimuth
/// fastest. For `d = 2` the rule is Gauss-Legendre in `cos theta`
/// (`resolution` nodes, ascending) times the trapezoid rule in `phi`
/// (`2 * resolution` nodes starting at zero).
pub fn product_quadrature(d: usize, resolution: usize) -> Result<SphereQuadrature> {
    if resolution < 4 {
        return Err(Error::domain(format!(
            "quadrature resolution {resolution} < 4"
        )));
    }
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    match d {
        1 => {
            let w = TAU / resolution as f64;
            for j in 0..resolution {
                let phi = TAU * j as f64 / resolution as f64;
                nodes.push(SpherePoint::from_angles(1, phi, &[])?);
                weights.push(w);
            }
        }
        2 => {
            let (ts, tw) = gauss_legendre(resolution);
            let nphi = 2 * resolution;
            let wphi = TAU / nphi as f64;
            for (t, wt) in ts.iter().zip(&tw) {
                let theta = t.clamp(-1.0, 1.0).acos();
                for j in 0..nphi {
                    let phi = TAU * j as f64 / nphi as f64;
                    nodes.push(SpherePoint::from_angles(2, phi, &[theta])?);
                    weights.push(wt * wphi);
                }
            }
        }
        3 => {
            let (t2, w2) = gauss_chebyshev_second(resolution);
            let (t1, w1) = gauss_legendre(resolution);
            let nphi = 2 * resolution;
            let wphi = TAU / nphi as f64;
            for (a, wa) in t2.iter().zip(&w2) {
                let theta2 = a.clamp(-1.0, 1.0).acos();
                for (b, wb) in t1.iter().zip(&w1) {
                    let theta1 = b.clamp(-1.0, 1.0).acos();
                    for j in 0..nphi {
                        let phi = TAU * j as f64 / nphi as f64;
                        nodes.push(SpherePoint::from_angles(3, phi, &[theta1, theta2])?);
                        weights.push(wa * wb * wphi);
                    }
                }
            }
        }
        _ => return Err(Error::UnsupportedDimension(d)),
    }
    Ok(SphereQuadrature {
        dim: d,
        nodes,
        weights,
    })
}

/// Euler-angle tensor grid on `SO(3)`: trapezoid in `phi` and `psi`,
/// Gauss-Legendre in `cos theta`.
#[derive(Debug, Clone)]
pub(crate) struct EulerGrid {
    pub angles: Vec<f64>,
    pub thetas: Vec<f64>,
    /// Gauss-Legendre weights in `cos theta`, already divided by `8 pi^2`
    /// and multiplied by both trapezoid weights.
    pub theta_weights: Vec<f64>,
}

impl EulerGrid {
    pub fn new(resolution: usize) -> Self {
        let (ts, tw) = gauss_legendre(resolution);
        let na = 2 * resolution;
        let angle_weight = TAU / na as f64;
        let angles = (0..na).map(|j| TAU * j as f64 / na as f64).collect();
        let thetas = ts.iter().map(|t| t.clamp(-1.0, 1.0).acos()).collect();
        let theta_weights = tw
            .iter()
            .map(|w| w * angle_weight * angle_weight / (8.0 * PI * PI))
            .collect();
        Self {
            angles,
            thetas,
            theta_weights,
        }
    }
}

#[derive(Debug, Clone)]
enum RotationLayout {
    Circle {
        count: usize,
    },
    Euler(EulerGrid),
    AxisAngle {
        angles: Vec<f64>,
        angle_weights: Vec<f64>,
        axes: SphereQuadrature,
    },
}

/// Quadrature rule on `SO(d+1)` with respect to the normalised Haar
/// measure. Nodes are generated lazily because Euler grids are large.
#[derive(Debug, Clone)]
pub struct RotationQuadrature {
    dim: usize,
    layout: RotationLayout,
}

impl RotationQuadrature {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        match &self.layout {
            RotationLayout::Circle { count } => *count,
            RotationLayout::Euler(g) => g.angles.len() * g.angles.len() * g.thetas.len(),
            RotationLayout::AxisAngle { angles, axes, .. } => angles.len() * axes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Visits every `(node, weight)` pair in a fixed order.
    pub fn for_each<F: FnMut(&Rotation, f64)>(&self, mut f: F) {
        match &self.layout {
            RotationLayout::Circle { count } => {
                let w = 1.0 / *count as f64;
                for j in 0..*count {
                    f(&Rotation::from_angle(TAU * j as f64 / *count as f64), w);
                }
            }
            RotationLayout::Euler(g) => {
                for (theta, wt) in g.thetas.iter().zip(&g.theta_weights) {
                    for phi in &g.angles {
                        for psi in &g.angles {
                            f(&Rotation::from_euler_unchecked(*phi, *theta, *psi), *wt);
                        }
                    }
                }
            }
            RotationLayout::AxisAngle {
                angles,
                angle_weights,
                axes,
            } => {
                for (r, wr) in angles.iter().zip(angle_weights) {
                    for (a, wa) in axes.nodes().iter().zip(axes.weights()) {
                        let c = a.coords();
                        let u =
                            Rotation::from_axis_angle([c[0], c[1], c[2]], *r).expect("unit axis");
                        f(&u, wr * wa);
                    }
                }
            }
        }
    }

    pub fn nodes(&self) -> Vec<Rotation> {
        let mut out = Vec::with_capacity(self.len());
        self.for_each(|u, _| out.push(u.clone()));
        out
    }

    pub fn weights(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        self.for_each(|_, w| out.push(w));
        out
    }

    pub fn integrate<F: FnMut(&Rotation) -> f64>(&self, mut f: F) -> f64 {
        let mut acc = 0.0;
        self.for_each(|u, w| acc += w * f(u));
        acc
    }
}

/// Euler-angle product rule on `SO(3)`: `2 * resolution` trapezoid nodes in
/// each of `phi_u` and `psi_u`, `resolution` Gauss-Legendre nodes in
/// `cos theta_u`, weight `sin theta_u / (8 pi^2)` absorbed.
pub fn so3_quadrature(resolution: usize) -> Result<RotationQuadrature> {
    if resolution < 4 {
        return Err(Error::domain(format!(
            "quadrature resolution {resolution} < 4"
        )));
    }
    Ok(RotationQuadrature {
        dim: 2,
        layout: RotationLayout::Euler(EulerGrid::new(resolution)),
    })
}

/// Axis-angle product rule on `SO(3)`: Gauss-Legendre in the rotation angle
/// `r in [0, pi]` with the Haar marginal `(1 - cos r) / pi` absorbed, times a
/// product rule over the axis on `S^2`. Suited to class functions that are
/// singular at the identity but integrable against `1 - cos r`.
pub fn so3_axis_angle_quadrature(resolution: usize) -> Result<RotationQuadrature> {
    if resolution < 4 {
        return Err(Error::domain(format!(
            "quadrature resolution {resolution} < 4"
        )));
    }
    let (ts, tw) = gauss_legendre(resolution);
    let angles: Vec<f64> = ts.iter().map(|t| 0.5 * PI * (t + 1.0)).collect();
    let angle_weights = angles
        .iter()
        .zip(&tw)
        .map(|(r, w)| 0.5 * PI * w * (1.0 - r.cos()) / PI)
        .collect();
    let mut axes = product_quadrature(2, resolution)?;
    let area = sphere_area(2);
    axes.weights.iter_mut().for_each(|w| *w /= area);
    Ok(RotationQuadrature {
        dim: 2,
        layout: RotationLayout::AxisAngle {
            angles,
            angle_weights,
            axes,
        },
    })
}

/// Trapezoid rule on `SO(2)` with `resolution` equally spaced angles.
pub fn so2_quadrature(resolution: usize) -> Result<RotationQuadrature> {
    if resolution < 4 {
        return Err(Error::domain(format!(
            "quadrature resolution {resolution} < 4"
        )));
    }
    Ok(RotationQuadrature {
        dim: 1,
        layout: RotationLayout::Circle { count: resolution },
    })
}

/// Fibonacci lattice of `count` nearly uniform points on `S^2`.
pub fn fibonacci_grid(count: usize) -> Vec<SpherePoint> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let a = golden * i as f64;
            SpherePoint::from_coords(vec![rho * a.cos(), rho * a.sin(), z]).expect("unit vector")
        })
        .collect()
}
