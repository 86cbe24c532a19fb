use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::point::SpherePoint;
use super::rotation::Rotation;
use crate::error::{Error, Result};
use crate::fourier::{ErrorKind, ErrorModel};

const TABLE_POINTS: usize = 4096;

/// Mixes a base seed with two stream indices (SplitMix64 finaliser).
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Tabulated inverse CDF of a nonnegative density on `[a, b]`: cumulative
/// trapezoid over 4096 points, inverted by monotone linear interpolation.
#[derive(Debug, Clone)]
pub struct InverseCdfTable {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

impl InverseCdfTable {
    pub fn new<F: Fn(f64) -> f64>(pdf: F, a: f64, b: f64) -> Result<Self> {
        if !(b > a) {
            return Err(Error::domain("inverse-CDF table needs a < b"));
        }
        let h = (b - a) / (TABLE_POINTS - 1) as f64;
        let xs: Vec<f64> = (0..TABLE_POINTS).map(|i| a + h * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| pdf(x).max(0.0)).collect();
        if ys.iter().any(|y| !y.is_finite()) {
            return Err(Error::domain("density is not finite on the table range"));
        }
        let mut cdf = Vec::with_capacity(TABLE_POINTS);
        cdf.push(0.0);
        for i in 1..TABLE_POINTS {
            let prev = cdf[i - 1];
            cdf.push(prev + 0.5 * h * (ys[i - 1] + ys[i]));
        }
        let total = cdf[TABLE_POINTS - 1];
        if !(total > 0.0) {
            return Err(Error::domain("density has zero mass on the table range"));
        }
        cdf.iter_mut().for_each(|c| *c /= total);
        Ok(Self { xs, cdf })
    }

    /// Maps `p in [0, 1]` to the tabulated quantile.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let i = self
            .cdf
            .partition_point(|c| *c < p)
            .clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let t = if c1 > c0 { (p - c0) / (c1 - c0) } else { 0.5 };
        self.xs[i - 1] + t * (self.xs[i] - self.xs[i - 1])
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

/// Orthonormal basis of the tangent space at the unit vector `m`.
fn tangent_frame(m: &[f64]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
    let mut basis: Vec<Vec<f64>> = vec![m.to_vec()];
    for k in 0..n {
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v.clone());
            frame.push(v);
            if frame.len() == n - 1 {
                break;
            }
        }
    }
    frame
}

/// Draws `n` points from the von Mises-Fisher density proportional to
/// `exp(kappa mean^T x)` on `S^1` or `S^2`.
pub fn sample_vmf_sphere(
    mean: &SpherePoint,
    kappa: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<SpherePoint>> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::domain(format!("concentration {kappa} must be >= 0")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = mean.coords();
    match mean.dim() {
        1 => {
            let table = InverseCdfTable::new(|a| (kappa * (a.cos() - 1.0)).exp(), -PI, PI)?;
            let base = m[1].atan2(m[0]);
            (0..n)
                .map(|_| {
                    let a = base + table.sample(&mut rng);
                    SpherePoint::from_coords(vec![a.cos(), a.sin()])
                })
                .collect()
        }
        2 => {
            let frame = tangent_frame(m);
            (0..n)
                .map(|_| {
                    let xi: f64 = rng.random();
                    let w = if kappa < 1e-8 {
                        2.0 * xi - 1.0
                    } else {
                        (1.0 + (xi + (1.0 - xi) * (-2.0 * kappa).exp()).ln() / kappa)
                            .clamp(-1.0, 1.0)
                    };
                    let a = TAU * rng.random::<f64>();
                    let rho = (1.0 - w * w).max(0.0).sqrt();
                    let (s, c) = a.sin_cos();
                    let v: Vec<f64> = (0..3)
                        .map(|k| w * m[k] + rho * (c * frame[0][k] + s * frame[1][k]))
                        .collect();
                    SpherePoint::from_coords(v)
                })
                .collect()
        }
        d => Err(Error::UnsupportedDimension(d)),
    }
}

fn random_unit3<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.sample::<f64, _>(StandardNormal));
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-12 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Haar-uniform element of `SO(3)` from a uniform unit quaternion.
pub fn sample_haar_so3<R: Rng + ?Sized>(rng: &mut R) -> Rotation {
    let q: [f64; 4] = loop {
        let v: [f64; 4] = std::array::from_fn(|_| rng.sample::<f64, _>(StandardNormal));
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            break std::array::from_fn(|k| v[k] / n);
        }
    };
    let [w, x, y, z] = q;
    Rotation::from_matrix3([
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ])
}

/// Draws `n` i.i.d. rotations from `model`.
///
/// `SO(2)` models use a tabulated inverse CDF of the angle density. On
/// `SO(3)` class functions are sampled as a uniform axis together with an
/// angle drawn from `f(r) (1 - cos r) / pi`; Rosenthal with integer `p`
/// composes `p` rotations by `theta` about independent uniform axes; von
/// Mises-Fisher uses rejection from Haar proposals.
pub fn sample_error(model: &ErrorModel, n: usize, seed: u64) -> Result<Vec<Rotation>> {
    let d = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if let ErrorKind::ErrorFree = model.kind() {
        return Ok(vec![Rotation::identity(d); n]);
    }
    match d {
        1 => {
            let table = InverseCdfTable::new(|a| model.so2_density(a).unwrap_or(0.0), 0.0, TAU)?;
            Ok((0..n)
                .map(|_| Rotation::from_angle(table.sample(&mut rng)))
                .collect())
        }
        2 => match model.kind() {
            ErrorKind::VonMisesFisher { lambda, mean } => {
                let at = mean.inverse();
                let mut out = Vec::with_capacity(n);
                while out.len() < n {
                    let u = sample_haar_so3(&mut rng);
                    let t = (at.matrix() * u.matrix()).trace();
                    if rng.random::<f64>() < (lambda * (t - 3.0)).exp() {
                        out.push(u);
                    }
                }
                Ok(out)
            }
            ErrorKind::Rosenthal { theta, p } => {
                if p.fract() != 0.0 {
                    return Err(Error::UnsupportedModel(format!(
                        "Rosenthal sampling needs an integer power, got p = {p}"
                    )));
                }
                let k = *p as usize;
                (0..n)
                    .map(|_| {
                        let mut u = Rotation::identity(2);
                        for _ in 0..k {
                            let v = Rotation::from_axis_angle(random_unit3(&mut rng), *theta)?;
                            u = u.compose(&v)?;
                        }
                        Ok(u)
                    })
                    .collect()
            }
            _ => {
                let table =
                    InverseCdfTable::new(|r| model.so3_angle_marginal(r).unwrap_or(0.0), 0.0, PI)?;
                (0..n)
                    .map(|_| {
                        let axis = random_unit3(&mut rng);
                        let r = table.sample(&mut rng);
                        Rotation::from_axis_angle(axis, r)
                    })
                    .collect()
            }
        },
        _ => Err(Error::UnsupportedModel(format!(
            "sampling {} errors on SO({}) is not supported",
            model.name(),
            d + 1
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_resultant(points: &[SpherePoint]) -> Vec<f64> {
        let dim = points[0].coords().len();
        let mut m = vec![0.0; dim];
        for p in points {
            m.iter_mut().zip(p.coords()).for_each(|(a, b)| *a += b);
        }
        m.iter().map(|v| v / points.len() as f64).collect()
    }

    #[test]
    fn seeds_are_distinct_and_deterministic() {
        assert_eq!(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
        assert_ne!(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
        assert_ne!(derive_seed(1, 0, 0), derive_seed(2, 0, 0));
    }

    #[test]
    fn inverse_cdf_of_uniform_is_linear() {
        let t = InverseCdfTable::new(|_| 1.0, 0.0, 2.0).unwrap();
        for p in [0.0, 0.1, 0.5, 0.93, 1.0] {
            assert!((t.quantile(p) - 2.0 * p).abs() < 1e-12);
        }
        assert!(InverseCdfTable::new(|_| 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn uniform_vmf_has_small_resultant() {
        for d in [1, 2] {
            let pts = sample_vmf_sphere(&SpherePoint::north_pole(d), 0.0, 10_000, 3).unwrap();
            let r: f64 = mean_resultant(&pts)
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt();
            assert!(r < 0.05);
        }
    }

    #[test]
    fn weak_vmf_mean_direction() {
        let s = 1.0 / 3f64.sqrt();
        let mean = SpherePoint::from_coords(vec![s, s, s]).unwrap();
        let pts = sample_vmf_sphere(&mean, 0.1, 100_000, 11).unwrap();
        let m = mean_resultant(&pts);
        let norm = m.iter().map(|v| v * v).sum::<f64>().sqrt();
        let cos = m.iter().zip(mean.coords()).map(|(a, b)| a * b).sum::<f64>() / norm;
        assert!(cos.acos().to_degrees() < 10.0);
    }

    #[test]
    fn concentrated_vmf_stays_close() {
        for d in [1, 2] {
            let mean = SpherePoint::from_angles(d, 1.0, &vec![0.8; d - 1]).unwrap();
            let pts = sample_vmf_sphere(&mean, 100.0, 5_000, 5).unwrap();
            assert!(pts
                .iter()
                .all(|p| p.dot(&mean).clamp(-1.0, 1.0).acos() < 30f64.to_radians()));
        }
        assert!(sample_vmf_sphere(&SpherePoint::north_pole(2), -1.0, 1, 0).is_err());
    }

    #[test]
    fn error_free_gives_identities() {
        let m = ErrorModel::error_free(2).unwrap();
        let us = sample_error(&m, 5, 0).unwrap();
        assert!(us.iter().all(|u| *u == Rotation::identity(2)));
    }

    #[test]
    fn haar_sampler_trace_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 100_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let t = sample_haar_so3(&mut rng).trace();
            s1 += t;
            s2 += t * t;
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        // E tr = 0, Var tr = 1 under Haar
        assert!(mean.abs() < 4.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn vmf_rotations_concentrate() {
        let m = ErrorModel::von_mises_fisher(2, 2.0, Rotation::identity(2)).unwrap();
        let us = sample_error(&m, 2_000, 1).unwrap();
        let mean: f64 = us.iter().map(|u| u.trace()).sum::<f64>() / us.len() as f64;
        // Haar mean of the trace is 0
        assert!(mean > 1.0);
    }

    #[test]
    fn non_integer_rosenthal_is_unsupported() {
        let m = ErrorModel::rosenthal(2, 1.0, 1.5).unwrap();
        assert!(matches!(
            sample_error(&m, 1, 0),
            Err(Error::UnsupportedModel(_))
        ));
    }
}
