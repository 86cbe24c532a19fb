use crate::error::{Error, Result};

/// Profile of the empirical log-likelihood ratio over a grid of `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElProfile {
    pub thetas: Vec<f64>,
    pub log_ratio: Vec<f64>,
    pub lambdas: Vec<Option<f64>>,
}

/// `(log EL, lambda)` for estimating-function values `F_i`.
///
/// Solves `sum F_i / (1 + lambda F_i) = 0` on the interval where every
/// weight `1 / (n (1 + lambda F_i))` lies in `(0, 1]`. When zero is outside
/// the convex hull of the `F_i` the ratio is zero and the result is
/// `(-inf, None)`.
pub fn el_log_ratio(f: &[f64]) -> Result<(f64, Option<f64>)> {
    let n = f.len();
    if n < 2 {
        return Err(Error::domain(
            "empirical likelihood needs at least 2 values",
        ));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("estimating-function values must be finite"));
    }
    let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Ok((0.0, Some(0.0)));
    }
    let g: Vec<f64> = f.iter().map(|v| v / scale).collect();
    let (min, max) = g
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(*v), b.max(*v))
        });
    if min >= 0.0 || max <= 0.0 {
        return Ok((f64::NEG_INFINITY, None));
    }
    let nf = n as f64;
    let eval = |lam: f64| {
        let (mut s, mut ds) = (0.0, 0.0);
        for v in &g {
            let w = 1.0 / (1.0 + lam * v);
            s += v * w;
            ds -= (v * w).powi(2);
        }
        (s, ds)
    };
    // sum F/(1 + lambda F) is decreasing on (lo, hi)
    let (mut lo, mut hi) = ((1.0 / nf - 1.0) / max, (1.0 / nf - 1.0) / min);
    let mut lam = 0.0;
    for _ in 0..200 {
        let (s, ds) = eval(lam);
        if s.abs() < 1e-13 * nf {
            break;
        }
        if s > 0.0 {
            lo = lam;
        } else {
            hi = lam;
        }
        let step = lam - s / ds;
        lam = if step > lo && step < hi {
            step
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-15 * (1.0 + lam.abs()) {
            break;
        }
    }
    let log_el = -g.iter().map(|v| (lam * v).ln_1p()).sum::<f64>();
    Ok((log_el, Some(lam / scale)))
}

/// Computes the profile of `theta -> log EL(theta)` for `F = make_f(theta)`.
pub fn el_profile<F: Fn(f64) -> Vec<f64>>(make_f: F, thetas: &[f64]) -> Result<ElProfile> {
    let mut log_ratio = Vec::with_capacity(thetas.len());
    let mut lambdas = Vec::with_capacity(thetas.len());
    for &t in thetas {
        let (l, lam) = el_log_ratio(&make_f(t))?;
        log_ratio.push(l);
        lambdas.push(lam);
    }
    Ok(ElProfile {
        thetas: thetas.to_vec(),
        log_ratio,
        lambdas,
    })
}

/// Estimating function affine in `theta`: `F_i(theta) = a_i - theta b_i`.
pub(crate) struct AffineF<'a> {
    pub a: &'a [f64],
    pub b: &'a [f64],
}

impl AffineF<'_> {
    fn at(&self, theta: f64) -> Vec<f64> {
        self.a
            .iter()
            .zip(self.b)
            .map(|(a, b)| a - theta * b)
            .collect()
    }

    /// `-2 log EL(theta)` and its derivative in `theta`, both infinite when
    /// infeasible.
    pub(crate) fn deviance(&self, theta: f64) -> Result<(f64, f64)> {
        let f = self.at(theta);
        match el_log_ratio(&f)? {
            (l, Some(lam)) => {
                // envelope theorem: d/dtheta log EL = lam sum b_i / (1 + lam F_i)
                let dl: f64 = f
                    .iter()
                    .zip(self.b)
                    .map(|(f, b)| lam * b / (1.0 + lam * f))
                    .sum();
                Ok((-2.0 * l, -2.0 * dl))
            }
            (_, None) => Ok((f64::INFINITY, f64::NAN)),
        }
    }

    /// One endpoint of `{theta : -2 log EL(theta) <= crit}` searching from
    /// `center` in direction `dir`. Returns the endpoint and whether it is
    /// unbounded or sits at the feasibility boundary.
    pub(crate) fn endpoint(
        &self,
        center: f64,
        step: f64,
        dir: f64,
        crit: f64,
    ) -> Result<(f64, bool)> {
        let mut good = (center, self.deviance(center)?);
        if good.1 .0 > crit {
            return Ok((center, true));
        }
        let mut h = step;
        let mut bad = None;
        for _ in 0..80 {
            let t = center + dir * h;
            let v = self.deviance(t)?;
            if v.0 <= crit {
                good = (t, v);
                h *= 2.0;
            } else {
                bad = Some((t, v));
                break;
            }
        }
        let Some(mut bad) = bad else {
            return Ok((dir * f64::INFINITY, true));
        };
        // safeguarded Newton on dev(theta) - crit inside [good, bad]
        let mut cur = good;
        for _ in 0..200 {
            if (bad.0 - good.0).abs() <= 1e-10 * (1.0 + good.0.abs()) {
                break;
            }
            let (lo, hi) = (good.0.min(bad.0), good.0.max(bad.0));
            let newton = cur.0 - (cur.1 .0 - crit) / cur.1 .1;
            let t = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (good.0 + bad.0)
            };
            let v = self.deviance(t)?;
            if (v.0 - crit).abs() < 1e-12 {
                good = (t, v);
                break;
            }
            if v.0 <= crit {
                good = (t, v);
            } else {
                bad = (t, v);
            }
            cur = if v.0.is_finite() { (t, v) } else { good };
        }
        // the region ends at the feasibility boundary rather than a crossing
        let boundary =
            bad.1 .0.is_infinite() && (bad.0 - good.0).abs() <= 1e-8 * (1.0 + good.0.abs());
        Ok((good.0, boundary))
    }
}
