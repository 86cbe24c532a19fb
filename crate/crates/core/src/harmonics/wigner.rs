use crate::error::{Error, Result};

/// Largest degree accepted for `S^2` and `SO(3)` evaluations.
pub const WIGNER_DEGREE_CAP: usize = 128;

/// `ln n!` for `n` up to `2 * WIGNER_DEGREE_CAP + 1`, summed exactly in order.
fn ln_factorial(n: usize) -> f64 {
    thread_local! {
        static TABLE: Vec<f64> = {
            let mut t = vec![0.0; 2 * WIGNER_DEGREE_CAP + 2];
            for k in 1..t.len() {
                t[k] = t[k - 1] + (k as f64).ln();
            }
            t
        };
    }
    TABLE.with(|t| {
        t.get(n)
            .copied()
            .unwrap_or_else(|| libm::lgamma(n as f64 + 1.0))
    })
}

fn check_degree(l: usize) -> Result<()> {
    if l > WIGNER_DEGREE_CAP {
        Err(Error::DegreeOverflow {
            degree: l,
            cap: WIGNER_DEGREE_CAP,
            dim: 2,
        })
    } else {
        Ok(())
    }
}

/// `k ln x`, with `0 ln 0 = 0`.
fn pow_ln(x: f64, k: i64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * x.ln()
    }
}

/// One entry of `d^l(theta)` from the explicit alternating sum, with 1-based
/// indices `q, r in 1..=2l+1`. Accurate for small `l` only; used to seed the
/// recurrence and as a test oracle.
pub fn wigner_entry_explicit(l: usize, q: usize, r: usize, theta: f64) -> f64 {
    let (l, q, r) = (l as i64, q as i64, r as i64);
    let mp = q - l - 1;
    let m = r - l - 1;
    let lnc = 0.5
        * (ln_factorial((l - mp) as usize)
            + ln_factorial((l + mp) as usize)
            + ln_factorial((l - m) as usize)
            + ln_factorial((l + m) as usize));
    let (c, s) = ((theta / 2.0).cos().abs(), (theta / 2.0).sin().abs());
    let kmin = 0.max(m - mp);
    let kmax = (l - mp).min(l + m);
    let mut acc = 0.0;
    for k in kmin..=kmax {
        let cp = 2 * l - 2 * k + m - mp;
        let sp = 2 * k + mp - m;
        if (cp > 0 && c == 0.0) || (sp > 0 && s == 0.0) {
            continue;
        }
        let ln_den = ln_factorial((l - mp - k) as usize)
            + ln_factorial((l + m - k) as usize)
            + ln_factorial((k + mp - m) as usize)
            + ln_factorial(k as usize);
        let mag = (lnc - ln_den + pow_ln(c, cp) + pow_ln(s, sp)).exp();
        let sign = if (k + mp - m).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        };
        acc += sign * mag;
    }
    acc
}

/// Values `d^J_{mp, m}(theta)` for `J = J0..=lmax`, `J0 = max(|mp|, |m|)`,
/// by the three-term recurrence in `J` seeded with the single-term
/// explicit value at `J0`.
pub(crate) fn wigner_run(mp: i64, m: i64, lmax: usize, theta: f64) -> Vec<f64> {
    let j0 = mp.unsigned_abs().max(m.unsigned_abs()) as usize;
    if j0 > lmax {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(lmax - j0 + 1);
    let q = (mp + j0 as i64 + 1) as usize;
    let r = (m + j0 as i64 + 1) as usize;
    out.push(wigner_entry_explicit(j0, q, r, theta));
    let ct = theta.cos();
    let (mf, nf) = (mp as f64, m as f64);
    let mut prev = 0.0;
    for j in j0..lmax {
        let jf = j as f64;
        let j1 = jf + 1.0;
        let denom = ((j1 * j1 - mf * mf) * (j1 * j1 - nf * nf)).sqrt();
        let a = j1 * (2.0 * jf + 1.0) / denom;
        let shift = if mp == 0 || m == 0 {
            0.0
        } else {
            mf * nf / (jf * j1)
        };
        let cur = *out.last().expect("seeded");
        let mut next = a * (ct - shift) * cur;
        if j > j0 {
            let b = j1 * ((jf * jf - mf * mf) * (jf * jf - nf * nf)).sqrt() / (jf * denom);
            next -= b * prev;
        }
        prev = cur;
        out.push(next);
    }
    out
}

/// The real `(2l+1) x (2l+1)` matrix `d^l(theta)`, indices `1..=2l+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerSmallD {
    degree: usize,
    data: Vec<f64>,
}

impl WignerSmallD {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn size(&self) -> usize {
        2 * self.degree + 1
    }

    /// Entry `d^l_{qr}` with 1-based indices.
    pub fn get(&self, q: usize, r: usize) -> f64 {
        self.data[(q - 1) * self.size() + (r - 1)]
    }

    /// Entry by classical orders `mp, m in -l..=l`.
    pub fn by_order(&self, mp: i64, m: i64) -> f64 {
        let l = self.degree as i64;
        self.data[((mp + l) * (2 * l + 1) + (m + l)) as usize]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.size())
    }
}

/// `d^l(theta)` for a single degree.
pub fn wigner_small_d(l: usize, theta: f64) -> Result<WignerSmallD> {
    Ok(wigner_small_d_all(l, theta)?
        .pop()
        .expect("degree l present"))
}

/// `d^0(theta), ..., d^lmax(theta)` in one pass of the recurrence.
pub fn wigner_small_d_all(lmax: usize, theta: f64) -> Result<Vec<WignerSmallD>> {
    check_degree(lmax)?;
    if !theta.is_finite() {
        return Err(Error::domain("Wigner angle must be finite"));
    }
    let mut out: Vec<WignerSmallD> = (0..=lmax)
        .map(|l| WignerSmallD {
            degree: l,
            data: vec![0.0; (2 * l + 1) * (2 * l + 1)],
        })
        .collect();
    let lm = lmax as i64;
    for mp in -lm..=lm {
        for m in -lm..=lm {
            let j0 = mp.unsigned_abs().max(m.unsigned_abs()) as usize;
            for (k, v) in wigner_run(mp, m, lmax, theta).into_iter().enumerate() {
                let l = j0 + k;
                let li = l as i64;
                let idx = ((mp + li) * (2 * li + 1) + (m + li)) as usize;
                out[l].data[idx] = v;
            }
        }
    }
    Ok(out)
}

/// Column `d^l_{m', 0}(theta)` for `m' = -l..=l` and all `l <= lmax`,
/// returned as `out[l][m' + l]`.
pub(crate) fn wigner_zero_columns(lmax: usize, theta: f64) -> Result<Vec<Vec<f64>>> {
    check_degree(lmax)?;
    let mut out: Vec<Vec<f64>> = (0..=lmax).map(|l| vec![0.0; 2 * l + 1]).collect();
    let lm = lmax as i64;
    for mp in 0..=lm {
        let run = wigner_run(mp, 0, lmax, theta);
        let sign = if mp % 2 == 0 { 1.0 } else { -1.0 };
        for (k, v) in run.into_iter().enumerate() {
            let l = mp as usize + k;
            out[l][(l as i64 + mp) as usize] = v;
            // d^l_{-m', 0} = (-1)^{m'} d^l_{m', 0}
            out[l][(l as i64 - mp) as usize] = sign * v;
        }
    }
    Ok(out)
}
