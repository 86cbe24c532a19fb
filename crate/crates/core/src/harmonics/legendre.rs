/// `ln Gamma(k / 2)` for a positive integer `k`, summed exactly from
/// `Gamma(1) = 1` and `Gamma(1/2) = sqrt(pi)`.
pub(crate) fn ln_gamma_half(k: usize) -> f64 {
    assert!(k > 0, "Gamma has a pole at zero");
    let mut acc = if k.is_multiple_of(2) {
        0.0
    } else {
        0.5 * std::f64::consts::PI.ln()
    };
    let mut x = if k.is_multiple_of(2) { 1.0 } else { 0.5 };
    let target = k as f64 / 2.0;
    while x < target {
        acc += x.ln();
        x += 1.0;
    }
    acc
}

/// Legendre polynomial `P_{n,D}(t)` of dimension `D >= 2`, normalised by
/// `P_{n,D}(1) = 1`, via the three-term recurrence.
pub fn legendre_dim(n: usize, dim: usize, t: f64) -> f64 {
    let df = dim as f64;
    let (mut p0, mut p1) = (1.0, t);
    if n == 0 {
        return p0;
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + df - 2.0) * t * p1 - kf * p0) / (kf + df - 2.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// `P_{0,D}(t), ..., P_{L,D}(t)` in one recurrence pass.
pub fn legendre_dim_all(lmax: usize, dim: usize, t: f64) -> Vec<f64> {
    let df = dim as f64;
    let mut out = Vec::with_capacity(lmax + 1);
    out.push(1.0);
    if lmax >= 1 {
        out.push(t);
    }
    for k in 1..lmax {
        let kf = k as f64;
        let next = ((2.0 * kf + df - 2.0) * t * out[k] - kf * out[k - 1]) / (kf + df - 2.0);
        out.push(next);
    }
    out
}

/// The explicit finite-sum form of `P_{n,D}`, used as an oracle for small
/// `n`.
pub fn legendre_dim_explicit(n: usize, dim: usize, t: f64) -> f64 {
    let ln_nfact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
    let ln_gd = ln_gamma_half(dim - 1);
    let mut acc = 0.0;
    for k in 0..=n / 2 {
        let ln_kf: f64 = (1..=k).map(|j| (j as f64).ln()).sum();
        let ln_rest: f64 = (1..=n - 2 * k).map(|j| (j as f64).ln()).sum();
        let ln_mag = ln_nfact + ln_gd
            - k as f64 * 4f64.ln()
            - ln_kf
            - ln_rest
            - ln_gamma_half(2 * k + dim - 1);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * ln_mag.exp() * (1.0 - t * t).powi(k as i32) * t.powi((n - 2 * k) as i32);
    }
    acc
}

/// Normalised associated Legendre function `P~_{l,d+1,j}(t)` for `S^d`:
///
/// ```text
/// ((2l+d-1) (l+d+j-2)!)^{1/2} (1-t^2)^{j/2}
/// ----------------------------------------- P_{l-j, d+1+2j}(t)
///   2^{(d-1)/2+j} ((l-j)!)^{1/2} Gamma(j+d/2)
/// ```
pub fn normalized_assoc_legendre(l: usize, d: usize, j: usize, t: f64) -> f64 {
    debug_assert!(j <= l && d >= 2);
    let ln_fact = |n: usize| -> f64 { (1..=n).map(|k| (k as f64).ln()).sum() };
    let ln_c = 0.5 * ((2 * l + d - 1) as f64).ln() + 0.5 * ln_fact(l + d + j - 2)
        - ((d as f64 - 1.0) / 2.0 + j as f64) * 2f64.ln()
        - 0.5 * ln_fact(l - j)
        - ln_gamma_half(2 * j + d);
    let w = (1.0 - t * t).max(0.0);
    let ln_w = if j == 0 { 0.0 } else { 0.5 * j as f64 * w.ln() };
    (ln_c + ln_w).exp() * legendre_dim(l - j, d + 1 + 2 * j, t)
}
