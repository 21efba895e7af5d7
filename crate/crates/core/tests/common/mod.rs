//! Reference implementations used as test oracles. Nothing here calls into
//! the library's numerics.

#![allow(dead_code)]

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn phi_cdf(t: f64) -> f64 {
    0.5 * libm::erfc(-t / std::f64::consts::SQRT_2)
}

/// Matérn 5/2 covariance written out directly.
pub fn matern52(x: &[f64], y: &[f64], variance: f64, rho: &[f64]) -> f64 {
    let s = x
        .iter()
        .zip(y)
        .zip(rho)
        .map(|((a, b), r)| ((a - b) / r).powi(2))
        .sum::<f64>()
        .sqrt();
    let a = 5f64.sqrt() * s;
    variance * (1.0 + a + a * a / 3.0) * (-a).exp()
}

pub fn gram(points: &[Vec<f64>], variance: f64, rho: &[f64]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|p| points.iter().map(|q| matern52(p, q, variance, rho)).collect())
        .collect()
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].abs().partial_cmp(&m[j][c].abs()).unwrap())
            .unwrap();
        m.swap(c, p);
        let d = m[c][c];
        for v in m[c].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                if f != 0.0 {
                    for k in 0..2 * n {
                        m[r][k] -= f * m[c][k];
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

pub fn quad_form(p: &[Vec<f64>], v: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..v.len() {
        for j in 0..v.len() {
            s += v[i] * p[i][j] * v[j];
        }
    }
    s
}

/// Simple-kriging prediction `(mean, variance)` with constant mean `c`.
pub fn krige(
    points: &[Vec<f64>],
    values: &[f64],
    c: f64,
    variance: f64,
    rho: &[f64],
    x: &[f64],
) -> (f64, f64) {
    let kinv = invert(&gram(points, variance, rho));
    let k: Vec<f64> = points.iter().map(|p| matern52(x, p, variance, rho)).collect();
    let n = points.len();
    let mut mean = c;
    let mut var = variance;
    for i in 0..n {
        for j in 0..n {
            mean += k[i] * kinv[i][j] * (values[j] - c);
            var -= k[i] * kinv[i][j] * k[j];
        }
    }
    (mean, var)
}

/// Composite Simpson rule with `panels` (even) subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// `∫_a^b (Φ((u-μ)/σ) - 1{u ≥ z})² du` by quadrature, split at `z` and
/// truncated 12σ beyond both `μ` and `z`.
pub fn tcrps_quadrature(mean: f64, sd: f64, a: f64, b: f64, z: f64) -> f64 {
    let below = |u: f64| phi_cdf((u - mean) / sd).powi(2);
    let above = |u: f64| phi_cdf(-(u - mean) / sd).powi(2);
    let lo = a.max(mean.min(z) - 12.0 * sd);
    let hi = b.min(mean.max(z) + 12.0 * sd);
    if !(hi > lo) {
        return 0.0;
    }
    let mid = z.clamp(lo, hi);
    simpson(below, lo, mid, 40_000) + simpson(above, mid, hi, 40_000)
}

/// Monte Carlo estimate `(mean, standard error)` of
/// `E((max of q draws of N(μ, σ²) - z)₊)`.
pub fn ei_up_monte_carlo<R: Rng>(q: u32, mean: f64, sd: f64, z: f64, draws: usize, rng: &mut R) -> (f64, f64) {
    let mut s = 0.0;
    let mut s2 = 0.0;
    for _ in 0..draws {
        let mut m = f64::NEG_INFINITY;
        for _ in 0..q {
            let e: f64 = StandardNormal.sample(rng);
            m = m.max(mean + sd * e);
        }
        let v = (m - z).max(0.0);
        s += v;
        s2 += v * v;
    }
    let n = draws as f64;
    let mu = s / n;
    let var = (s2 / n - mu * mu).max(0.0);
    (mu, (var / n).sqrt())
}

/// Minimizes `(z - c)ᵀ P (z - c)` over coordinate `i` on a grid of step
/// `step` in `[lo, hi]`, the other coordinates held at `values`.
pub fn grid_relax(p: &[Vec<f64>], values: &[f64], c: f64, i: usize, lo: f64, hi: f64, step: f64) -> f64 {
    let mut z = values.to_vec();
    let steps = ((hi - lo) / step).ceil() as usize;
    let mut best = (f64::INFINITY, lo);
    for k in 0..=steps {
        let v = (lo + k as f64 * step).min(hi);
        z[i] = v;
        let r: Vec<f64> = z.iter().map(|x| x - c).collect();
        let q = quad_form(p, &r);
        if q < best.0 {
            best = (q, v);
        }
    }
    best.1
}
