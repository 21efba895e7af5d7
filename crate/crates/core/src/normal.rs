//! Standard normal density, univariate and bivariate distribution functions.

use std::sync::OnceLock;

use crate::error::{RegpError, Result};
use crate::scalar::Scalar;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density φ(t).
#[inline]
pub fn std_normal_pdf<S: Scalar>(t: S) -> S {
    S::of(FRAC_1_SQRT_2PI) * (-(t * t) / S::of(2.0)).exp()
}

/// Standard normal distribution function Φ(t), accurate to double precision
/// in both tails (evaluated through `erfc`).
#[inline]
pub fn std_normal_cdf<S: Scalar>(t: S) -> S {
    let t = t.to_f64_lossy();
    S::of(0.5 * libm::erfc(-t * std::f64::consts::FRAC_1_SQRT_2))
}

const LEGENDRE_NODES: usize = 64;

/// 64-point Gauss–Legendre nodes and weights on [-1, 1].
fn gauss_legendre_64() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(LEGENDRE_NODES))
}

pub(crate) fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(m);
    for i in 0..m {
        // Chebyshev-like initial guess, then Newton on P_m.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((x, w));
    }
    rule
}

/// `P(X ≤ x, Y ≤ y)` for a standard bivariate normal with correlation `corr`.
///
/// Uses the one-dimensional reduction
/// `Φ₂ = Φ(x)Φ(y) + (2π)⁻¹ ∫₀^{asin ρ} exp(-(x² - 2xy sin θ + y²) / (2 cos² θ)) dθ`
/// with a fixed 64-node Gauss–Legendre rule.
pub fn bivariate_normal_cdf<S: Scalar>(x: S, y: S, corr: S) -> Result<S> {
    if !(corr.abs() <= S::one()) {
        return Err(RegpError::InvalidParameter(format!(
            "correlation must lie in [-1, 1], got {corr}"
        )));
    }
    let (x, y, rho) = (x.to_f64_lossy(), y.to_f64_lossy(), corr.to_f64_lossy());
    Ok(S::of(bvn_f64(x, y, rho)))
}

fn bvn_f64(x: f64, y: f64, rho: f64) -> f64 {
    if x == f64::NEG_INFINITY || y == f64::NEG_INFINITY {
        return 0.0;
    }
    if x == f64::INFINITY {
        return std_normal_cdf(y);
    }
    if y == f64::INFINITY {
        return std_normal_cdf(x);
    }
    let px: f64 = std_normal_cdf(x);
    let py: f64 = std_normal_cdf(y);
    if rho == 1.0 {
        return px.min(py);
    }
    if rho == -1.0 {
        return (px + py - 1.0).max(0.0);
    }
    let upper = rho.asin();
    let half = 0.5 * upper;
    let mut acc = 0.0;
    for &(node, w) in gauss_legendre_64() {
        let theta = half * (node + 1.0);
        let (s, c) = theta.sin_cos();
        acc += w * (-(x * x - 2.0 * x * y * s + y * y) / (2.0 * c * c)).exp();
    }
    let v = px * py + half * acc / (2.0 * std::f64::consts::PI);
    v.clamp(0.0, px.min(py))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn univariate_reference_values() {
        assert_eq!(std_normal_cdf(0.0f64), 0.5);
        assert!((std_normal_pdf(0.0f64) - 0.398_942_280_401_432_7).abs() < 1e-16);
        assert!((std_normal_cdf(1.0f64) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((std_normal_cdf(-5.0f64) - 2.866_515_718_791_939e-7).abs() < 1e-20);
    }

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let rule = gauss_legendre(64);
        let sum: f64 = rule.iter().map(|&(_, w)| w).sum();
        assert!((sum - 2.0).abs() < 1e-13);
        let x10: f64 = rule.iter().map(|&(x, w)| w * x.powi(10)).sum();
        assert!((x10 - 2.0 / 11.0).abs() < 1e-13);
    }

    #[test]
    fn bivariate_orthant_closed_form() {
        assert!((bivariate_normal_cdf(0.0f64, 0.0, 0.0).unwrap() - 0.25).abs() < 1e-15);
        for rho in [-0.95, -0.5, 0.0, 0.3, 0.5, 0.9, 0.99] {
            let exact = 0.25 + f64::asin(rho) / (2.0 * std::f64::consts::PI);
            let v = bivariate_normal_cdf(0.0, 0.0, rho).unwrap();
            assert!((v - exact).abs() < 1e-7, "rho={rho}: {v} vs {exact}");
        }
        let v: f64 = bivariate_normal_cdf(0.0, 0.0, 0.5).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn bivariate_independence_and_limits() {
        let v: f64 = bivariate_normal_cdf(0.7, -1.2, 0.0).unwrap();
        assert!((v - std_normal_cdf(0.7) * std_normal_cdf(-1.2)).abs() < 1e-15);
        assert_eq!(bivariate_normal_cdf(f64::NEG_INFINITY, 1.0, 0.3).unwrap(), 0.0);
        let v = bivariate_normal_cdf(f64::INFINITY, 1.0, 0.3).unwrap();
        assert!((v - std_normal_cdf(1.0)).abs() < 1e-15);
        assert!(bivariate_normal_cdf(0.0, 0.0, 1.5).is_err());
    }
}
