//! Continuous ranked probability score restricted to a range of interest
//! (truncated CRPS) for Gaussian predictive distributions.
//!
//! For an interval `Q = (a, b)` the score is
//! `S_Q(P, z) = ∫_Q (F_P(u) - 1{z ≤ u})² du`. For Gaussian `P` it is
//! assembled from `EI_q↑(P, z) = E((N₁ ∨ … ∨ N_q - z)₊)`, `N_j` iid `P`,
//! for `q ∈ {1, 2}`.

use crate::error::{RegpError, Result};
use crate::normal::{bivariate_normal_cdf, std_normal_cdf, std_normal_pdf};
use crate::quad;
use crate::scalar::{pos, Scalar};

/// Finite union of disjoint open intervals, sorted by lower endpoint.
/// Endpoints may be infinite. Whether endpoints are included does not
/// change the score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRange<S> {
    intervals: Vec<(S, S)>,
}

impl<S: Scalar> ScoreRange<S> {
    pub fn new(intervals: Vec<(S, S)>) -> Result<Self> {
        for (i, &(a, b)) in intervals.iter().enumerate() {
            if a.is_nan() || b.is_nan() || !(a < b) {
                return Err(RegpError::InvalidParameter(format!(
                    "score interval {i} must satisfy a < b, got ({a}, {b})"
                )));
            }
            if i > 0 && intervals[i - 1].1 > a {
                return Err(RegpError::InvalidParameter(format!(
                    "score intervals {} and {i} overlap or are unsorted",
                    i - 1
                )));
            }
        }
        Ok(Self { intervals })
    }

    pub fn empty() -> Self {
        Self { intervals: vec![] }
    }

    pub fn real_line() -> Self {
        Self {
            intervals: vec![(S::neg_infinity(), S::infinity())],
        }
    }

    /// `(-∞, b)`, the range of interest for minimization.
    pub fn below(b: S) -> Self {
        Self {
            intervals: vec![(S::neg_infinity(), b)],
        }
    }

    pub fn above(a: S) -> Self {
        Self {
            intervals: vec![(a, S::infinity())],
        }
    }

    pub fn interval(a: S, b: S) -> Result<Self> {
        Self::new(vec![(a, b)])
    }

    pub fn intervals(&self) -> &[(S, S)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, u: S) -> bool {
        self.intervals.iter().any(|&(a, b)| a < u && u < b)
    }
}

/// A score value, non-negative by construction.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ScoreValue<S>(S);

impl<S: Scalar> ScoreValue<S> {
    pub fn value(self) -> S {
        self.0
    }
}

/// `h₁(t) = t Φ(t) + φ(t)`.
#[inline]
fn h1<S: Scalar>(t: S) -> S {
    t * std_normal_cdf(t) + std_normal_pdf(t)
}

/// `h₂(t) = 2t Φ₂((t, 0); corr 1/√2) + 2 Φ(-t) φ(t) + Φ(√2 t) / √π`.
fn h2<S: Scalar>(t: S) -> S {
    let two = S::of(2.0);
    let corr = S::of(std::f64::consts::FRAC_1_SQRT_2);
    let bvn = bivariate_normal_cdf(t, S::zero(), corr).expect("fixed correlation is valid");
    two * t * bvn
        + two * std_normal_cdf(-t) * std_normal_pdf(t)
        + std_normal_cdf(S::SQRT_2() * t) / S::PI().sqrt()
}

/// `EI_q↑(N(mean, sd²), z)` for `q ∈ {1, 2}`.
pub fn ei_up<S: Scalar>(q: u32, mean: S, sd: S, z: S) -> Result<S> {
    if !(sd >= S::zero()) {
        return Err(RegpError::InvalidParameter(format!(
            "standard deviation must be non-negative, got {sd}"
        )));
    }
    match q {
        1 | 2 => Ok(ei_up_unchecked(q, mean, sd, z)),
        _ => Err(RegpError::UnsupportedOrder(q)),
    }
}

fn ei_up_unchecked<S: Scalar>(q: u32, mean: S, sd: S, z: S) -> S {
    if sd == S::zero() {
        return pos(mean - z);
    }
    if z == S::neg_infinity() {
        return S::infinity();
    }
    if z == S::infinity() {
        return S::zero();
    }
    let t = (mean - z) / sd;
    let h = if q == 1 { h1(t) } else { h2(t) };
    pos(sd * h)
}

/// `E(N₁ ∨ N₂) = mean + sd / √π`.
pub fn expected_max_of_two<S: Scalar>(mean: S, sd: S) -> S {
    mean + sd / S::PI().sqrt()
}

/// Plain CRPS of `N(mean, sd²)` at `z`.
pub fn crps<S: Scalar>(mean: S, sd: S, z: S) -> S {
    if sd == S::zero() {
        return (z - mean).abs();
    }
    let t = (z - mean) / sd;
    let two = S::of(2.0);
    pos(sd * (t * (two * std_normal_cdf(t) - S::one()) + two * std_normal_pdf(t)
        - S::one() / S::PI().sqrt()))
}

/// `S_{(-∞, b)}` for finite `b`.
fn lower_tail_score<S: Scalar>(mean: S, sd: S, b: S, z: S) -> S {
    let two = S::of(2.0);
    let mut v = b.min(z) + ei_up_unchecked(2, mean, sd, b) - expected_max_of_two(mean, sd);
    if z <= b {
        v -= two * (ei_up_unchecked(1, mean, sd, b) - ei_up_unchecked(1, mean, sd, z));
    }
    v
}

fn interval_score<S: Scalar>(mean: S, sd: S, a: S, b: S, z: S) -> S {
    if sd == S::zero() {
        // Point mass at `mean`: the integrand is the indicator of the set
        // between `mean` and `z`.
        let lo = mean.min(z).max(a);
        let hi = mean.max(z).min(b);
        return pos(hi - lo);
    }
    let (ninf, inf) = (S::neg_infinity(), S::infinity());
    let two = S::of(2.0);
    let v = if a == ninf && b == inf {
        crps(mean, sd, z)
    } else if a == ninf {
        lower_tail_score(mean, sd, b, z)
    } else if b == inf {
        // S_{(a, ∞)}(N(μ, σ²), z) = S_{(-∞, -a)}(N(-μ, σ²), -z).
        lower_tail_score(-mean, sd, -a, -z)
    } else {
        let mut v = pos(b.min(z) - a) + ei_up_unchecked(2, mean, sd, b)
            - ei_up_unchecked(2, mean, sd, a);
        if z <= b {
            v -= two * (ei_up_unchecked(1, mean, sd, b) - ei_up_unchecked(1, mean, sd, a.max(z)));
        }
        v
    };
    pos(v)
}

/// Truncated CRPS of `N(mean, sd²)` on `range` at observation `z`.
pub fn tcrps<S: Scalar>(mean: S, sd: S, range: &ScoreRange<S>, z: S) -> Result<ScoreValue<S>> {
    if !(sd >= S::zero()) || !sd.is_finite() {
        return Err(RegpError::InvalidParameter(format!(
            "standard deviation must be finite and non-negative, got {sd}"
        )));
    }
    if !mean.is_finite() || z.is_nan() {
        return Err(RegpError::InvalidInput("mean must be finite and z not NaN".into()));
    }
    let total = range
        .intervals()
        .iter()
        .map(|&(a, b)| interval_score(mean, sd, a, b, z))
        .sum();
    Ok(ScoreValue(total))
}

/// `∫_Q (F₁(u) - F₂(u))² du` for two Gaussians, by adaptive quadrature.
///
/// This equals `S_Q(P₁, P₂) - S_Q(P₂, P₂)` where `S(P, P₂) = E_{U∼P₂} S(P, U)`.
pub fn tcrps_divergence<S: Scalar>(mean1: S, sd1: S, mean2: S, sd2: S, range: &ScoreRange<S>) -> S {
    let cdf = |m: S, s: S, u: S| {
        if s > S::zero() {
            std_normal_cdf((u - m) / s)
        } else if u >= m {
            S::one()
        } else {
            S::zero()
        }
    };
    let spread = sd1.max(sd2);
    // Outside [lo, hi] both distribution functions agree to double precision.
    let lo = mean1.min(mean2) - S::of(40.0) * spread;
    let hi = mean1.max(mean2) + S::of(40.0) * spread;
    let tol = S::of(1e-14).max(S::epsilon());
    let mut total = S::zero();
    for &(a, b) in range.intervals() {
        let (a, b) = (a.max(lo), b.min(hi));
        if !(b > a) {
            continue;
        }
        let f = |u: S| {
            let d = cdf(mean1, sd1, u) - cdf(mean2, sd2, u);
            d * d
        };
        let mut pieces = vec![a];
        // Force breakpoints at the kinks of degenerate laws and the means.
        for m in [mean1, mean2] {
            if m > a && m < b {
                pieces.push(m);
            }
        }
        pieces.push(b);
        pieces.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
        for w in pieces.windows(2) {
            total += quad::integrate(f, w[0], w[1], tol, 500);
        }
    }
    pos(total)
}
