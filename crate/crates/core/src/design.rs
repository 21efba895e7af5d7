//! Search domains and space-filling designs.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{RegpError, Result};
use crate::scalar::Scalar;

/// Axis-aligned box `∏ [lower_j, upper_j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain<S> {
    lower: Vec<S>,
    upper: Vec<S>,
}

impl<S: Scalar> Domain<S> {
    pub fn new(lower: Vec<S>, upper: Vec<S>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(RegpError::InvalidParameter(format!(
                "domain bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (j, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(RegpError::InvalidParameter(format!(
                    "domain side {j} is degenerate: [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[lo, hi]^d`.
    pub fn cube(dim: usize, lo: S, hi: S) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[S] {
        &self.lower
    }

    pub fn upper(&self) -> &[S] {
        &self.upper
    }

    pub fn widths(&self) -> Vec<S> {
        self.lower.iter().zip(&self.upper).map(|(&l, &u)| u - l).collect()
    }

    pub fn contains(&self, x: &[S]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&l, &u))| l <= v && v <= u)
    }

    /// Maps a point of the unit cube to the domain.
    pub fn from_unit(&self, u: &[S]) -> Vec<S> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&t, (&l, &h))| l + t * (h - l))
            .collect()
    }
}

const PRIMES: [u32; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131,
];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// `count` points of the Halton sequence in `[0, 1)^dim` (skipping the
/// origin), shifted modulo 1 by a uniform random vector.
pub fn shifted_halton<R: Rng + ?Sized>(dim: usize, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
    assert!(dim <= PRIMES.len(), "Halton sequence supports up to {} dimensions", PRIMES.len());
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    (1..=count as u64)
        .map(|i| {
            (0..dim)
                .map(|j| {
                    let v = radical_inverse(i, PRIMES[j] as u64) + shift[j];
                    v - v.floor()
                })
                .collect()
        })
        .collect()
}

/// Number of random Latin hypercubes compared by [`initial_design`].
pub const DEFAULT_LHS_RESTARTS: usize = 100;

fn min_pairwise_distance(points: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d: f64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            best = best.min(d);
        }
    }
    best.sqrt()
}

/// Random Latin hypercube in the unit cube: each coordinate visits every
/// stratum `[k/n, (k+1)/n)` once, at a uniform position inside it.
pub fn latin_hypercube<R: Rng + ?Sized>(dim: usize, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; dim]; n];
    let mut perm: Vec<usize> = (0..n).collect();
    for j in 0..dim {
        perm.shuffle(rng);
        for (i, &k) in perm.iter().enumerate() {
            points[i][j] = (k as f64 + rng.random::<f64>()) / n as f64;
        }
    }
    points
}

/// Maximin Latin hypercube design of `n0` points with
/// [`DEFAULT_LHS_RESTARTS`] random draws.
pub fn initial_design<S: Scalar, R: Rng + ?Sized>(
    domain: &Domain<S>,
    n0: usize,
    rng: &mut R,
) -> Result<Vec<Vec<S>>> {
    initial_design_with_restarts(domain, n0, DEFAULT_LHS_RESTARTS, rng)
}

/// Maximin Latin hypercube: the draw with the largest minimum pairwise
/// distance among `restarts` random Latin hypercubes.
pub fn initial_design_with_restarts<S: Scalar, R: Rng + ?Sized>(
    domain: &Domain<S>,
    n0: usize,
    restarts: usize,
    rng: &mut R,
) -> Result<Vec<Vec<S>>> {
    if n0 < 2 {
        return Err(RegpError::InvalidParameter(format!(
            "initial design needs at least 2 points, got {n0}"
        )));
    }
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    for _ in 0..restarts.max(1) {
        let cand = latin_hypercube(domain.dim(), n0, rng);
        let score = min_pairwise_distance(&cand);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, cand));
        }
    }
    let (_, unit) = best.expect("at least one draw");
    Ok(unit
        .iter()
        .map(|u| {
            let u: Vec<S> = u.iter().map(|&t| S::of(t)).collect();
            domain.from_unit(&u)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(5, 3) - 7.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn lhs_strata() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = latin_hypercube(3, 7, &mut rng);
        for j in 0..3 {
            let mut strata: Vec<usize> = pts.iter().map(|p| (p[j] * 7.0) as usize).collect();
            strata.sort();
            assert_eq!(strata, (0..7).collect::<Vec<_>>());
        }
    }

    #[test]
    fn domain_validation() {
        assert!(Domain::new(vec![0.0], vec![0.0]).is_err());
        assert!(Domain::new(vec![0.0, 1.0], vec![1.0]).is_err());
        let d = Domain::new(vec![-5.0, 0.0], vec![10.0, 15.0]).unwrap();
        assert_eq!(d.from_unit(&[0.5, 1.0]), vec![2.5, 15.0]);
    }
}
