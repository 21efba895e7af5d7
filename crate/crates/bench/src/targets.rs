//! Spatial quantile targets estimated by plain Monte Carlo.

use rand::Rng;
use regp::Domain;

use crate::error::{BenchError, Result};
use crate::functions::BenchProblem;

/// Smallest Monte Carlo sample accepted by [`spatial_quantile_targets`].
pub const MIN_MC_SAMPLES: usize = 100_000;

/// Quantile levels with their estimated target values, sorted by
/// decreasing level.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TargetSet {
    pub quantile_levels: Vec<f64>,
    pub target_values: Vec<f64>,
    /// Monte Carlo standard error of each target value.
    pub standard_errors: Vec<f64>,
}

impl TargetSet {
    pub fn len(&self) -> usize {
        self.quantile_levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quantile_levels.is_empty()
    }
}

/// Linear-interpolation quantile of a sorted sample.
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let k = h.floor() as usize;
    if k + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[k] + (h - k as f64) * (sorted[k + 1] - sorted[k])
}

/// Quantiles of `f(U)`, `U` uniform on `domain`.
///
/// The standard error of a level-`p` quantile is half the spread between
/// the order statistics at `n p ± √(n p (1 - p))`.
pub fn spatial_quantiles<R: Rng + ?Sized>(
    f: impl Fn(&[f64]) -> f64,
    domain: &Domain<f64>,
    levels: &[f64],
    n_mc: usize,
    rng: &mut R,
) -> Result<TargetSet> {
    if n_mc < MIN_MC_SAMPLES {
        return Err(BenchError::Config(format!(
            "at least {MIN_MC_SAMPLES} Monte Carlo samples are required, got {n_mc}"
        )));
    }
    if let Some(p) = levels.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(BenchError::Config(format!("quantile level {p} is outside (0, 1)")));
    }
    let d = domain.dim();
    let mut u = vec![0.0; d];
    let mut sample: Vec<f64> = (0..n_mc)
        .map(|_| {
            for v in u.iter_mut() {
                *v = rng.random::<f64>();
            }
            f(&domain.from_unit(&u))
        })
        .collect();
    if sample.iter().any(|v| v.is_nan()) {
        return Err(BenchError::Config("objective returned NaN during sampling".into()));
    }
    sample.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    let mut levels = levels.to_vec();
    levels.sort_by(|a, b| b.partial_cmp(a).expect("finite levels"));
    levels.dedup();
    let n = n_mc as f64;
    let mut target_values = Vec::with_capacity(levels.len());
    let mut standard_errors = Vec::with_capacity(levels.len());
    for &p in &levels {
        target_values.push(quantile_sorted(&sample, p));
        let half = (n * p * (1.0 - p)).sqrt() / n;
        let lo = quantile_sorted(&sample, (p - half).max(0.0));
        let hi = quantile_sorted(&sample, (p + half).min(1.0));
        standard_errors.push(0.5 * (hi - lo));
    }
    Ok(TargetSet {
        quantile_levels: levels,
        target_values,
        standard_errors,
    })
}

/// [`spatial_quantiles`] of a corpus problem.
pub fn spatial_quantile_targets<R: Rng + ?Sized>(
    problem: &BenchProblem,
    levels: &[f64],
    n_mc: usize,
    rng: &mut R,
) -> Result<TargetSet> {
    spatial_quantiles(|x| problem.evaluate(x), &problem.domain, levels, n_mc, rng)
}
