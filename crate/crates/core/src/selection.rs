//! Leave-one-out scoring of relaxed models and selection of the relaxation
//! set among a nested family of candidates.

use log::warn;

use crate::error::{RegpError, Result};
use crate::kernel::{Dataset, GaussianPredictive};
use crate::relaxed::{self, FitConfig, FittedRegp, RelaxationSet, WarmStart};
use crate::scalar::Scalar;
use crate::scoring::{self, ScoreRange};

/// Leave-one-out predictive laws, one per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct LooPredictives<S> {
    predictives: Vec<GaussianPredictive<S>>,
}

impl<S: Scalar> LooPredictives<S> {
    pub fn as_slice(&self) -> &[GaussianPredictive<S>] {
        &self.predictives
    }

    pub fn len(&self) -> usize {
        self.predictives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictives.is_empty()
    }
}

/// Closed-form leave-one-out predictives of `model` with its hyperparameters
/// and the remaining relaxed values held fixed:
/// `mean_i = z★_i - (K⁻¹(z★ - c𝟙))_i / (K⁻¹)_ii`, `var_i = 1 / (K⁻¹)_ii`.
pub fn fast_loo<S: Scalar>(model: &FittedRegp<S>) -> Result<LooPredictives<S>> {
    let kinv = model.chol().inverse();
    let weights = model.predictor().weights();
    let z = model.relaxed_values();
    let predictives = (0..z.len())
        .map(|i| {
            let p = kinv.get(i, i);
            if !(p > S::zero()) {
                return Err(RegpError::SingularGram {
                    n: z.len(),
                    max_jitter: model.chol().jitter_used.to_f64_lossy(),
                });
            }
            Ok(GaussianPredictive::new(z[i] - weights[i] / p, S::one() / p))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LooPredictives { predictives })
}

/// `J_n = (1/n) Σ_i S_Q(P_{-i}, f(x_i))`, scored against the original
/// observations.
pub fn loo_tcrps<S: Scalar>(
    model: &FittedRegp<S>,
    range: &ScoreRange<S>,
    original_values: &[S],
) -> Result<S> {
    let loo = fast_loo(model)?;
    if original_values.len() != loo.len() {
        return Err(RegpError::InvalidInput(format!(
            "{} original values for {} observations",
            original_values.len(),
            loo.len()
        )));
    }
    let mut total = S::zero();
    for (p, &z) in loo.as_slice().iter().zip(original_values) {
        total += scoring::tcrps(p.mean, p.sd(), range, z)?.value();
    }
    Ok(total / S::of_usize(loo.len()))
}

/// Shape of the candidate relaxation sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// `[t, +∞)`, with range of interest `(-∞, t⁽⁰⁾)`.
    OneSidedMin,
    /// `(-∞, -t] ∪ [t, +∞)`, with range of interest `(-t⁽⁰⁾, t⁽⁰⁾)`.
    TwoSidedExcursion,
}

/// Nested candidate relaxation sets `R⁽⁰⁾ ⊃ ⋯ ⊃ R⁽ᴳ⁾ = ∅`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateGrid<S> {
    relaxation_sets: Vec<RelaxationSet<S>>,
    thresholds: Vec<Option<S>>,
}

impl<S: Scalar> CandidateGrid<S> {
    /// The grid `{∅}`.
    pub fn empty_only() -> Self {
        Self {
            relaxation_sets: vec![RelaxationSet::empty()],
            thresholds: vec![None],
        }
    }

    pub fn relaxation_sets(&self) -> &[RelaxationSet<S>] {
        &self.relaxation_sets
    }

    /// Threshold of each candidate, `None` for the empty set.
    pub fn thresholds(&self) -> &[Option<S>] {
        &self.thresholds
    }

    pub fn len(&self) -> usize {
        self.relaxation_sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relaxation_sets.is_empty()
    }
}

/// Builds the candidate grid for the range of interest `q_range`.
///
/// For [`GridKind::OneSidedMin`], `q_range` must be `(-∞, t⁽⁰⁾)`; the
/// thresholds satisfy `t⁽ᵍ⁾ - m = (t⁽⁰⁾ - m)·((max - m)/(t⁽⁰⁾ - m))^{g/G}`
/// for `g = 0..G`, where `m` and `max` are the extreme values. The
/// candidates are `[t⁽ᵍ⁾, ∞)` for `g < G` followed by `∅`. For
/// [`GridKind::TwoSidedExcursion`], `q_range` must be `(-t⁽⁰⁾, t⁽⁰⁾)` and
/// the thresholds are log-spaced from `t⁽⁰⁾` to `max |z|`. Colliding
/// thresholds are merged, so the grid may hold fewer than `G + 1` sets.
/// `q_range = ℝ` yields `{∅}`.
pub fn build_candidate_grid<S: Scalar>(
    values: &[S],
    q_range: &ScoreRange<S>,
    kind: GridKind,
    grid_size: usize,
) -> Result<CandidateGrid<S>> {
    if values.len() < 2 {
        return Err(RegpError::InvalidInput(
            "a candidate grid needs at least two values".into(),
        ));
    }
    if grid_size == 0 {
        return Err(RegpError::InvalidParameter("grid size must be at least 1".into()));
    }
    let intervals = q_range.intervals();
    if intervals.len() == 1 && intervals[0] == (S::neg_infinity(), S::infinity()) {
        return Ok(CandidateGrid::empty_only());
    }
    let min = values.iter().copied().fold(S::infinity(), S::min);
    let max = values.iter().copied().fold(S::neg_infinity(), S::max);
    let (t0, origin, top) = match kind {
        GridKind::OneSidedMin => {
            let t0 = match intervals {
                [(a, b)] if *a == S::neg_infinity() => *b,
                _ => {
                    return Err(RegpError::InvalidThreshold(
                        "one-sided grids need a range of interest (-inf, t0)".into(),
                    ))
                }
            };
            if !(t0 > min) {
                return Err(RegpError::InvalidThreshold(format!(
                    "t0 = {t0} must exceed the minimum observed value {min}"
                )));
            }
            (t0, min, max)
        }
        GridKind::TwoSidedExcursion => {
            let t0 = match intervals {
                [(a, b)] if *a == -*b => *b,
                _ => {
                    return Err(RegpError::InvalidThreshold(
                        "two-sided grids need a symmetric range of interest (-t0, t0)".into(),
                    ))
                }
            };
            if !(t0 > S::zero()) {
                return Err(RegpError::InvalidThreshold(format!(
                    "t0 = {t0} must be positive"
                )));
            }
            let amax = values.iter().fold(S::zero(), |acc, v| acc.max(v.abs()));
            (t0, S::zero(), amax)
        }
    };

    let mut thresholds: Vec<S> = vec![t0];
    if top > t0 {
        let ratio = (top - origin) / (t0 - origin);
        let g_total = S::of_usize(grid_size);
        for g in 1..grid_size {
            let t = origin + (t0 - origin) * ratio.powf(S::of_usize(g) / g_total);
            if t > *thresholds.last().expect("non-empty") && t < top {
                thresholds.push(t);
            }
        }
    }

    let mut relaxation_sets = Vec::with_capacity(thresholds.len() + 1);
    for &t in &thresholds {
        relaxation_sets.push(match kind {
            GridKind::OneSidedMin => RelaxationSet::above(t),
            GridKind::TwoSidedExcursion => RelaxationSet::two_sided(t)?,
        });
    }
    relaxation_sets.push(RelaxationSet::empty());
    let mut thresholds: Vec<Option<S>> = thresholds.into_iter().map(Some).collect();
    thresholds.push(None);
    Ok(CandidateGrid {
        relaxation_sets,
        thresholds,
    })
}

/// Outcome of a relaxation selection.
#[derive(Debug, Clone)]
pub struct SelectionResult<S> {
    pub chosen_index: usize,
    /// `J_n` per candidate; `+∞` for candidates whose fit failed.
    pub scores: Vec<S>,
    pub fitted: FittedRegp<S>,
    /// Threshold of the chosen set, `None` when it is empty.
    pub threshold: Option<S>,
    /// Fit of the first non-empty candidate, if it succeeded.
    pub first_fit: Option<WarmStart<S>>,
}

/// Fits a relaxed model per candidate and returns the one with the lowest
/// leave-one-out tCRPS on `q_range`.
pub fn select_relaxation<S: Scalar>(
    data: &Dataset<S>,
    grid: &CandidateGrid<S>,
    q_range: &ScoreRange<S>,
    config: &FitConfig,
) -> Result<SelectionResult<S>> {
    let mle = relaxed::fit_mle(data, config)?;
    select_relaxation_from(data, grid, q_range, config, mle, None)
}

/// As [`select_relaxation`], reusing a plain maximum-likelihood fit of the
/// same data.
///
/// Each candidate fit is warm-started from the last successful fit of a
/// larger candidate; the first one from `seed` when given, otherwise from
/// the default multi-start. Ties go to the smaller set.
pub fn select_relaxation_from<S: Scalar>(
    data: &Dataset<S>,
    grid: &CandidateGrid<S>,
    q_range: &ScoreRange<S>,
    config: &FitConfig,
    mle: FittedRegp<S>,
    seed: Option<&WarmStart<S>>,
) -> Result<SelectionResult<S>> {
    if grid.is_empty() {
        return Err(RegpError::SelectionFailed("empty candidate grid".into()));
    }
    let original = data.values();
    let mut scores = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, S, FittedRegp<S>)> = None;
    let mut warm: Option<WarmStart<S>> = seed.cloned();
    let mut first_fit = None;
    for (g, set) in grid.relaxation_sets().iter().enumerate() {
        let fit = if set.is_empty() {
            Ok(mle.clone())
        } else {
            relaxed::fit_regp_from(data, set, config, &mle, warm.as_ref())
        };
        let scored = fit.and_then(|m| loo_tcrps(&m, q_range, original).map(|j| (m, j)));
        match scored {
            Ok((model, j)) if !j.is_nan() => {
                scores.push(j);
                if best.as_ref().is_none_or(|(_, bj, _)| j <= *bj) {
                    best = Some((g, j, model.clone()));
                }
                let w = WarmStart::from(&model);
                if g == 0 && !set.is_empty() {
                    first_fit = Some(w.clone());
                }
                warm = Some(w);
            }
            Ok(_) => {
                warn!("candidate {g} produced a NaN score; skipped");
                scores.push(S::infinity());
            }
            Err(e) => {
                warn!("candidate {g} skipped: {e}");
                scores.push(S::infinity());
            }
        }
    }
    let (chosen_index, _, fitted) = best.ok_or_else(|| {
        RegpError::SelectionFailed(format!("all {} candidate fits failed", grid.len()))
    })?;
    Ok(SelectionResult {
        chosen_index,
        scores,
        fitted,
        threshold: grid.thresholds()[chosen_index],
        first_fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{GpParams, Smoothness};

    fn two_point_model(z: [f64; 2]) -> FittedRegp<f64> {
        // Exponential kernel with ρ = 1 / ln 2 gives k(x₁, x₂) = 0.5 at unit distance.
        let params = GpParams::new(0.0, 1.0, vec![1.0 / 2f64.ln()], Smoothness::Half).unwrap();
        let data = Dataset::new(vec![vec![0.0], vec![1.0]], z.to_vec()).unwrap();
        FittedRegp::from_parts(data, RelaxationSet::empty(), params, z.to_vec()).unwrap()
    }

    #[test]
    fn fast_loo_two_points() {
        let loo = fast_loo(&two_point_model([1.0, 0.1])).unwrap();
        let p = loo.as_slice()[1];
        assert!((p.mean - 0.5).abs() < 1e-12);
        assert!((p.variance - 0.75).abs() < 1e-12);
        let p = loo.as_slice()[0];
        assert!((p.mean - 0.05).abs() < 1e-12);
    }

    #[test]
    fn grid_log_spacing() {
        let values = [0.0, 3.0, 100.0];
        let grid = build_candidate_grid(&values, &ScoreRange::below(1.0), GridKind::OneSidedMin, 2)
            .unwrap();
        let ts: Vec<f64> = grid.thresholds().iter().flatten().copied().collect();
        assert_eq!(ts.len(), 2);
        assert!((ts[0] - 1.0).abs() < 1e-12);
        assert!((ts[1] - 10.0).abs() < 1e-12);
        assert!(grid.relaxation_sets().last().unwrap().is_empty());

        let grid = build_candidate_grid(&values, &ScoreRange::below(1.0), GridKind::OneSidedMin, 1)
            .unwrap();
        assert_eq!(grid.relaxation_sets(), &[RelaxationSet::above(1.0), RelaxationSet::empty()]);
    }

    #[test]
    fn grid_two_sided_and_errors() {
        let values = [-2.0, 0.1, 3.0];
        let q = ScoreRange::interval(-0.5, 0.5).unwrap();
        let grid = build_candidate_grid(&values, &q, GridKind::TwoSidedExcursion, 1).unwrap();
        assert_eq!(
            grid.relaxation_sets(),
            &[RelaxationSet::two_sided(0.5).unwrap(), RelaxationSet::empty()]
        );
        let r = build_candidate_grid(&values, &ScoreRange::below(-2.0), GridKind::OneSidedMin, 3);
        assert!(matches!(r, Err(RegpError::InvalidThreshold(_))));
        let grid = build_candidate_grid(&values, &ScoreRange::real_line(), GridKind::OneSidedMin, 3)
            .unwrap();
        assert_eq!(grid.len(), 1);
    }

    #[test]
    fn collapsed_grid_when_max_below_t0() {
        let values = [0.0, 1.0];
        let grid = build_candidate_grid(&values, &ScoreRange::below(5.0), GridKind::OneSidedMin, 10)
            .unwrap();
        assert_eq!(grid.len(), 2);
    }
}
