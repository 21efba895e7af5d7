//! Expected improvement and the EGO / EGO-R optimization loops.
//!
//! Minimization throughout. EGO-R refits a relaxed GP every iteration,
//! relaxing observations above a threshold chosen by leave-one-out tCRPS
//! among values above a validation threshold `t⁽⁰⁾`.

use log::debug;
use rand::Rng;
use thiserror::Error;

use crate::design::{self, Domain};
use crate::error::{RegpError, Result};
use crate::kernel::{Dataset, GpParams};
use crate::normal::{std_normal_cdf, std_normal_pdf};
use crate::relaxed::{self, FitConfig, FittedRegp, WarmStart};
use crate::scalar::{pos, Scalar};
use crate::scoring::ScoreRange;
use crate::selection::{self, GridKind};

/// `γ(z, s) = √s φ(z/√s) + z Φ(z/√s)` for `s > 0` and `max(z, 0)` for `s = 0`.
pub fn gamma<S: Scalar>(z: S, s: S) -> Result<S> {
    if !(s >= S::zero()) {
        return Err(RegpError::InvalidParameter(format!(
            "variance must be non-negative, got {s}"
        )));
    }
    Ok(gamma_unchecked(z, s))
}

fn gamma_unchecked<S: Scalar>(z: S, s: S) -> S {
    if s == S::zero() {
        return pos(z);
    }
    let sd = s.sqrt();
    let t = z / sd;
    pos(sd * std_normal_pdf(t) + z * std_normal_cdf(t))
}

/// Expected improvement over `best` at `x` under the predictive law of `model`.
pub fn expected_improvement<S: Scalar>(model: &FittedRegp<S>, best: S, x: &[S]) -> Result<S> {
    let p = model.predict(x)?;
    Ok(gamma_unchecked(best - p.mean, p.variance))
}

/// Settings of the acquisition maximizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AcquisitionConfig {
    /// Quasi-random candidates per input dimension.
    pub candidates_per_dim: usize,
    /// Number of best candidates refined by local search.
    pub local_starts: usize,
    /// Sweeps of the coordinate search per refined candidate.
    pub local_steps: usize,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            candidates_per_dim: 2048,
            local_starts: 5,
            local_steps: 100,
        }
    }
}

const INTERIOR_MARGIN: f64 = 1e-9;

fn interior_bounds<S: Scalar>(domain: &Domain<S>) -> (Vec<S>, Vec<S>) {
    let m = S::of(INTERIOR_MARGIN);
    let lo = domain
        .lower()
        .iter()
        .zip(domain.upper())
        .map(|(&l, &u)| l + m * (u - l))
        .collect();
    let hi = domain
        .lower()
        .iter()
        .zip(domain.upper())
        .map(|(&l, &u)| u - m * (u - l))
        .collect();
    (lo, hi)
}

/// Coordinate search with per-coordinate step sizes that double on success
/// and halve on failure.
fn coordinate_search<S: Scalar>(
    model: &FittedRegp<S>,
    best: S,
    x0: Vec<S>,
    ei0: S,
    lo: &[S],
    hi: &[S],
    steps: usize,
) -> Result<(Vec<S>, S)> {
    let d = x0.len();
    let mut x = x0;
    let mut val = ei0;
    let mut h: Vec<S> = (0..d).map(|j| S::of(0.05) * (hi[j] - lo[j])).collect();
    let min_step: Vec<S> = (0..d).map(|j| S::of(1e-10) * (hi[j] - lo[j])).collect();
    for _ in 0..steps {
        let mut moved = false;
        for j in 0..d {
            let mut improved = false;
            for dir in [S::one(), -S::one()] {
                let mut y = x.clone();
                y[j] = (x[j] + dir * h[j]).max(lo[j]).min(hi[j]);
                if y[j] == x[j] || model.data().contains_point(&y) {
                    continue;
                }
                let v = expected_improvement(model, best, &y)?;
                if v > val {
                    x = y;
                    val = v;
                    improved = true;
                    break;
                }
            }
            if improved {
                h[j] = (h[j] * S::of(2.0)).min(hi[j] - lo[j]);
                moved = true;
            } else {
                h[j] *= S::of(0.5);
            }
        }
        if !moved && (0..d).all(|j| h[j] < min_step[j]) {
            break;
        }
    }
    Ok((x, val))
}

/// Maximizes the expected improvement over `domain`.
///
/// Scores `candidates_per_dim · d` randomly shifted Halton points, refines
/// the best `local_starts` of them by coordinate search and returns the best
/// point found, strictly inside the domain. When the expected improvement
/// vanishes on every candidate, the candidate of largest predictive
/// variance is returned instead.
pub fn maximize_acquisition<S: Scalar, R: Rng + ?Sized>(
    model: &FittedRegp<S>,
    best: S,
    domain: &Domain<S>,
    config: &AcquisitionConfig,
    rng: &mut R,
) -> Result<Vec<S>> {
    let d = domain.dim();
    if model.data().dim() != d {
        return Err(RegpError::InvalidInput(format!(
            "model has dimension {} but the domain has {d}",
            model.data().dim()
        )));
    }
    let (lo, hi) = interior_bounds(domain);
    let count = config.candidates_per_dim.max(1) * d;
    let mut scored: Vec<(S, S, Vec<S>)> = Vec::with_capacity(count);
    for u in design::shifted_halton(d, count, rng) {
        let x: Vec<S> = u
            .iter()
            .enumerate()
            .map(|(j, &t)| (lo[j] + S::of(t) * (hi[j] - lo[j])).min(hi[j]))
            .collect();
        if model.data().contains_point(&x) {
            continue;
        }
        let p = model.predict(&x)?;
        scored.push((gamma_unchecked(best - p.mean, p.variance), p.variance, x));
    }
    if scored.is_empty() {
        return Err(RegpError::InvalidInput("no admissible acquisition candidate".into()));
    }
    let top_ei = scored.iter().fold(S::zero(), |m, c| m.max(c.0));
    if !(top_ei > S::zero()) {
        let (_, _, x) = scored
            .into_iter()
            .fold(None::<(S, S, Vec<S>)>, |acc, c| match acc {
                Some(a) if a.1 >= c.1 => Some(a),
                _ => Some(c),
            })
            .expect("non-empty");
        debug!("expected improvement vanishes on all candidates; exploring");
        return Ok(x);
    }
    // Stable sort keeps the generation order among equal values.
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut best_x = scored[0].2.clone();
    let mut best_v = scored[0].0;
    for (v, _, x) in scored.into_iter().take(config.local_starts) {
        let (y, w) = coordinate_search(model, best, x, v, &lo, &hi, config.local_steps)?;
        if w > best_v {
            best_x = y;
            best_v = w;
        }
    }
    Ok(best_x)
}

/// Sample quantile by linear interpolation between order statistics
/// (position `(n - 1)·alpha` in the sorted sample).
pub fn quantile_type7<S: Scalar>(values: &[S], alpha: f64) -> Result<S> {
    if values.is_empty() {
        return Err(RegpError::InvalidInput("quantile of an empty sample".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(RegpError::InvalidParameter(format!(
            "quantile level must lie in [0, 1], got {alpha}"
        )));
    }
    let mut v = values.to_vec();
    if v.iter().any(|x| x.is_nan()) {
        return Err(RegpError::InvalidInput("quantile of a sample with NaN".into()));
    }
    v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    let h = (v.len() - 1) as f64 * alpha;
    let k = h.floor() as usize;
    if k + 1 >= v.len() {
        return Ok(v[v.len() - 1]);
    }
    let frac = S::of(h - k as f64);
    Ok(v[k] + frac * (v[k + 1] - v[k]))
}

/// How the validation threshold `t⁽⁰⁾` is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeuristicKind {
    /// Quantile of the initial design values, frozen for the run.
    Constant,
    /// Quantile of all values observed so far.
    Concentration,
    /// No relaxation; `t⁽⁰⁾ = +∞`.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicConfig {
    pub kind: HeuristicKind,
    pub quantile_alpha: f64,
    pub grid_size: usize,
}

impl HeuristicConfig {
    pub fn new(kind: HeuristicKind, quantile_alpha: f64, grid_size: usize) -> Result<Self> {
        if !(quantile_alpha > 0.0 && quantile_alpha < 1.0) {
            return Err(RegpError::InvalidParameter(format!(
                "quantile level must lie in (0, 1), got {quantile_alpha}"
            )));
        }
        if grid_size == 0 {
            return Err(RegpError::InvalidParameter("grid size must be at least 1".into()));
        }
        Ok(Self {
            kind,
            quantile_alpha,
            grid_size,
        })
    }

    pub fn with_kind(kind: HeuristicKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self {
            kind: HeuristicKind::Constant,
            quantile_alpha: 0.25,
            grid_size: 10,
        }
    }
}

/// Relative margin that keeps `t⁽⁰⁾` strictly above the current minimum.
pub const THRESHOLD_MARGIN: f64 = 1e-6;

/// Validation threshold `t⁽⁰⁾` for the current history, clamped to
/// `m_n + 10⁻⁶·(max z - m_n)` from below (`+∞` for [`HeuristicKind::None`]).
pub fn validation_threshold<S: Scalar>(
    history_values: &[S],
    heuristic: &HeuristicConfig,
    initial_design_values: &[S],
) -> Result<S> {
    if history_values.is_empty() {
        return Err(RegpError::InvalidInput("empty history".into()));
    }
    let sample = match heuristic.kind {
        HeuristicKind::None => return Ok(S::infinity()),
        HeuristicKind::Constant => initial_design_values,
        HeuristicKind::Concentration => history_values,
    };
    let t = quantile_type7(sample, heuristic.quantile_alpha)?;
    let m = history_values.iter().copied().fold(S::infinity(), S::min);
    let max = history_values.iter().copied().fold(S::neg_infinity(), S::max);
    let spread = if max > m { max - m } else { m.abs().max(S::one()) };
    Ok(t.max(m + S::of(THRESHOLD_MARGIN) * spread))
}

/// Black-box objective: a point in, a value out.
pub trait Objective<S> {
    fn evaluate(&mut self, x: &[S]) -> Result<S>;
}

/// Adapts an infallible closure into an [`Objective`].
pub struct FnObjective<F>(pub F);

impl<S, F: FnMut(&[S]) -> S> Objective<S> for FnObjective<F> {
    fn evaluate(&mut self, x: &[S]) -> Result<S> {
        Ok((self.0)(x))
    }
}

/// Evaluations so far and the last fitted model.
#[derive(Debug, Clone)]
pub struct AcquisitionState<S> {
    pub model: Option<FittedRegp<S>>,
    /// `m_n`, the smallest observed value.
    pub best_value: S,
    pub evaluations: Dataset<S>,
    /// Number of leading evaluations that form the initial design.
    pub initial_count: usize,
    last_mle: Option<GpParams<S>>,
    last_first_fit: Option<WarmStart<S>>,
}

impl<S: Scalar> AcquisitionState<S> {
    pub fn new(evaluations: Dataset<S>) -> Self {
        let best_value = evaluations.values().iter().copied().fold(S::infinity(), S::min);
        let initial_count = evaluations.len();
        Self {
            model: None,
            best_value,
            evaluations,
            initial_count,
            last_mle: None,
            last_first_fit: None,
        }
    }

    pub fn initial_values(&self) -> &[S] {
        &self.evaluations.values()[..self.initial_count]
    }

    fn record(&mut self, x: &[S], value: S) -> Result<()> {
        self.evaluations.push(x, value)?;
        self.best_value = self.best_value.min(value);
        Ok(())
    }
}

/// One evaluation of the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow<S> {
    /// 1-based evaluation count.
    pub iteration: usize,
    pub x: Vec<S>,
    pub value: S,
    pub best_so_far: S,
    /// Validation threshold, when one was used.
    pub t0: Option<S>,
    /// Threshold of the selected relaxation set, `None` for plain interpolation.
    pub t_selected: Option<S>,
    /// Hyperparameters of the model that proposed `x`.
    pub params: Option<GpParams<S>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OptimizationTrace<S> {
    pub rows: Vec<TraceRow<S>>,
}

impl<S: Scalar> OptimizationTrace<S> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn best_so_far(&self) -> Vec<S> {
        self.rows.iter().map(|r| r.best_so_far).collect()
    }

    /// Smallest observed value.
    pub fn best(&self) -> Option<S> {
        self.rows.last().map(|r| r.best_so_far)
    }
}

/// Settings shared by the EGO and EGO-R loops.
#[derive(Debug, Clone, PartialEq)]
pub struct EgoConfig {
    pub heuristic: HeuristicConfig,
    pub fit: FitConfig,
    pub acquisition: AcquisitionConfig,
    /// Initial design size per input dimension.
    pub n0_multiplier: usize,
    pub lhs_restarts: usize,
}

impl Default for EgoConfig {
    fn default() -> Self {
        Self {
            heuristic: HeuristicConfig::default(),
            fit: FitConfig::default(),
            acquisition: AcquisitionConfig::default(),
            n0_multiplier: 3,
            lhs_restarts: design::DEFAULT_LHS_RESTARTS,
        }
    }
}

fn evaluate_checked<S: Scalar, O: Objective<S> + ?Sized>(objective: &mut O, x: &[S]) -> Result<S> {
    let v = objective.evaluate(x)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(RegpError::Objective(format!("non-finite value {v} at {x:?}")))
    }
}

fn propose_and_evaluate<S: Scalar, O: Objective<S> + ?Sized, R: Rng + ?Sized>(
    state: &mut AcquisitionState<S>,
    model: FittedRegp<S>,
    domain: &Domain<S>,
    config: &EgoConfig,
    objective: &mut O,
    rng: &mut R,
) -> Result<(Vec<S>, S, GpParams<S>)> {
    let x = maximize_acquisition(&model, state.best_value, domain, &config.acquisition, rng)?;
    let value = evaluate_checked(objective, &x)?;
    state.record(&x, value)?;
    let params = model.params().clone();
    state.model = Some(model);
    Ok((x, value, params))
}

/// One iteration of plain EGO: maximum-likelihood GP, EI maximization,
/// evaluation.
pub fn ego_step<S: Scalar, O: Objective<S> + ?Sized, R: Rng + ?Sized>(
    state: &mut AcquisitionState<S>,
    domain: &Domain<S>,
    config: &EgoConfig,
    objective: &mut O,
    rng: &mut R,
) -> Result<TraceRow<S>> {
    let mle = relaxed::fit_mle_from(&state.evaluations, &config.fit, state.last_mle.as_ref())?;
    state.last_mle = Some(mle.params().clone());
    let (x, value, params) = propose_and_evaluate(state, mle, domain, config, objective, rng)?;
    Ok(TraceRow {
        iteration: state.evaluations.len(),
        x,
        value,
        best_so_far: state.best_value,
        t0: None,
        t_selected: None,
        params: Some(params),
    })
}

/// One iteration of EGO-R: validation threshold, candidate grid, LOO-tCRPS
/// selection on `(-∞, t⁽⁰⁾)`, EI maximization under the selected relaxed
/// model, evaluation.
///
/// On error the state is left unchanged.
pub fn ego_r_step<S: Scalar, O: Objective<S> + ?Sized, R: Rng + ?Sized>(
    state: &mut AcquisitionState<S>,
    domain: &Domain<S>,
    config: &EgoConfig,
    objective: &mut O,
    rng: &mut R,
) -> Result<TraceRow<S>> {
    let values = state.evaluations.values();
    let t0 = validation_threshold(values, &config.heuristic, state.initial_values())?;
    let q = if t0.is_finite() {
        ScoreRange::below(t0)
    } else {
        ScoreRange::real_line()
    };
    let grid = selection::build_candidate_grid(values, &q, GridKind::OneSidedMin, config.heuristic.grid_size)?;
    let mle = relaxed::fit_mle_from(&state.evaluations, &config.fit, state.last_mle.as_ref())?;
    let mle_params = mle.params().clone();
    // The previous iteration's first candidate, extended by the newest value.
    let seed = state.last_first_fit.as_ref().map(|w| {
        let all = state.evaluations.values();
        let mut values = w.values.clone();
        values.extend_from_slice(&all[w.values.len().min(all.len())..]);
        WarmStart {
            params: w.params.clone(),
            values,
        }
    });
    let sel = selection::select_relaxation_from(
        &state.evaluations,
        &grid,
        &q,
        &config.fit,
        mle,
        seed.as_ref(),
    )?;
    debug!(
        "n = {}: t0 = {t0}, chose candidate {} of {} (threshold {:?})",
        values.len(),
        sel.chosen_index,
        grid.len(),
        sel.threshold
    );
    let t_selected = sel.threshold;
    let first_fit = sel.first_fit;
    let (x, value, params) = propose_and_evaluate(state, sel.fitted, domain, config, objective, rng)?;
    state.last_mle = Some(mle_params);
    if first_fit.is_some() {
        state.last_first_fit = first_fit;
    }
    Ok(TraceRow {
        iteration: state.evaluations.len(),
        x,
        value,
        best_so_far: state.best_value,
        t0: t0.is_finite().then_some(t0),
        t_selected,
        params: Some(params),
    })
}

/// Variant of the optimization loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Ego,
    EgoR,
}

/// A run that stopped early, with everything evaluated before the failure.
#[derive(Debug, Error)]
#[error("optimization stopped after {} evaluations: {error}", .trace.rows.len())]
pub struct RunFailure<S: std::fmt::Debug> {
    pub error: RegpError,
    pub trace: OptimizationTrace<S>,
    pub state: Option<AcquisitionState<S>>,
}

/// Evaluates a maximin Latin hypercube of `n0_multiplier · d` points and
/// returns the resulting state.
pub fn initialize<S: Scalar, O: Objective<S> + ?Sized, R: Rng + ?Sized>(
    domain: &Domain<S>,
    config: &EgoConfig,
    objective: &mut O,
    rng: &mut R,
) -> std::result::Result<(AcquisitionState<S>, OptimizationTrace<S>), RunFailure<S>> {
    let mut trace = OptimizationTrace::default();
    let fail = |error, trace| RunFailure {
        error,
        trace,
        state: None,
    };
    let n0 = config.n0_multiplier * domain.dim();
    let points = match design::initial_design_with_restarts(domain, n0, config.lhs_restarts, rng) {
        Ok(p) => p,
        Err(e) => return Err(fail(e, trace)),
    };
    let mut values = Vec::with_capacity(n0);
    let mut best = S::infinity();
    for x in &points {
        let v = match evaluate_checked(objective, x) {
            Ok(v) => v,
            Err(e) => return Err(fail(e, trace)),
        };
        best = best.min(v);
        values.push(v);
        trace.rows.push(TraceRow {
            iteration: values.len(),
            x: x.clone(),
            value: v,
            best_so_far: best,
            t0: None,
            t_selected: None,
            params: None,
        });
    }
    match Dataset::new(points, values) {
        Ok(data) => Ok((AcquisitionState::new(data), trace)),
        Err(e) => Err(fail(e, trace)),
    }
}

/// Runs `strategy` until `budget` evaluations (initial design included).
pub fn optimize<S: Scalar, O: Objective<S> + ?Sized, R: Rng + ?Sized>(
    strategy: Strategy,
    domain: &Domain<S>,
    config: &EgoConfig,
    objective: &mut O,
    budget: usize,
    rng: &mut R,
) -> std::result::Result<OptimizationTrace<S>, RunFailure<S>> {
    let n0 = config.n0_multiplier * domain.dim();
    if budget < n0 {
        return Err(RunFailure {
            error: RegpError::InvalidParameter(format!(
                "budget {budget} is smaller than the initial design ({n0})"
            )),
            trace: OptimizationTrace::default(),
            state: None,
        });
    }
    let (mut state, mut trace) = initialize(domain, config, objective, rng)?;
    while state.evaluations.len() < budget {
        let step = match strategy {
            Strategy::Ego => ego_step(&mut state, domain, config, objective, rng),
            Strategy::EgoR => ego_r_step(&mut state, domain, config, objective, rng),
        };
        match step {
            Ok(row) => trace.rows.push(row),
            Err(error) => {
                return Err(RunFailure {
                    error,
                    trace,
                    state: Some(state),
                })
            }
        }
    }
    Ok(trace)
}
