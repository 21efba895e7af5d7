//! Relaxed Gaussian-process interpolation.
//!
//! Observations whose value falls inside a relaxation set `R` are no longer
//! interpolated exactly: they only have to stay inside the interval of `R`
//! that contains them. The relaxed values `z★` and the hyperparameters are
//! estimated jointly by maximum likelihood, and the predictive law is the
//! ordinary kriging posterior given `z★`.

use log::debug;

use crate::error::{RegpError, Result};
use crate::kernel::{
    self, CholeskyGram, Dataset, GaussianPredictive, GpParams, GpPosterior, Smoothness,
};
use crate::linalg::SquareMatrix;
use crate::optim::BoundedLbfgs;
use crate::qp;
use crate::scalar::Scalar;

/// Finite union of disjoint closed intervals `[lo, hi]`, sorted by `lo`.
/// Endpoints may be infinite; an empty set means plain interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationSet<S> {
    intervals: Vec<(S, S)>,
}

impl<S: Scalar> RelaxationSet<S> {
    pub fn new(intervals: Vec<(S, S)>) -> Result<Self> {
        for (i, &(lo, hi)) in intervals.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || !(lo < hi) {
                return Err(RegpError::InvalidParameter(format!(
                    "relaxation interval {i} must have lo < hi, got [{lo}, {hi}]"
                )));
            }
            if lo == S::infinity() || hi == S::neg_infinity() {
                return Err(RegpError::InvalidParameter(format!(
                    "relaxation interval {i} is empty"
                )));
            }
            if i > 0 && !(intervals[i - 1].1 < lo) {
                return Err(RegpError::InvalidParameter(format!(
                    "relaxation intervals {} and {i} overlap or are unsorted",
                    i - 1
                )));
            }
        }
        Ok(Self { intervals })
    }

    pub fn empty() -> Self {
        Self { intervals: vec![] }
    }

    /// `[t, +∞)`.
    pub fn above(t: S) -> Self {
        Self {
            intervals: vec![(t, S::infinity())],
        }
    }

    /// `(-∞, -t] ∪ [t, +∞)` for `t > 0`.
    pub fn two_sided(t: S) -> Result<Self> {
        if !(t > S::zero()) {
            return Err(RegpError::InvalidThreshold(format!(
                "two-sided threshold must be positive, got {t}"
            )));
        }
        Self::new(vec![(S::neg_infinity(), -t), (t, S::infinity())])
    }

    pub fn intervals(&self) -> &[(S, S)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// The interval containing `z`, endpoints included.
    pub fn containing(&self, z: S) -> Option<(S, S)> {
        self.intervals.iter().copied().find(|&(lo, hi)| lo <= z && z <= hi)
    }

    /// Whether every interval of `self` is contained in `other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.intervals.iter().all(|&(lo, hi)| {
            other
                .intervals
                .iter()
                .any(|&(olo, ohi)| olo <= lo && hi <= ohi)
        })
    }
}

/// Feasible set of one observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constraint<S> {
    Fixed(S),
    Interval(S, S),
}

impl<S: Scalar> Constraint<S> {
    pub fn contains(&self, v: S) -> bool {
        match *self {
            Constraint::Fixed(z) => v == z,
            Constraint::Interval(lo, hi) => lo <= v && v <= hi,
        }
    }

    pub fn is_relaxed(&self) -> bool {
        matches!(self, Constraint::Interval(..))
    }
}

/// Per-observation constraints `C_1 × … × C_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintBox<S> {
    constraints: Vec<Constraint<S>>,
    original: Vec<S>,
}

impl<S: Scalar> ConstraintBox<S> {
    pub fn constraints(&self) -> &[Constraint<S>] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn original_values(&self) -> &[S] {
        &self.original
    }

    pub fn relaxed_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.constraints[i].is_relaxed())
            .collect()
    }

    pub fn contains(&self, values: &[S]) -> bool {
        values.len() == self.len()
            && self
                .constraints
                .iter()
                .zip(values)
                .all(|(c, &v)| c.contains(v))
    }

    /// Numerical search bounds of observation `i`: the interval with an
    /// infinite endpoint replaced by the observed value. The observed value
    /// is always feasible and the relaxed optimum only moves it towards
    /// the finite endpoint.
    pub fn search_bounds(&self, i: usize) -> (S, S) {
        let z = self.original[i];
        match self.constraints[i] {
            Constraint::Fixed(v) => (v, v),
            Constraint::Interval(lo, hi) => {
                let lo = if lo == S::neg_infinity() { z } else { lo };
                let hi = if hi == S::infinity() { z } else { hi };
                (lo, hi)
            }
        }
    }

    /// Indices whose search interval has non-zero length.
    pub fn free_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| {
                let (lo, hi) = self.search_bounds(i);
                lo < hi
            })
            .collect()
    }

    /// Clamps each coordinate into its search bounds (fixed ones are reset).
    pub fn project(&self, values: &[S]) -> Vec<S> {
        (0..self.len())
            .map(|i| {
                let (lo, hi) = self.search_bounds(i);
                values[i].max(lo).min(hi)
            })
            .collect()
    }

    /// Endpoint of the relaxation interval closest to the observed value.
    fn nearest_endpoint(&self, i: usize) -> S {
        let z = self.original[i];
        match self.constraints[i] {
            Constraint::Fixed(v) => v,
            Constraint::Interval(lo, hi) => {
                if !lo.is_finite() {
                    hi
                } else if !hi.is_finite() || (z - lo) <= (hi - z) {
                    lo
                } else {
                    hi
                }
            }
        }
    }
}

/// Maps each value to `Interval(R_j)` if it lies in some `R_j` (endpoints
/// included), to `Fixed(z_i)` otherwise.
pub fn build_constraints<S: Scalar>(values: &[S], relaxation: &RelaxationSet<S>) -> ConstraintBox<S> {
    let constraints = values
        .iter()
        .map(|&z| match relaxation.containing(z) {
            Some((lo, hi)) => Constraint::Interval(lo, hi),
            None => Constraint::Fixed(z),
        })
        .collect();
    ConstraintBox {
        constraints,
        original: values.to_vec(),
    }
}

/// Relaxed values for fixed hyperparameters:
/// `argmin_{z ∈ C} (z - c𝟙)ᵀ K_n⁻¹ (z - c𝟙)`.
pub fn relax_fixed_params<S: Scalar>(
    data: &Dataset<S>,
    params: &GpParams<S>,
    constraints: &ConstraintBox<S>,
) -> Result<Vec<S>> {
    if constraints.len() != data.len() {
        return Err(RegpError::InvalidInput(format!(
            "{} constraints for {} observations",
            constraints.len(),
            data.len()
        )));
    }
    let chol = kernel::gram_cholesky(data, params)?;
    relax_with_factor(&chol, params.mean_const, constraints)
}

pub(crate) fn relax_with_factor<S: Scalar>(
    chol: &CholeskyGram<S>,
    mean_const: S,
    constraints: &ConstraintBox<S>,
) -> Result<Vec<S>> {
    let free = constraints.free_indices();
    let mut z = constraints.project(constraints.original_values());
    if free.is_empty() {
        return Ok(z);
    }
    let n = constraints.len();
    let kinv = chol.inverse();
    let is_free: Vec<bool> = (0..n).map(|i| free.contains(&i)).collect();
    let two = S::of(2.0);
    // In y = z_F - c: objective ½ yᵀ (2 P_FF) y + (2 P_FX r_X)ᵀ y.
    let m = free.len();
    let mut a = SquareMatrix::zeros(m);
    let mut b = vec![S::zero(); m];
    for (r, &i) in free.iter().enumerate() {
        for (c, &j) in free.iter().enumerate() {
            a.set(r, c, two * kinv.get(i, j));
        }
        for j in (0..n).filter(|&j| !is_free[j]) {
            b[r] += two * kinv.get(i, j) * (z[j] - mean_const);
        }
    }
    let lo: Vec<S> = free.iter().map(|&i| constraints.search_bounds(i).0 - mean_const).collect();
    let hi: Vec<S> = free.iter().map(|&i| constraints.search_bounds(i).1 - mean_const).collect();
    let y0: Vec<S> = free.iter().map(|&i| z[i] - mean_const).collect();
    let y = qp::solve_box_qp(&a, &b, &lo, &hi, &y0).ok_or(RegpError::SingularGram {
        n,
        max_jitter: kernel::JITTER_LADDER[kernel::JITTER_LADDER.len() - 1],
    })?;
    for (r, &i) in free.iter().enumerate() {
        z[i] = y[r] + mean_const;
    }
    Ok(constraints.project(&z))
}

/// Search settings for maximum-likelihood fits.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub smoothness: Smoothness,
    pub solver: BoundedLbfgs,
    /// Number of perturbed starts besides the base start (at most 4 are
    /// distinct patterns).
    pub perturbed_starts: usize,
    /// Size of the log10-lengthscale perturbation.
    pub perturbation_log10: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            smoothness: Smoothness::FiveHalves,
            solver: BoundedLbfgs::default(),
            perturbed_starts: 4,
            perturbation_log10: 0.5,
        }
    }
}

impl FitConfig {
    pub fn with_smoothness(smoothness: Smoothness) -> Self {
        Self {
            smoothness,
            ..Self::default()
        }
    }
}

/// A fitted relaxed GP: estimated hyperparameters, relaxed values and the
/// kriging predictor built on them.
#[derive(Debug, Clone)]
pub struct FittedRegp<S> {
    params: GpParams<S>,
    relaxed_values: Vec<S>,
    relaxation: RelaxationSet<S>,
    constraints: ConstraintBox<S>,
    data: Dataset<S>,
    nll: S,
    predictor: GpPosterior<S>,
}

impl<S: Scalar> FittedRegp<S> {
    /// Builds the model for given hyperparameters and relaxed values.
    pub fn from_parts(
        data: Dataset<S>,
        relaxation: RelaxationSet<S>,
        params: GpParams<S>,
        relaxed_values: Vec<S>,
    ) -> Result<Self> {
        let constraints = build_constraints(data.values(), &relaxation);
        if !constraints.contains(&relaxed_values) {
            return Err(RegpError::InvalidInput(
                "relaxed values violate their constraints".into(),
            ));
        }
        let relaxed_data = data.with_values(relaxed_values.clone())?;
        let chol = kernel::gram_cholesky(&relaxed_data, &params)?;
        let nll = kernel::nll_from_factor(&relaxed_values, params.mean_const, &chol);
        let predictor = GpPosterior::new(&relaxed_data, &params, chol)?;
        Ok(Self {
            params,
            relaxed_values,
            relaxation,
            constraints,
            data,
            nll,
            predictor,
        })
    }

    pub fn params(&self) -> &GpParams<S> {
        &self.params
    }

    pub fn relaxed_values(&self) -> &[S] {
        &self.relaxed_values
    }

    pub fn relaxation(&self) -> &RelaxationSet<S> {
        &self.relaxation
    }

    pub fn constraints(&self) -> &ConstraintBox<S> {
        &self.constraints
    }

    pub fn data(&self) -> &Dataset<S> {
        &self.data
    }

    pub fn chol(&self) -> &CholeskyGram<S> {
        self.predictor.chol()
    }

    /// Negative log-likelihood (constant dropped) at `(θ̂, z★)`.
    pub fn nll(&self) -> S {
        self.nll
    }

    pub fn predictor(&self) -> &GpPosterior<S> {
        &self.predictor
    }

    /// Gaussian predictive law at `x`, conditioned on `z★`.
    pub fn predict(&self, x: &[S]) -> Result<GaussianPredictive<S>> {
        self.predictor.predict(x)
    }

    /// Number of observations whose value was actually moved.
    pub fn moved_count(&self) -> usize {
        self.relaxed_values
            .iter()
            .zip(self.data.values())
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// Starting point of a joint fit: hyperparameters and one value per
/// observation (projected onto the constraint box before use).
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart<S> {
    pub params: GpParams<S>,
    pub values: Vec<S>,
}

impl<S: Scalar> From<&FittedRegp<S>> for WarmStart<S> {
    fn from(m: &FittedRegp<S>) -> Self {
        Self {
            params: m.params().clone(),
            values: m.relaxed_values().to_vec(),
        }
    }
}

/// Kriging predictive law of `model` at `x`.
pub fn predict<S: Scalar>(model: &FittedRegp<S>, x: &[S]) -> Result<GaussianPredictive<S>> {
    model.predict(x)
}

/// Affine standardization of the values used internally by the search.
#[derive(Debug, Clone, Copy)]
struct Standardizer<S> {
    shift: S,
    scale: S,
}

impl<S: Scalar> Standardizer<S> {
    fn for_values(values: &[S]) -> Self {
        let n = S::of_usize(values.len());
        let shift = values.iter().copied().sum::<S>() / n;
        let var = values.iter().map(|&v| (v - shift) * (v - shift)).sum::<S>() / n;
        let scale = if var > S::zero() { var.sqrt() } else { S::one() };
        Self { shift, scale }
    }

    fn fwd(&self, v: S) -> S {
        (v - self.shift) / self.scale
    }

    fn inv(&self, v: S) -> S {
        self.shift + self.scale * v
    }
}

/// Search space for `(c, log σ², log ρ_1..d, z_free)` in standardized units.
struct SearchProblem<'a, S> {
    data: &'a Dataset<S>,
    smoothness: Smoothness,
    std: Standardizer<S>,
    /// Standardized values; free coordinates are overwritten per evaluation.
    base_values: Vec<S>,
    free: Vec<usize>,
    lower: Vec<S>,
    upper: Vec<S>,
}

impl<'a, S: Scalar> SearchProblem<'a, S> {
    fn new(data: &'a Dataset<S>, constraints: &ConstraintBox<S>, smoothness: Smoothness) -> Self {
        let d = data.dim();
        let std = Standardizer::for_values(data.values());
        let base_values: Vec<S> = data.values().iter().map(|&v| std.fwd(v)).collect();
        let free = constraints.free_indices();
        let ln10 = S::LN_10();
        let (zmin, zmax) = base_values
            .iter()
            .fold((S::infinity(), S::neg_infinity()), |(a, b), &v| (a.min(v), b.max(v)));
        let (cmin, cmax) = if zmax > zmin {
            (zmin, zmax)
        } else {
            (zmin - S::one(), zmax + S::one())
        };
        let mut lower = vec![cmin, S::of(-6.0) * ln10];
        let mut upper = vec![cmax, S::of(6.0) * ln10];
        for span in data.spans() {
            let span = if span > S::zero() { span } else { S::one() };
            let l10 = span.log10();
            lower.push((l10 - S::of(2.0)) * ln10);
            upper.push((l10 + S::one()) * ln10);
        }
        for &i in &free {
            let (lo, hi) = constraints.search_bounds(i);
            lower.push(std.fwd(lo));
            upper.push(std.fwd(hi));
        }
        debug_assert_eq!(lower.len(), 2 + d + free.len());
        Self {
            data,
            smoothness,
            std,
            base_values,
            free,
            lower,
            upper,
        }
    }

    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn params_of(&self, x: &[S]) -> GpParams<S> {
        let d = self.dim();
        GpParams {
            mean_const: x[0],
            variance: x[1].exp(),
            lengthscales: x[2..2 + d].iter().map(|v| v.exp()).collect(),
            smoothness: self.smoothness,
        }
    }

    fn values_of(&self, x: &[S]) -> Vec<S> {
        let d = self.dim();
        let mut z = self.base_values.clone();
        for (k, &i) in self.free.iter().enumerate() {
            z[i] = x[2 + d + k];
        }
        z
    }

    fn evaluate(&self, x: &[S]) -> Option<(S, Vec<S>)> {
        let d = self.dim();
        let params = self.params_of(x);
        if params.validate().is_err() {
            return None;
        }
        let values = self.values_of(x);
        let ds = self.data.with_values(values).ok()?;
        let chol = kernel::gram_cholesky(&ds, &params).ok()?;
        let g = kernel::nll_gradient_from_factor(&ds, &params, &chol);
        let mut grad = Vec::with_capacity(x.len());
        grad.push(g.d_mean_const);
        grad.push(g.d_log_variance);
        grad.extend_from_slice(&g.d_log_lengthscales);
        for &i in &self.free {
            grad.push(g.d_values[i]);
        }
        debug_assert_eq!(grad.len(), 2 + d + self.free.len());
        Some((g.value, grad))
    }

    /// Encodes natural-unit parameters and values as a search vector.
    fn encode(&self, params: &GpParams<S>, values: &[S]) -> Vec<S> {
        let mut x = vec![
            self.std.fwd(params.mean_const),
            (params.variance / (self.std.scale * self.std.scale)).ln(),
        ];
        x.extend(params.lengthscales.iter().map(|r| r.ln()));
        for &i in &self.free {
            x.push(self.std.fwd(values[i]));
        }
        x
    }

    /// Decodes a search vector into natural-unit parameters and relaxed
    /// values, clamped into the constraint box.
    fn decode(&self, x: &[S], constraints: &ConstraintBox<S>) -> (GpParams<S>, Vec<S>) {
        let p = self.params_of(x);
        let params = GpParams {
            mean_const: self.std.inv(p.mean_const),
            variance: p.variance * self.std.scale * self.std.scale,
            lengthscales: p.lengthscales,
            smoothness: self.smoothness,
        };
        let mut values = self.data.values().to_vec();
        let std_values = self.values_of(x);
        for &i in &self.free {
            values[i] = self.std.inv(std_values[i]);
        }
        (params, constraints.project(&values))
    }

    fn base_start(&self) -> Vec<S> {
        let mut x = vec![S::zero(), S::zero()];
        for span in self.data.spans() {
            let span = if span > S::zero() { span } else { S::one() };
            x.push((span.log10() - S::of(0.5)) * S::LN_10());
        }
        for &i in &self.free {
            x.push(self.base_values[i]);
        }
        x
    }
}

/// Log10-lengthscale offset patterns for the perturbed starts.
fn perturbation(k: usize, j: usize, amplitude: f64) -> f64 {
    let sign = match k % 4 {
        0 => 1.0,
        1 => -1.0,
        2 => {
            if j % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        }
        _ => {
            if j % 2 == 0 {
                -1.0
            } else {
                1.0
            }
        }
    };
    sign * amplitude
}

fn perturbed_starts<S: Scalar>(base: &[S], d: usize, config: &FitConfig) -> Vec<Vec<S>> {
    let mut starts: Vec<Vec<S>> = Vec::new();
    for k in 0..config.perturbed_starts.min(4) {
        let mut x = base.to_vec();
        for j in 0..d {
            x[2 + j] += S::of(perturbation(k, j, config.perturbation_log10)) * S::LN_10();
        }
        if !starts.contains(&x) && x != base {
            starts.push(x);
        }
    }
    starts
}

fn run_starts<S: Scalar>(
    problem: &SearchProblem<'_, S>,
    starts: &[Vec<S>],
    solver: &BoundedLbfgs,
) -> Result<(Vec<S>, S)> {
    let mut best: Option<(Vec<S>, S)> = None;
    let mut failures = 0usize;
    for (k, x0) in starts.iter().enumerate() {
        match solver.minimize(|x| problem.evaluate(x), x0, &problem.lower, &problem.upper) {
            Some(m) => {
                debug!(
                    "start {k}: nll {} after {} iterations (converged: {})",
                    m.value, m.iterations, m.converged
                );
                if best.as_ref().is_none_or(|(_, v)| m.value < *v) {
                    best = Some((m.x, m.value));
                }
            }
            None => failures += 1,
        }
    }
    best.ok_or_else(|| {
        RegpError::FitFailed(format!(
            "all {failures} starts failed to factorize the Gram matrix (n = {}, d = {})",
            problem.data.len(),
            problem.data.dim()
        ))
    })
}

/// Plain maximum-likelihood GP fit (no relaxation).
pub fn fit_mle<S: Scalar>(data: &Dataset<S>, config: &FitConfig) -> Result<FittedRegp<S>> {
    fit_mle_from(data, config, None)
}

/// Plain maximum-likelihood fit with an optional extra starting point.
pub fn fit_mle_from<S: Scalar>(
    data: &Dataset<S>,
    config: &FitConfig,
    warm: Option<&GpParams<S>>,
) -> Result<FittedRegp<S>> {
    let relaxation = RelaxationSet::empty();
    let constraints = build_constraints(data.values(), &relaxation);
    let problem = SearchProblem::new(data, &constraints, config.smoothness);
    let base = problem.base_start();
    let mut starts = vec![base.clone()];
    starts.extend(perturbed_starts(&base, data.dim(), config));
    if let Some(w) = warm {
        if w.dim() == data.dim() {
            let x: Vec<S> = problem
                .encode(w, data.values())
                .iter()
                .enumerate()
                .map(|(i, &v)| v.max(problem.lower[i]).min(problem.upper[i]))
                .collect();
            starts.push(x);
        }
    }
    let (x, _) = run_starts(&problem, &starts, &config.solver)?;
    let (params, values) = problem.decode(&x, &constraints);
    FittedRegp::from_parts(data.clone(), relaxation, params, values)
}

/// Joint maximum-likelihood estimation of hyperparameters and relaxed
/// values over `Θ × C_{R,n}`.
pub fn fit_regp<S: Scalar>(
    data: &Dataset<S>,
    relaxation: &RelaxationSet<S>,
    config: &FitConfig,
) -> Result<FittedRegp<S>> {
    if data.len() < 2 {
        return Err(RegpError::InvalidInput(
            "at least two observations are required".into(),
        ));
    }
    let mle = fit_mle(data, config)?;
    fit_regp_from(data, relaxation, config, &mle, None)
}

/// Joint fit given a plain MLE fit of the same data.
///
/// Starts from `(θ̂_MLE, z_n)`; without `warm`, also from perturbed
/// lengthscales with relaxed values at the nearest interval endpoints.
/// With `warm`, the perturbed starts are replaced by the warm model's
/// `(θ̂, z★)` projected onto the new constraint box, and only the better of
/// the two starting points is refined.
pub fn fit_regp_from<S: Scalar>(
    data: &Dataset<S>,
    relaxation: &RelaxationSet<S>,
    config: &FitConfig,
    mle: &FittedRegp<S>,
    warm: Option<&WarmStart<S>>,
) -> Result<FittedRegp<S>> {
    let constraints = build_constraints(data.values(), relaxation);
    if constraints.free_indices().is_empty() {
        return FittedRegp::from_parts(
            data.clone(),
            relaxation.clone(),
            mle.params().clone(),
            data.values().to_vec(),
        );
    }
    let problem = SearchProblem::new(data, &constraints, config.smoothness);
    let clamp = |x: Vec<S>| -> Vec<S> {
        x.into_iter()
            .enumerate()
            .map(|(i, v)| v.max(problem.lower[i]).min(problem.upper[i]))
            .collect()
    };
    let mle_start = clamp(problem.encode(mle.params(), data.values()));
    let mut starts = vec![mle_start.clone()];
    match warm.filter(|w| w.values.len() == data.len() && w.params.dim() == data.dim()) {
        Some(w) => {
            let projected = constraints.project(&w.values);
            let warm_start = clamp(problem.encode(&w.params, &projected));
            // Only the start with the lower objective is refined.
            let value = |x: &[S]| problem.evaluate(x).map(|(v, _)| v);
            if let (Some(vw), Some(vm)) = (value(&warm_start), value(&mle_start)) {
                if vw < vm {
                    starts = vec![warm_start];
                }
            } else {
                starts.push(warm_start);
            }
        }
        None => {
            let d = data.dim();
            let mut endpoint_start = mle_start.clone();
            for (k, &i) in problem.free.iter().enumerate() {
                let e = constraints.nearest_endpoint(i);
                endpoint_start[2 + d + k] = problem.std.fwd(e);
            }
            let endpoint_start = clamp(endpoint_start);
            for x in perturbed_starts(&endpoint_start, d, config) {
                starts.push(clamp(x));
            }
        }
    }
    let (x, _) = run_starts(&problem, &starts, &config.solver)?;
    let (params, values) = problem.decode(&x, &constraints);
    FittedRegp::from_parts(data.clone(), relaxation.clone(), params, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constraint_mapping() {
        let b = build_constraints(&[2.0, 0.1], &RelaxationSet::above(1.0));
        assert_eq!(
            b.constraints(),
            &[Constraint::Interval(1.0, f64::INFINITY), Constraint::Fixed(0.1)]
        );
        let b = build_constraints(&[2.0, 0.1], &RelaxationSet::empty());
        assert!(b.constraints().iter().all(|c| !c.is_relaxed()));
        let r = RelaxationSet::two_sided(1.0).unwrap();
        let b = build_constraints(&[-3.0, 0.0, 3.0], &r);
        assert_eq!(
            b.constraints(),
            &[
                Constraint::Interval(f64::NEG_INFINITY, -1.0),
                Constraint::Fixed(0.0),
                Constraint::Interval(1.0, f64::INFINITY)
            ]
        );
        // Closed intervals: the endpoint itself is relaxed.
        let b = build_constraints(&[1.0], &RelaxationSet::above(1.0));
        assert!(b.constraints()[0].is_relaxed());
        assert!(b.contains(&[1.0]));
    }

    #[test]
    fn relaxation_set_validation() {
        assert!(RelaxationSet::new(vec![(1.0, 1.0)]).is_err());
        assert!(RelaxationSet::new(vec![(0.0, 2.0), (2.0, 3.0)]).is_err());
        assert!(RelaxationSet::new(vec![(0.0, 1.0), (2.0, 3.0)]).is_ok());
        assert!(RelaxationSet::two_sided(0.0).is_err());
        let big = RelaxationSet::above(1.0);
        let small = RelaxationSet::above(2.0);
        assert!(small.is_subset_of(&big));
        assert!(!big.is_subset_of(&small));
    }

    #[test]
    fn relax_single_point() {
        let data = Dataset::new(vec![vec![0.0]], vec![5.0]).unwrap();
        let p = GpParams::new(0.0, 1.0, vec![1.0], Smoothness::FiveHalves).unwrap();
        let b = build_constraints(data.values(), &RelaxationSet::above(1.0));
        assert_eq!(relax_fixed_params(&data, &p, &b).unwrap(), vec![1.0]);
    }

    #[test]
    fn relax_all_fixed_is_identity() {
        let data = Dataset::new(vec![vec![0.0], vec![1.0]], vec![0.3, -0.2]).unwrap();
        let p = GpParams::new(0.0, 1.0, vec![1.0], Smoothness::FiveHalves).unwrap();
        let b = build_constraints(data.values(), &RelaxationSet::above(1.0));
        assert_eq!(relax_fixed_params(&data, &p, &b).unwrap(), vec![0.3, -0.2]);
    }

    #[test]
    fn relax_two_points_hand_case() {
        // ν = 1/2 with lag ln 2 gives K = [[1, 0.5], [0.5, 1]].
        let data = Dataset::new(vec![vec![0.0], vec![2f64.ln()]], vec![2.0, 0.1]).unwrap();
        let p = GpParams::new(0.0, 1.0, vec![1.0], Smoothness::Half).unwrap();
        let b = build_constraints(data.values(), &RelaxationSet::above(1.0));
        let z = relax_fixed_params(&data, &p, &b).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-12, "{z:?}");
        assert_eq!(z[1], 0.1);
    }

    #[test]
    fn empty_relaxation_reproduces_mle() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 / 5.0]).collect();
        let vals: Vec<f64> = pts.iter().map(|p| (4.0 * p[0]).sin()).collect();
        let data = Dataset::new(pts, vals).unwrap();
        let cfg = FitConfig::default();
        let a = fit_mle(&data, &cfg).unwrap();
        let b = fit_regp(&data, &RelaxationSet::empty(), &cfg).unwrap();
        assert_eq!(a.params(), b.params());
        assert_eq!(b.relaxed_values(), data.values());
    }
}
