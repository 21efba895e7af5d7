//! Matérn kernels, datasets, the Cholesky-factored Gram matrix, the kriging
//! posterior and the Gaussian negative log-likelihood.

use std::fmt;
use std::str::FromStr;

use crate::error::{RegpError, Result};
use crate::linalg::{self, SquareMatrix};
use crate::scalar::Scalar;

/// Regularity ν of the Matérn family. Only the closed-form members are
/// supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Smoothness {
    /// ν = 1/2, exponential correlation.
    Half,
    /// ν = 3/2.
    ThreeHalves,
    /// ν = 5/2.
    #[default]
    FiveHalves,
    /// ν → ∞, squared-exponential correlation.
    Infinite,
}

impl Smoothness {
    /// Correlation as a function of the scaled distance `s = ‖h‖_ρ`.
    #[inline]
    pub fn correlation<S: Scalar>(self, s: S) -> S {
        match self {
            Smoothness::Half => (-s).exp(),
            Smoothness::ThreeHalves => {
                let a = S::of(3.0f64.sqrt()) * s;
                (S::one() + a) * (-a).exp()
            }
            Smoothness::FiveHalves => {
                let a = S::of(5.0f64.sqrt()) * s;
                (S::one() + a + a * a / S::of(3.0)) * (-a).exp()
            }
            Smoothness::Infinite => (-(s * s) / S::of(2.0)).exp(),
        }
    }

    /// `-r'(s) / s`, which multiplies `(h_j / ρ_j)²` in `∂r / ∂ log ρ_j`.
    ///
    /// For ν = 1/2 this is singular at `s = 0`; callers only use it for
    /// distinct points.
    #[inline]
    pub fn radial_slope<S: Scalar>(self, s: S) -> S {
        match self {
            Smoothness::Half => {
                if s > S::zero() {
                    (-s).exp() / s
                } else {
                    S::zero()
                }
            }
            Smoothness::ThreeHalves => {
                let a = S::of(3.0f64.sqrt()) * s;
                S::of(3.0) * (-a).exp()
            }
            Smoothness::FiveHalves => {
                let a = S::of(5.0f64.sqrt()) * s;
                S::of(5.0 / 3.0) * (S::one() + a) * (-a).exp()
            }
            Smoothness::Infinite => (-(s * s) / S::of(2.0)).exp(),
        }
    }

    pub fn nu(self) -> f64 {
        match self {
            Smoothness::Half => 0.5,
            Smoothness::ThreeHalves => 1.5,
            Smoothness::FiveHalves => 2.5,
            Smoothness::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Smoothness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Smoothness::Half => f.write_str("0.5"),
            Smoothness::ThreeHalves => f.write_str("1.5"),
            Smoothness::FiveHalves => f.write_str("2.5"),
            Smoothness::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Smoothness {
    type Err = RegpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "0.5" | "1/2" | "half" => Ok(Smoothness::Half),
            "1.5" | "3/2" => Ok(Smoothness::ThreeHalves),
            "2.5" | "5/2" => Ok(Smoothness::FiveHalves),
            "inf" | "infinity" | "infinite" => Ok(Smoothness::Infinite),
            other => Err(RegpError::InvalidParameter(format!(
                "unsupported smoothness {other:?} (expected 0.5, 1.5, 2.5 or inf)"
            ))),
        }
    }
}

/// Constant mean, process variance, anisotropic lengthscales and Matérn
/// regularity.
#[derive(Debug, Clone, PartialEq)]
pub struct GpParams<S> {
    pub mean_const: S,
    pub variance: S,
    pub lengthscales: Vec<S>,
    pub smoothness: Smoothness,
}

impl<S: Scalar> GpParams<S> {
    pub fn new(
        mean_const: S,
        variance: S,
        lengthscales: Vec<S>,
        smoothness: Smoothness,
    ) -> Result<Self> {
        let p = Self {
            mean_const,
            variance,
            lengthscales,
            smoothness,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance > S::zero()) || !self.variance.is_finite() {
            return Err(RegpError::InvalidParameter(format!(
                "variance must be positive, got {}",
                self.variance
            )));
        }
        if !self.mean_const.is_finite() {
            return Err(RegpError::InvalidParameter("mean must be finite".into()));
        }
        check_lengthscales(&self.lengthscales)
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// Covariance `σ² r(x - y)`.
    pub fn covariance(&self, x: &[S], y: &[S]) -> S {
        self.variance
            * self
                .smoothness
                .correlation(scaled_distance(x, y, &self.lengthscales))
    }
}

fn check_lengthscales<S: Scalar>(lengthscales: &[S]) -> Result<()> {
    if lengthscales.is_empty() {
        return Err(RegpError::InvalidParameter(
            "at least one lengthscale is required".into(),
        ));
    }
    if let Some(bad) = lengthscales
        .iter()
        .find(|&&r| !(r > S::zero()) || !r.is_finite())
    {
        return Err(RegpError::InvalidParameter(format!(
            "lengthscales must be positive, got {bad}"
        )));
    }
    Ok(())
}

/// `‖x - y‖_ρ`.
#[inline]
pub(crate) fn scaled_distance<S: Scalar>(x: &[S], y: &[S], lengthscales: &[S]) -> S {
    let mut acc = S::zero();
    for ((&a, &b), &r) in x.iter().zip(y).zip(lengthscales) {
        let u = (a - b) / r;
        acc += u * u;
    }
    acc.sqrt()
}

/// Anisotropic Matérn correlation `r(h)`.
pub fn matern_correlation<S: Scalar>(
    h: &[S],
    lengthscales: &[S],
    smoothness: Smoothness,
) -> Result<S> {
    check_lengthscales(lengthscales)?;
    if h.len() != lengthscales.len() {
        return Err(RegpError::InvalidInput(format!(
            "lag has dimension {} but there are {} lengthscales",
            h.len(),
            lengthscales.len()
        )));
    }
    let mut acc = S::zero();
    for (&hj, &r) in h.iter().zip(lengthscales) {
        let u = hj / r;
        acc += u * u;
    }
    Ok(smoothness.correlation(acc.sqrt()))
}

/// Observation locations and values.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<S> {
    dim: usize,
    points: Vec<S>,
    values: Vec<S>,
}

impl<S: Scalar> Dataset<S> {
    /// Validates shapes, finiteness and pairwise distinctness of the rows.
    pub fn new(points: Vec<Vec<S>>, values: Vec<S>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(RegpError::InvalidInput("dataset must be non-empty".into()));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(RegpError::InvalidInput("points must have dimension >= 1".into()));
        }
        let mut flat = Vec::with_capacity(n * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(RegpError::InvalidInput(format!(
                    "point {i} has dimension {} (expected {dim})",
                    p.len()
                )));
            }
            flat.extend_from_slice(p);
        }
        Self::from_flat(dim, flat, values)
    }

    pub fn from_flat(dim: usize, points: Vec<S>, values: Vec<S>) -> Result<Self> {
        if dim == 0 || points.len() % dim != 0 {
            return Err(RegpError::InvalidInput("ragged point storage".into()));
        }
        let n = points.len() / dim;
        if n == 0 {
            return Err(RegpError::InvalidInput("dataset must be non-empty".into()));
        }
        if values.len() != n {
            return Err(RegpError::InvalidInput(format!(
                "{n} points but {} values",
                values.len()
            )));
        }
        if points.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(RegpError::InvalidInput("non-finite entry in dataset".into()));
        }
        let ds = Self {
            dim,
            points,
            values,
        };
        for i in 0..n {
            for j in 0..i {
                if ds.point(i) == ds.point(j) {
                    return Err(RegpError::InvalidInput(format!(
                        "duplicate points at rows {j} and {i}"
                    )));
                }
            }
        }
        Ok(ds)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[S] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[S]> {
        self.points.chunks_exact(self.dim)
    }

    #[inline]
    pub fn values(&self) -> &[S] {
        &self.values
    }

    /// Same locations, different values.
    pub fn with_values(&self, values: Vec<S>) -> Result<Self> {
        if values.len() != self.len() {
            return Err(RegpError::InvalidInput(format!(
                "expected {} values, got {}",
                self.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(RegpError::InvalidInput("non-finite value".into()));
        }
        Ok(Self {
            dim: self.dim,
            points: self.points.clone(),
            values,
        })
    }

    /// Appends one observation; rejects duplicates of existing rows.
    pub fn push(&mut self, x: &[S], z: S) -> Result<()> {
        if x.len() != self.dim {
            return Err(RegpError::InvalidInput(format!(
                "point has dimension {} (expected {})",
                x.len(),
                self.dim
            )));
        }
        if !z.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(RegpError::InvalidInput("non-finite observation".into()));
        }
        if self.contains_point(x) {
            return Err(RegpError::InvalidInput("duplicate point".into()));
        }
        self.points.extend_from_slice(x);
        self.values.push(z);
        Ok(())
    }

    pub fn contains_point(&self, x: &[S]) -> bool {
        self.points().any(|p| p == x)
    }

    /// Dataset with row `i` removed; `None` if that would leave it empty.
    pub fn without(&self, i: usize) -> Option<Self> {
        if self.len() <= 1 || i >= self.len() {
            return None;
        }
        let mut points = self.points.clone();
        points.drain(i * self.dim..(i + 1) * self.dim);
        let mut values = self.values.clone();
        values.remove(i);
        Some(Self {
            dim: self.dim,
            points,
            values,
        })
    }

    /// Per-dimension `max - min` of the locations.
    pub fn spans(&self) -> Vec<S> {
        (0..self.dim)
            .map(|j| {
                let (lo, hi) = self.points().fold((S::infinity(), S::neg_infinity()), |(lo, hi), p| {
                    (lo.min(p[j]), hi.max(p[j]))
                });
                hi - lo
            })
            .collect()
    }
}

/// Relative diagonal jitter levels tried, in order, before giving up.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-10, 1e-8, 1e-6];

/// Lower Cholesky factor of `K_n + jitter_used · I`.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyGram<S> {
    pub lower_factor: SquareMatrix<S>,
    pub jitter_used: S,
}

impl<S: Scalar> CholeskyGram<S> {
    pub fn dim(&self) -> usize {
        self.lower_factor.dim()
    }

    pub fn solve(&self, b: &[S]) -> Vec<S> {
        linalg::cholesky_solve(&self.lower_factor, b)
    }

    pub fn inverse(&self) -> SquareMatrix<S> {
        linalg::cholesky_inverse(&self.lower_factor)
    }

    pub fn log_det(&self) -> S {
        linalg::log_det_from_cholesky(&self.lower_factor)
    }
}

/// Gram matrix `K_n` with entries `k(x_i, x_j)`.
pub fn gram_matrix<S: Scalar>(data: &Dataset<S>, params: &GpParams<S>) -> SquareMatrix<S> {
    let n = data.len();
    let mut k = SquareMatrix::zeros(n);
    for i in 0..n {
        k.set(i, i, params.variance);
        for j in 0..i {
            let v = params.covariance(data.point(i), data.point(j));
            k.set(i, j, v);
            k.set(j, i, v);
        }
    }
    k
}

fn check_dims<S: Scalar>(data: &Dataset<S>, params: &GpParams<S>) -> Result<()> {
    params.validate()?;
    if data.dim() != params.dim() {
        return Err(RegpError::InvalidInput(format!(
            "dataset dimension {} but {} lengthscales",
            data.dim(),
            params.dim()
        )));
    }
    Ok(())
}

/// Factorizes `K_n`, escalating through [`JITTER_LADDER`] (relative to σ²).
pub fn gram_cholesky<S: Scalar>(data: &Dataset<S>, params: &GpParams<S>) -> Result<CholeskyGram<S>> {
    check_dims(data, params)?;
    factor_with_jitter(gram_matrix(data, params), params.variance)
}

pub(crate) fn factor_with_jitter<S: Scalar>(
    k: SquareMatrix<S>,
    variance: S,
) -> Result<CholeskyGram<S>> {
    for &rel in JITTER_LADDER.iter() {
        let jitter = S::of(rel) * variance;
        let mut kj = k.clone();
        if rel > 0.0 {
            kj.add_diagonal(jitter);
        }
        if let Some(l) = linalg::cholesky(&kj) {
            return Ok(CholeskyGram {
                lower_factor: l,
                jitter_used: jitter,
            });
        }
    }
    Err(RegpError::SingularGram {
        n: k.dim(),
        max_jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
    })
}

/// Gaussian predictive law `N(mean, variance)` at one location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPredictive<S> {
    pub mean: S,
    pub variance: S,
}

impl<S: Scalar> GaussianPredictive<S> {
    /// Clamps round-off negative variances to zero.
    pub fn new(mean: S, variance: S) -> Self {
        Self {
            mean,
            variance: variance.max(S::zero()),
        }
    }

    pub fn sd(&self) -> S {
        self.variance.sqrt()
    }
}

/// Reusable kriging predictor: the factorized Gram matrix and the weights
/// `K_n⁻¹ (z - c𝟙)` for one set of values.
#[derive(Debug, Clone)]
pub struct GpPosterior<S> {
    points: Vec<S>,
    dim: usize,
    params: GpParams<S>,
    chol: CholeskyGram<S>,
    weights: Vec<S>,
}

impl<S: Scalar> GpPosterior<S> {
    pub fn new(data: &Dataset<S>, params: &GpParams<S>, chol: CholeskyGram<S>) -> Result<Self> {
        check_dims(data, params)?;
        if chol.dim() != data.len() {
            return Err(RegpError::InvalidInput(format!(
                "factor has size {} but dataset has {} rows",
                chol.dim(),
                data.len()
            )));
        }
        let resid: Vec<S> = data.values().iter().map(|&z| z - params.mean_const).collect();
        let weights = chol.solve(&resid);
        Ok(Self {
            points: data.points.clone(),
            dim: data.dim(),
            params: params.clone(),
            chol,
            weights,
        })
    }

    pub fn params(&self) -> &GpParams<S> {
        &self.params
    }

    pub fn chol(&self) -> &CholeskyGram<S> {
        &self.chol
    }

    /// `K_n⁻¹ (z - c𝟙)`.
    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    fn cross_covariance(&self, x: &[S]) -> Vec<S> {
        self.points
            .chunks_exact(self.dim)
            .map(|p| self.params.covariance(x, p))
            .collect()
    }

    pub fn predict(&self, x: &[S]) -> Result<GaussianPredictive<S>> {
        if x.len() != self.dim {
            return Err(RegpError::InvalidInput(format!(
                "query has dimension {} (expected {})",
                x.len(),
                self.dim
            )));
        }
        let mut kx = self.cross_covariance(x);
        let mean = self.params.mean_const + linalg::dot(&kx, &self.weights);
        linalg::solve_lower(&self.chol.lower_factor, &mut kx);
        let var = self.params.variance - linalg::dot(&kx, &kx);
        Ok(GaussianPredictive::new(mean, var))
    }

    pub fn predict_mean(&self, x: &[S]) -> Result<S> {
        if x.len() != self.dim {
            return Err(RegpError::InvalidInput("query dimension mismatch".into()));
        }
        let kx = self.cross_covariance(x);
        Ok(self.params.mean_const + linalg::dot(&kx, &self.weights))
    }
}

/// Kriging posterior at `x` with constant mean `c`.
pub fn posterior<S: Scalar>(
    data: &Dataset<S>,
    params: &GpParams<S>,
    chol: &CholeskyGram<S>,
    x: &[S],
) -> Result<GaussianPredictive<S>> {
    GpPosterior::new(data, params, chol.clone())?.predict(x)
}

/// Negative log-likelihood and its gradient.
///
/// The gradient is taken with respect to `(c, log σ², log ρ_1, …, log ρ_d)`
/// and with respect to the observed values.
#[derive(Debug, Clone, PartialEq)]
pub struct NllGradient<S> {
    pub value: S,
    pub d_mean_const: S,
    pub d_log_variance: S,
    pub d_log_lengthscales: Vec<S>,
    pub d_values: Vec<S>,
}

/// `log det K_n + (z - c𝟙)ᵀ K_n⁻¹ (z - c𝟙)`; the `n log 2π` constant and the
/// factor 1/2 are dropped.
pub fn negative_log_likelihood<S: Scalar>(data: &Dataset<S>, params: &GpParams<S>) -> Result<S> {
    let chol = gram_cholesky(data, params)?;
    Ok(nll_from_factor(data.values(), params.mean_const, &chol))
}

pub(crate) fn nll_from_factor<S: Scalar>(values: &[S], mean_const: S, chol: &CholeskyGram<S>) -> S {
    let mut r: Vec<S> = values.iter().map(|&z| z - mean_const).collect();
    linalg::solve_lower(&chol.lower_factor, &mut r);
    chol.log_det() + linalg::dot(&r, &r)
}

pub fn negative_log_likelihood_with_gradient<S: Scalar>(
    data: &Dataset<S>,
    params: &GpParams<S>,
) -> Result<NllGradient<S>> {
    let chol = gram_cholesky(data, params)?;
    Ok(nll_gradient_from_factor(data, params, &chol))
}

pub(crate) fn nll_gradient_from_factor<S: Scalar>(
    data: &Dataset<S>,
    params: &GpParams<S>,
    chol: &CholeskyGram<S>,
) -> NllGradient<S> {
    let n = data.len();
    let d = data.dim();
    let two = S::of(2.0);
    let resid: Vec<S> = data.values().iter().map(|&z| z - params.mean_const).collect();
    let alpha = chol.solve(&resid);
    let quad = linalg::dot(&resid, &alpha);
    let value = chol.log_det() + quad;

    let kinv = chol.inverse();
    let mut d_log_lengthscales = vec![S::zero(); d];
    // ∂K/∂log ρ_j has zero diagonal, so only the strict lower triangle is
    // visited (and doubled).
    for a in 0..n {
        let pa = data.point(a);
        for b in 0..a {
            let pb = data.point(b);
            let s = scaled_distance(pa, pb, &params.lengthscales);
            let slope = params.variance * params.smoothness.radial_slope(s);
            let w = kinv.get(a, b) - alpha[a] * alpha[b];
            let ws = two * w * slope;
            for j in 0..d {
                let u = (pa[j] - pb[j]) / params.lengthscales[j];
                d_log_lengthscales[j] += ws * u * u;
            }
        }
    }
    let d_mean_const = -two * alpha.iter().copied().sum::<S>();
    // ∂K/∂log σ² = K - jitter I when jitter is proportional to σ²; the
    // relative jitter ladder makes it exactly K.
    let d_log_variance = S::of_usize(n) - quad;
    let d_values = alpha.iter().map(|&a| two * a).collect();
    NllGradient {
        value,
        d_mean_const,
        d_log_variance,
        d_log_lengthscales,
        d_values,
    }
}
