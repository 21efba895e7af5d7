//! Relaxed Gaussian-process interpolation and goal-oriented Bayesian
//! optimization.
//!
//! The crate provides kriging with Matérn kernels, relaxed GPs whose
//! observations inside a relaxation set only need to stay in their interval,
//! the truncated CRPS for Gaussian predictive laws, leave-one-out selection
//! of the relaxation set and the EGO / EGO-R minimization loops.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`). The aliases at
//! the crate root fix the scalar to `f64`; the `f32` variants live in
//! [`single`].
//!
//! ```
//! use regp::{fit_regp, Dataset, FitConfig, RelaxationSet};
//!
//! let data = Dataset::new(
//!     vec![vec![0.0], vec![0.3], vec![0.6], vec![1.0]],
//!     vec![5.0, 0.4, 0.1, 0.8],
//! )
//! .unwrap();
//! let model = fit_regp(&data, &RelaxationSet::above(1.0), &FitConfig::default()).unwrap();
//! assert!(model.relaxed_values()[0] >= 1.0);
//! let p = model.predict(&[0.45]).unwrap();
//! assert!(p.variance >= 0.0);
//! ```

pub mod design;
pub mod ego;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod normal;
pub mod optim;
pub mod qp;
pub mod quad;
pub mod relaxed;
pub mod scalar;
pub mod scoring;
pub mod selection;

pub use design::{initial_design, Domain};
pub use ego::{
    ego_r_step, ego_step, expected_improvement, gamma, maximize_acquisition, optimize,
    validation_threshold, AcquisitionConfig, EgoConfig, FnObjective, HeuristicConfig,
    HeuristicKind, Objective, Strategy,
};
pub use error::{RegpError, Result};
pub use kernel::{
    gram_cholesky, matern_correlation, negative_log_likelihood,
    negative_log_likelihood_with_gradient, posterior, Smoothness,
};
pub use relaxed::{build_constraints, fit_mle, fit_regp, relax_fixed_params, Constraint, FitConfig};
pub use scalar::Scalar;
pub use scoring::{crps, ei_up, tcrps, tcrps_divergence};
pub use selection::{build_candidate_grid, fast_loo, loo_tcrps, select_relaxation, GridKind};

/// Double-precision instantiations.
pub type GpParams = kernel::GpParams<f64>;
pub type Dataset = kernel::Dataset<f64>;
pub type CholeskyGram = kernel::CholeskyGram<f64>;
pub type GaussianPredictive = kernel::GaussianPredictive<f64>;
pub type RelaxationSet = relaxed::RelaxationSet<f64>;
pub type ConstraintBox = relaxed::ConstraintBox<f64>;
pub type FittedRegp = relaxed::FittedRegp<f64>;
pub type ScoreRange = scoring::ScoreRange<f64>;
pub type ScoreValue = scoring::ScoreValue<f64>;
pub type LooPredictives = selection::LooPredictives<f64>;
pub type CandidateGrid = selection::CandidateGrid<f64>;
pub type SelectionResult = selection::SelectionResult<f64>;
pub type AcquisitionState = ego::AcquisitionState<f64>;
pub type OptimizationTrace = ego::OptimizationTrace<f64>;
pub type TraceRow = ego::TraceRow<f64>;

/// Single-precision instantiations.
pub mod single {
    use super::{ego, kernel, relaxed, scoring, selection};

    pub type GpParams = kernel::GpParams<f32>;
    pub type Dataset = kernel::Dataset<f32>;
    pub type CholeskyGram = kernel::CholeskyGram<f32>;
    pub type GaussianPredictive = kernel::GaussianPredictive<f32>;
    pub type RelaxationSet = relaxed::RelaxationSet<f32>;
    pub type FittedRegp = relaxed::FittedRegp<f32>;
    pub type ScoreRange = scoring::ScoreRange<f32>;
    pub type SelectionResult = selection::SelectionResult<f32>;
    pub type OptimizationTrace = ego::OptimizationTrace<f32>;
}
