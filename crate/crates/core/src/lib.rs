//! Estimation of long autoregressions with coefficients restricted to a
//! weighted ellipsoid, together with the simulators and the Monte Carlo
//! harness used to benchmark it against AIC-selected AR fits.

pub mod error;
pub mod estimate;
pub mod forecast;
pub mod harness;
pub mod model;
pub mod simulate;

pub use error::{Error, Result};
pub use estimate::{
    build_design, constrained_solve, degrees_of_freedom, fit_ols_ar, ridge_solve, select_aic_order,
    select_b, FitResult, RegressionData, SelectionResult,
};
pub use forecast::{evaluate, predict, uniform_bound_diagnostic, EvaluationReport};
pub use model::{in_ellipsoid, rkhs_norm, CoefficientVector, EllipsoidSpec, WeightSequence};
pub use simulate::{ArfimaSpec, SeriesSample, ShortMemorySpec};
