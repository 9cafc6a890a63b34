//! Compare the two standard Fisher information estimators for scalar
//! parameters with independent data: the averaged squared score and the
//! averaged negated Hessian.
//!
//! The crate provides second-order Taylor approximations of both estimators'
//! asymptotic variances, sufficient conditions under which the Hessian form is
//! no worse, and a seeded Monte Carlo harness with a one-sided t-test.

pub mod conditions;
pub mod error;
pub mod estimators;
pub mod model;
pub mod moments;
pub mod montecarlo;
pub mod report;
pub mod taylor;

pub use conditions::{check_conditions, ConditionReport, Recommendation, Verdict};
pub use error::{Error, Result};
pub use estimators::{g_bar, h_bar, EstimatorKind};
pub use model::{build_model, BuiltinFamily, BuiltinModel, Model, ModelConfig};
pub use moments::{double_factorial, empirical_moments, gaussian_moments, CentralMoments};
pub use montecarlo::{
    one_sided_t_test, run_full_experiment, run_simulation, sample_variance, SimulationConfig,
    SimulationResult, VarianceTarget,
};
pub use taylor::{
    taylor_aggregate, taylor_diff, taylor_var_g2, taylor_var_g2_naive, taylor_var_h, DerivBundle,
    TaylorVariances,
};
