//! Finite-sample hypothesis tests for stacked estimating equations.
//!
//! Two-stage M-estimation problems are solved by repeated Bernoulli sample
//! splitting: the first-stage parameter is fitted on each training half,
//! plugged into the second stage on the complementary half, and the
//! per-split p-values are averaged and then calibrated against a simulated
//! null distribution. The crate also ships the reference baselines (exact
//! F-test, sandwich Wald test, Meinshausen-Buhlmann aggregation), the error
//! laws and data generators of the level/power studies, a constrained
//! logistic activity-score model family, and a Monte Carlo harness that
//! reproduces the benchmark tables at desk scale.

pub mod baselines;
pub mod boot;
pub mod data;
pub mod dist;
pub mod ee;
pub mod error;
pub mod io;
pub mod linalg;
pub mod models;
pub mod rng;
pub mod sim;
pub mod split;
pub mod stats;

pub use boot::{
    aggregate_pvalues, bootstrap_test, per_split_pvalue, simulate_null, BootConfig,
    BootstrapTestReport, IndexInference, NullEngine, PValueAggregate, SplitInference, TestSeeds,
    VarianceMode,
};
pub use data::{Dataset, RecordView};
pub use dist::{generate_level_power_data, sample_errors, ErrorDistribution};
pub use ee::{
    normalize_direction, sandwich_covariance, solve_equation, solve_stacked, EstimatingEquation,
    SecondStage, SolveOptions, SolveReport, StackedFit, StackedModel,
};
pub use error::{Error, Result, Stage};
pub use models::{IndexModel, RescaledScore, ScoreModel};
pub use sim::{
    emit_table, run_level, run_mb_level, run_power, run_var_curve, Experiment, ExperimentSpec,
    ResultTable, TableFormat,
};
pub use split::{
    make_split_plan, make_split_plan_with_min, multi_split_estimate, single_split_estimate,
    split_variance, split_variance_curve, SplitEstimate, SplitPlan, SplitRow,
};
