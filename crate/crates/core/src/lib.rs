//! Case-mix adjusted funnel plots for censored survival outcomes.
//!
//! Centers are benchmarked on deaths (or losses to follow-up) observed within
//! a horizon `tau` against the number expected under a pooled proportional
//! hazards model, with each center's own follow-up distribution taken into
//! account. The observed counts are compared with their exact
//! Poisson-binomial law under the null, summarized as `O/E` against an
//! effective sample size, and drawn as a funnel.
//!
//! The estimators are generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the double precision instantiation used by the
//! simulation laboratory and the command line tool.

pub mod cox;
pub mod error;
pub mod funnel;
pub mod pseudo;
pub mod scalar;
pub mod sim;
pub mod survdata;

pub use cox::{fit_cox, Baseline, CoxFit, ModelSpec};
pub use error::{Error, Result};
pub use funnel::{
    benchmark_followup, benchmark_mortality, BenchmarkConfig, BenchmarkReport, CenterSummary, Classification,
    FunnelChart, FunnelGeometry, Multiplicity, Outcome,
};
pub use pseudo::{
    bootstrap_prediction_intervals, compare_pseudo, fit_pseudo_model, pseudo_observations, pseudo_z, PredictionInterval,
    PseudoComparison, PseudoFit,
};
pub use scalar::Scalar;
pub use sim::{generate_dataset, run_scenario, solve_nonph_shape, summarize_table, ScenarioConfig, SimulationSummary};
pub use survdata::{
    kaplan_meier, normal_quantile, poisson_binomial_p_value, poisson_binomial_pmf, reverse_kaplan_meier,
    Dataset, StepFunction, SubjectRecord,
};

pub type SubjectRecord64 = SubjectRecord<f64>;
pub type Dataset64 = Dataset<f64>;
pub type StepFunction64 = StepFunction<f64>;
pub type CoxFit64 = CoxFit<f64>;
pub type CenterSummary64 = CenterSummary<f64>;
pub type BenchmarkConfig64 = BenchmarkConfig<f64>;
pub type BenchmarkReport64 = BenchmarkReport<f64>;
pub type PredictionInterval64 = PredictionInterval<f64>;
pub type PseudoComparison64 = PseudoComparison<f64>;
