//! Observed against expected counts per center and the funnel built on them.

mod chart;
mod geometry;
mod impute;
mod pipeline;
mod probability;
mod summary;

pub use chart::{build_funnel_chart, BucketCounts, ChartPoint, FunnelChart, LimitCurve};
pub use geometry::{funnel_limits, pooled_proportion, raw_funnel_limits, FunnelGeometry, LimitLevel};
pub use impute::{impute_case_mix, ImputationReport, ImputedColumn};
pub use pipeline::{benchmark_followup, benchmark_mortality, BenchmarkReport};
pub use probability::{event_probabilities, event_probability, followup_probabilities, followup_probability};
pub use summary::{
    effective_sample_size, summaries_csv, summarize_center, BenchmarkConfig, CenterSummary, Classification,
    Multiplicity, Outcome,
};
