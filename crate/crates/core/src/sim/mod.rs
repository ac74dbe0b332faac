//! Simulation scenarios for checking the funnel benchmark against the
//! pseudo-observation comparator.
//!
//! Weibull laws use cumulative hazard `H(t) = (rate t)^shape`.

mod config;
mod diagnostics;
mod generate;
mod run;

pub use config::{ScenarioConfig, PRESETS};
pub use diagnostics::{censoring_dependence, ols_slope, CensoringDependence, SlopeTest};
pub use generate::{generate_dataset, sample_center_size, solve_nonph_shape, CenterTruth, SimulatedData};
pub use run::{
    diagnostics_csv, format_table_text, run_scenario, summarize_table, DiagnosticRow, Percentages, ScenarioRun,
    SimulationSummary,
};
