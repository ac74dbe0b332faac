//! Command-line front end: CSV ingestion, run configuration, SVG funnel
//! rendering and the subcommand drivers.

pub mod commands;
pub mod config;
pub mod ingest;
pub mod svg;

pub use config::RunConfig;
pub use ingest::{load_dataset, read_dataset};
pub use svg::{render_funnel_svg, write_funnel_svg};
