use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use survfunnel::funnel::Multiplicity;
use survfunnel_cli::commands::{self, SimulateOptions};
use survfunnel_cli::RunConfig;

#[derive(Parser)]
#[command(name = "survfunnel", version, about = "Funnel plots for center benchmarking on time-to-event outcomes")]
struct Cli {
    /// Repeat for more log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Benchmark deaths by the horizon against a pooled case-mix model.
    FunnelMortality(RunArgs),
    /// Benchmark losses to follow-up by the horizon.
    FunnelFollowup(RunArgs),
    /// Compare centers with the pseudo-observation bootstrap.
    PseudoCompare(RunArgs),
    /// Fit the case-mix model and write its report and baseline hazard.
    FitReport {
        #[command(flatten)]
        run: RunArgs,
        /// Separate baseline per center.
        #[arg(long)]
        stratified: bool,
    },
    /// Run simulation scenarios and tabulate the results.
    Simulate(SimArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Subject-level CSV with center_id, time, status and optional entry_time.
    #[arg(long)]
    input: Option<PathBuf>,
    /// TOML run configuration; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Horizon in the time unit of the data.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated covariate columns (default: all non-required columns).
    #[arg(long, value_delimiter = ',')]
    covariates: Option<Vec<String>>,
    #[arg(long)]
    no_impute: bool,
    /// Outer limits without the Bonferroni adjustment.
    #[arg(long)]
    no_bonferroni: bool,
    #[arg(long)]
    min_center_size: Option<usize>,
    /// Bootstrap replicates for pseudo-compare.
    #[arg(long)]
    bootstrap: Option<usize>,
}

impl RunArgs {
    fn resolve(self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            input: self.input,
            covariates: self.covariates,
            tau: self.tau,
            alpha: self.alpha,
            multiplicity: self.no_bonferroni.then_some(Multiplicity::None),
            min_center_size: self.min_center_size,
            small_center_threshold: None,
            impute: self.no_impute.then_some(false),
            out_dir: self.out_dir,
            seed: self.seed,
            bootstrap: self.bootstrap,
        };
        Ok(file.overlay(flags))
    }
}

#[derive(Args)]
struct SimArgs {
    /// Preset names or scenario TOML files (default: all presets).
    scenarios: Vec<String>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Use full-size center, replication and bootstrap counts.
    #[arg(long)]
    paper_scale: bool,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    bootstrap: Option<usize>,
    /// Log censoring rate shared by centers in same-follow-up scenarios.
    #[arg(long, allow_hyphen_values = true)]
    same_fup_log_rate: Option<f64>,
    #[arg(long)]
    no_pseudo: bool,
    /// Also write the first replicate's data per scenario.
    #[arg(long)]
    export_data: bool,
}

fn run(cli: Cli) -> Result<()> {
    let files = match cli.command {
        Command::FunnelMortality(a) => commands::funnel_mortality(&a.resolve()?)?,
        Command::FunnelFollowup(a) => commands::funnel_followup(&a.resolve()?)?,
        Command::PseudoCompare(a) => commands::pseudo_compare(&a.resolve()?)?,
        Command::FitReport { run, stratified } => commands::fit_report(&run.resolve()?, stratified)?,
        Command::Simulate(a) => commands::simulate(&SimulateOptions {
            scenarios: a.scenarios,
            paper_scale: a.paper_scale,
            seed: a.seed,
            replications: a.replications,
            bootstrap: a.bootstrap,
            same_followup_log_rate: a.same_fup_log_rate,
            no_pseudo: a.no_pseudo,
            export_data: a.export_data,
            out_dir: a.out_dir,
        })?,
    };
    for f in files {
        log::info!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
