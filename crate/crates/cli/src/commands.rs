use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use survfunnel::funnel::{
    benchmark_followup, benchmark_mortality, impute_case_mix, summaries_csv, BenchmarkReport, BucketCounts, Classification,
};
use survfunnel::pseudo::{compare_pseudo, pseudo_csv};
use survfunnel::sim::{
    censoring_dependence, diagnostics_csv, format_table_text, generate_dataset, run_scenario, summarize_table,
    ScenarioConfig, SlopeTest, PRESETS,
};
use survfunnel::{fit_cox, Dataset, Error, ModelSpec};

use crate::config::{RunConfig, DEFAULT_BOOTSTRAP, DEFAULT_SEED};
use crate::ingest::load_dataset;
use crate::svg::write_funnel_svg;

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn prepare_out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn load(cfg: &RunConfig) -> Result<Dataset<f64>> {
    load_dataset(cfg.input()?, cfg.covariates.as_deref())
}

fn report_text(report: &BenchmarkReport<f64>, tau: f64) -> String {
    let mut s = report.fit.report();
    let _ = writeln!(s, "\nOutcome: {} by {tau}", report.outcome.label());
    let _ = writeln!(s, "Pooled proportion p0: {:.6}", report.p0);
    if let Some(g) = &report.geometry {
        let _ = writeln!(s, "Inner limits: alpha {:.6}, z {:.6}", g.alpha, g.z_inner);
        let _ = writeln!(s, "Outer limits: alpha {:.6}, z {:.6}", g.alpha_prime, g.z_outer);
    }
    if let Some(imp) = &report.imputation {
        for c in &imp.columns {
            if let Some(v) = c.fill_value {
                let _ = writeln!(s, "Imputed {} values of {} with {v:.6}", c.n_imputed, c.covariate);
            }
        }
    }
    if !report.pooled_followup_centers.is_empty() {
        let _ = writeln!(s, "Pooled follow-up curve used for: {}", report.pooled_followup_centers.join(", "));
    }
    for (id, why) in &report.excluded {
        let _ = writeln!(s, "Excluded {id}: {why}");
    }
    let degenerate: Vec<&str> =
        report.summaries.iter().filter(|c| c.is_degenerate()).map(|c| c.center_id.as_str()).collect();
    if !degenerate.is_empty() {
        let _ = writeln!(s, "Degenerate (zero null variance): {}", degenerate.join(", "));
    }
    s
}

fn counts(report: &BenchmarkReport<f64>) -> BucketCounts {
    let mut c = BucketCounts::default();
    for s in &report.summaries {
        if let Some(k) = s.classification {
            c.add(k);
        }
    }
    c
}

/// Writes the summaries, report, chart descriptor and SVG for one outcome.
fn emit(report: &BenchmarkReport<f64>, dir: &Path, stem: &str, csv_name: &str, tau: f64) -> Result<Vec<PathBuf>> {
    let mut files = vec![write(dir, csv_name, &summaries_csv(&report.summaries))?];
    files.push(write(dir, &format!("{stem}_report.txt"), &report_text(report, tau))?);
    match report.chart() {
        Ok(chart) => {
            files.push(write(dir, &format!("{stem}.json"), &(serde_json::to_string_pretty(&chart)? + "\n"))?);
            let svg = dir.join(format!("{stem}.svg"));
            write_funnel_svg(&chart, &svg)?;
            files.push(svg);
        }
        Err(Error::AllDegenerate) => log::warn!("every center is degenerate; no funnel chart written"),
        Err(e) => return Err(e.into()),
    }
    let c = counts(report);
    println!(
        "{}: {} centers, {} over, {} target, {} under, {} degenerate",
        report.outcome.label(),
        report.summaries.len(),
        c.over,
        c.target,
        c.under,
        report.summaries.len() - c.total()
    );
    Ok(files)
}

pub fn funnel_mortality(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let data = load(cfg)?;
    let bench = cfg.benchmark()?;
    let dir = prepare_out_dir(cfg)?;
    let report = benchmark_mortality(&data, &bench)?;
    emit(&report, &dir, "funnel_mortality", "centers.csv", bench.tau)
}

pub fn funnel_followup(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let data = load(cfg)?;
    let bench = cfg.benchmark()?;
    let dir = prepare_out_dir(cfg)?;
    let report = benchmark_followup(&data, &bench)?;
    emit(&report, &dir, "funnel_followup", "followup.csv", bench.tau)
}

fn maybe_impute(cfg: &RunConfig, data: Dataset<f64>) -> Result<Dataset<f64>> {
    if cfg.impute.unwrap_or(true) && data.has_missing() {
        let (d, rep) = impute_case_mix(&data, cfg.tau())?;
        log::info!("imputed {} missing covariate values", rep.total_imputed());
        Ok(d)
    } else {
        Ok(data)
    }
}

pub fn pseudo_compare(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let data = maybe_impute(cfg, load(cfg)?)?;
    let dir = prepare_out_dir(cfg)?;
    let alpha = cfg.alpha.unwrap_or(0.05);
    let b = cfg.bootstrap.unwrap_or(DEFAULT_BOOTSTRAP);
    let out = compare_pseudo(&data, cfg.tau(), b, alpha, cfg.seed.unwrap_or(DEFAULT_SEED))?;
    for id in &out.excluded {
        log::warn!("center {id}: survival undefined at the horizon; not compared");
    }
    let file = write(&dir, "pseudo.csv", &pseudo_csv(&out.intervals))?;
    let n = |k: Classification| out.intervals.iter().filter(|iv| iv.classification == k).count();
    println!(
        "pseudo: {} centers, {} over, {} target, {} under, {} excluded",
        out.intervals.len(),
        n(Classification::Over),
        n(Classification::Target),
        n(Classification::Under),
        out.excluded.len()
    );
    Ok(vec![file])
}

pub fn fit_report(cfg: &RunConfig, stratified: bool) -> Result<Vec<PathBuf>> {
    let data = maybe_impute(cfg, load(cfg)?)?;
    let dir = prepare_out_dir(cfg)?;
    let spec = if stratified { ModelSpec::stratified() } else { ModelSpec::pooled() };
    let fit = fit_cox(&data, &spec)?;
    let report = fit.report();
    print!("{report}");
    Ok(vec![write(&dir, "fit_report.txt", &report)?, write(&dir, "baseline.csv", &fit.baseline_csv())?])
}

/// Options of the `simulate` command beyond the scenario files.
#[derive(Debug, Clone, Default)]
pub struct SimulateOptions {
    pub scenarios: Vec<String>,
    pub paper_scale: bool,
    pub seed: Option<u64>,
    pub replications: Option<usize>,
    pub bootstrap: Option<usize>,
    pub same_followup_log_rate: Option<f64>,
    pub no_pseudo: bool,
    pub export_data: bool,
    pub out_dir: PathBuf,
}

/// A preset name or a path to a scenario TOML file.
pub fn resolve_scenario(spec: &str) -> Result<ScenarioConfig> {
    let path = Path::new(spec);
    if path.extension().is_some_and(|e| e == "toml") || path.exists() {
        let text = fs::read_to_string(path).with_context(|| format!("reading scenario {spec}"))?;
        Ok(ScenarioConfig::from_toml(&text).with_context(|| format!("parsing scenario {spec}"))?)
    } else {
        Ok(ScenarioConfig::preset(spec)?)
    }
}

fn slope_line(s: &mut String, label: &str, t: Option<SlopeTest>) {
    match t {
        Some(t) => {
            let _ = writeln!(s, "  {label}: slope {:.5} (se {:.5}, t {:.3}, n {})", t.slope, t.se, t.t, t.n);
        }
        None => {
            let _ = writeln!(s, "  {label}: not estimable");
        }
    }
}

pub fn simulate(opts: &SimulateOptions) -> Result<Vec<PathBuf>> {
    let names: Vec<String> =
        if opts.scenarios.is_empty() { PRESETS.iter().map(|s| s.to_string()).collect() } else { opts.scenarios.clone() };
    fs::create_dir_all(&opts.out_dir).with_context(|| format!("creating {}", opts.out_dir.display()))?;
    let mut summaries = Vec::new();
    let mut diagnostics = Vec::new();
    let mut slopes = String::from("|Z| against log censoring rate\n");
    let mut files = Vec::new();
    for name in &names {
        let mut cfg = resolve_scenario(name)?;
        if opts.paper_scale {
            cfg = cfg.paper_scale();
        }
        if let Some(s) = opts.seed {
            cfg.seed = s;
        }
        if let Some(r) = opts.replications {
            cfg.replications = r;
        }
        if let Some(b) = opts.bootstrap {
            cfg.bootstrap = b;
        }
        if let Some(r) = opts.same_followup_log_rate {
            cfg.same_followup_log_rate = r;
        }
        if opts.no_pseudo {
            cfg.pseudo = false;
        }
        cfg.validate()?;
        log::info!("running scenario {} ({} replications)", cfg.name, cfg.replications);
        if opts.export_data {
            let sim = generate_dataset(&cfg, 0)?;
            files.push(write(&opts.out_dir, &format!("data_{}.csv", cfg.name), &sim.dataset.to_csv_string())?);
        }
        let run = run_scenario(&cfg)?;
        let dep = censoring_dependence(&run.diagnostics);
        let _ = writeln!(slopes, "{}", cfg.name);
        slope_line(&mut slopes, "funnel", dep.funnel);
        slope_line(&mut slopes, "pseudo", dep.pseudo);
        summaries.push(run.summary);
        diagnostics.extend(run.diagnostics);
    }
    let mut text = format_table_text(&summaries);
    let _ = writeln!(text);
    for m in &summaries {
        let _ = writeln!(
            text,
            "{}: {} replications kept, {} dropped, {} center results, coverage MC SE {:.2}%, {} pseudo exclusions",
            m.scenario, m.replications, m.dropped, m.n_center_results, m.coverage_mc_se, m.pseudo_excluded
        );
    }
    let _ = writeln!(text);
    text.push_str(&slopes);
    print!("{}", format_table_text(&summaries));
    files.push(write(&opts.out_dir, "summary.csv", &summarize_table(&summaries))?);
    files.push(write(&opts.out_dir, "summary.txt", &text)?);
    files.push(write(&opts.out_dir, "diagnostics.csv", &diagnostics_csv(&diagnostics))?);
    Ok(files)
}
