use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::funnel::{benchmark_mortality, BenchmarkConfig, Classification, Multiplicity};
use crate::pseudo::compare_pseudo;

use super::config::ScenarioConfig;
use super::generate::{generate_dataset, replicate_rng, Stream};

/// Classification percentages for one method.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Percentages {
    pub under: f64,
    pub target: f64,
    pub over: f64,
}

impl Percentages {
    fn from_counts(under: usize, target: usize, over: usize) -> Self {
        let total = (under + target + over) as f64;
        if total == 0.0 {
            return Self::default();
        }
        Self {
            under: 100.0 * under as f64 / total,
            target: 100.0 * target as f64 / total,
            over: 100.0 * over as f64 / total,
        }
    }

    /// Percentage outside the target band.
    pub fn rejected(&self) -> f64 {
        self.under + self.over
    }
}

/// One center in one replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticRow {
    pub scenario: String,
    pub replicate: usize,
    pub center: String,
    pub n: usize,
    pub observed: usize,
    pub expected: f64,
    pub variance: f64,
    pub z_funnel: Option<f64>,
    pub z_pseudo: Option<f64>,
    pub cens_shape: f64,
    pub cens_rate: f64,
    #[serde(skip)]
    pub funnel_class: Option<Classification>,
    #[serde(skip)]
    pub pseudo_class: Option<Classification>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub scenario: String,
    pub replications: usize,
    pub dropped: usize,
    /// Non-degenerate funnel center results pooled over replicates.
    pub n_center_results: usize,
    pub z_mean: f64,
    pub z_sd: f64,
    pub funnel: Percentages,
    pub pseudo: Option<Percentages>,
    /// Center results left out of the pseudo comparison.
    pub pseudo_excluded: usize,
    /// `sqrt(p (1 - p) / (R n_centers))` for the funnel target fraction, in percent.
    pub coverage_mc_se: f64,
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub summary: SimulationSummary,
    pub diagnostics: Vec<DiagnosticRow>,
}

fn run_replicate(config: &ScenarioConfig, replicate: usize) -> Result<Vec<DiagnosticRow>> {
    let sim = generate_dataset(config, replicate)?;
    let bench_cfg = BenchmarkConfig {
        alpha: config.alpha,
        multiplicity: Multiplicity::None,
        imputation_enabled: false,
        ..BenchmarkConfig::new(config.tau)
    };
    let report = benchmark_mortality(&sim.dataset, &bench_cfg)?;
    let pseudo = if config.pseudo {
        use rand::RngCore;
        let seed = replicate_rng(config.seed, replicate, Stream::Bootstrap).next_u64();
        Some(compare_pseudo(&sim.dataset, config.tau, config.bootstrap, config.alpha, seed)?)
    } else {
        None
    };
    let mut rows = Vec::with_capacity(report.summaries.len());
    for s in &report.summaries {
        let truth = sim.centers.iter().find(|c| c.center_id == s.center_id).expect("simulated center");
        let iv = pseudo.as_ref().and_then(|p| p.intervals.iter().find(|iv| iv.center_id == s.center_id));
        rows.push(DiagnosticRow {
            scenario: config.name.clone(),
            replicate,
            center: s.center_id.clone(),
            n: s.n,
            observed: s.observed,
            expected: s.expected,
            variance: s.variance,
            z_funnel: s.z,
            z_pseudo: iv.and_then(|iv| iv.z_pseudo),
            cens_shape: truth.censoring_shape,
            cens_rate: truth.censoring_rate,
            funnel_class: s.classification,
            pseudo_class: iv.map(|iv| iv.classification),
        });
    }
    Ok(rows)
}

/// Runs every replicate in parallel and pools center results in replicate order.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioRun> {
    config.validate()?;
    let results: Vec<Result<Vec<DiagnosticRow>>> =
        (0..config.replications).into_par_iter().map(|r| run_replicate(config, r)).collect();

    let mut diagnostics = Vec::new();
    let mut dropped = 0;
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(rows) => diagnostics.extend(rows),
            Err(e) => {
                log::warn!("scenario {} replicate {r} dropped: {e}", config.name);
                dropped += 1;
            }
        }
    }
    if dropped as f64 > config.max_dropped_fraction * config.replications as f64 {
        return Err(Error::TooManyDroppedReplicates { dropped, total: config.replications });
    }
    let summary = summarize(config, &diagnostics, dropped);
    Ok(ScenarioRun { summary, diagnostics })
}

fn tally(classes: impl Iterator<Item = Classification>) -> (usize, usize, usize) {
    let mut c = (0, 0, 0);
    for k in classes {
        match k {
            Classification::Under => c.0 += 1,
            Classification::Target => c.1 += 1,
            Classification::Over => c.2 += 1,
        }
    }
    c
}

fn summarize(config: &ScenarioConfig, rows: &[DiagnosticRow], dropped: usize) -> SimulationSummary {
    let z: Vec<f64> = rows.iter().filter_map(|r| r.z_funnel).collect();
    let n = z.len() as f64;
    let z_mean = z.iter().sum::<f64>() / n;
    let z_sd = (z.iter().map(|v| (v - z_mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();

    let (u, t, o) = tally(rows.iter().filter_map(|r| r.funnel_class));
    let funnel = Percentages::from_counts(u, t, o);
    let pseudo = config.pseudo.then(|| {
        let (u, t, o) = tally(rows.iter().filter_map(|r| r.pseudo_class));
        Percentages::from_counts(u, t, o)
    });
    let pseudo_excluded = if config.pseudo { rows.iter().filter(|r| r.pseudo_class.is_none()).count() } else { 0 };

    let p = funnel.target / 100.0;
    let kept = (config.replications - dropped) as f64;
    let coverage_mc_se = 100.0 * (p * (1.0 - p) / (kept * config.n_centers as f64)).sqrt();

    SimulationSummary {
        scenario: config.name.clone(),
        replications: config.replications - dropped,
        dropped,
        n_center_results: z.len(),
        z_mean,
        z_sd,
        funnel,
        pseudo,
        pseudo_excluded,
        coverage_mc_se,
    }
}

/// CSV in the column order scenario, Z mean, Z sd, funnel Under/Target/Over,
/// pseudo Under/Target/Over.
pub fn summarize_table(summaries: &[SimulationSummary]) -> String {
    let mut s = String::from(
        "scenario,z_mean,z_sd,funnel_under,funnel_target,funnel_over,pseudo_under,pseudo_target,pseudo_over\n",
    );
    for m in summaries {
        let pseudo = match m.pseudo {
            Some(p) => format!("{:.1},{:.1},{:.1}", p.under, p.target, p.over),
            None => "NA,NA,NA".into(),
        };
        let f = m.funnel;
        let _ = writeln!(s, "{},{:.3},{:.3},{:.1},{:.1},{:.1},{}", m.scenario, m.z_mean, m.z_sd, f.under, f.target, f.over, pseudo);
    }
    s
}

/// Aligned plain-text rendering of the same table.
pub fn format_table_text(summaries: &[SimulationSummary]) -> String {
    let mut s = format!(
        "{:<16} {:>7} {:>7} | {:>6} {:>6} {:>6} | {:>6} {:>6} {:>6}\n",
        "scenario", "Z mean", "Z sd", "Under", "Target", "Over", "Under", "Target", "Over"
    );
    for m in summaries {
        let f = m.funnel;
        let _ = write!(
            s,
            "{:<16} {:>7.3} {:>7.3} | {:>6.1} {:>6.1} {:>6.1} |",
            m.scenario, m.z_mean, m.z_sd, f.under, f.target, f.over
        );
        match m.pseudo {
            Some(p) => {
                let _ = writeln!(s, " {:>6.1} {:>6.1} {:>6.1}", p.under, p.target, p.over);
            }
            None => {
                let _ = writeln!(s, " {:>6} {:>6} {:>6}", "NA", "NA", "NA");
            }
        }
    }
    s
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6}")).unwrap_or_else(|| "NA".into())
}

pub fn diagnostics_csv(rows: &[DiagnosticRow]) -> String {
    let mut s = String::from("scenario,replicate,center,n,O,E,V,Z_funnel,Z_pseudo,cens_shape,cens_rate\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{:.6},{:.6},{},{},{:.6},{:.6e}",
            r.scenario,
            r.replicate,
            r.center,
            r.n,
            r.observed,
            r.expected,
            r.variance,
            opt(r.z_funnel),
            opt(r.z_pseudo),
            r.cens_shape,
            r.cens_rate
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            n_centers: 8,
            center_size_mean: 40.0,
            center_size_sd: 20.0,
            replications: 3,
            bootstrap: 100,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_summary() {
        let a = run_scenario(&small()).unwrap();
        let b = run_scenario(&small()).unwrap();
        assert_eq!(a.summary, b.summary);
        assert_eq!(a.diagnostics, b.diagnostics);
    }

    #[test]
    fn percentages_partition() {
        let run = run_scenario(&small()).unwrap();
        let f = run.summary.funnel;
        assert!((f.under + f.target + f.over - 100.0).abs() < 1e-9);
        let table = summarize_table(&[run.summary]);
        let row: Vec<f64> = table.lines().nth(1).unwrap().split(',').skip(3).map(|v| v.parse().unwrap()).collect();
        assert!((row[0] + row[1] + row[2] - 100.0).abs() <= 0.1 + 1e-9);
        assert!((row[3] + row[4] + row[5] - 100.0).abs() <= 0.1 + 1e-9);
    }

    #[test]
    fn table_layout() {
        let m = SimulationSummary {
            scenario: "x".into(),
            replications: 1,
            dropped: 0,
            n_center_results: 2,
            z_mean: 0.0,
            z_sd: 1.0,
            funnel: Percentages::from_counts(0, 2, 0),
            pseudo: None,
            pseudo_excluded: 0,
            coverage_mc_se: 0.0,
        };
        let t = summarize_table(&[m]);
        assert_eq!(
            t,
            "scenario,z_mean,z_sd,funnel_under,funnel_target,funnel_over,pseudo_under,pseudo_target,pseudo_over\n\
             x,0.000,1.000,0.0,100.0,0.0,NA,NA,NA\n"
        );
    }

    #[test]
    fn diagnostics_header() {
        let run = run_scenario(&ScenarioConfig { replications: 1, ..small() }).unwrap();
        let csv = diagnostics_csv(&run.diagnostics);
        assert!(csv.starts_with("scenario,replicate,center,n,O,E,V,Z_funnel,Z_pseudo,cens_shape,cens_rate\n"));
        assert_eq!(csv.lines().count(), run.diagnostics.len() + 1);
    }
}
