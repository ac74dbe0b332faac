use rayon::prelude::*;

use crate::cox::{fit_cox, CoxFit, ModelSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::survdata::{reverse_kaplan_meier, Dataset, StepFunction, SubjectRecord};

use super::geometry::{pooled_proportion, FunnelGeometry};
use super::impute::{impute_case_mix, ImputationReport};
use super::probability::{event_probabilities, followup_probabilities};
use super::summary::{summarize_center, BenchmarkConfig, CenterSummary, Outcome};

/// Result of one benchmarking run.
#[derive(Debug, Clone)]
pub struct BenchmarkReport<T> {
    pub outcome: Outcome,
    pub fit: CoxFit<T>,
    /// Benchmarked centers, sorted by center id.
    pub summaries: Vec<CenterSummary<T>>,
    /// `None` when the pooled proportion is 0 or 1.
    pub geometry: Option<FunnelGeometry<T>>,
    pub p0: T,
    pub imputation: Option<ImputationReport<T>>,
    /// Centers whose own follow-up curve was replaced by the pooled one.
    pub pooled_followup_centers: Vec<String>,
    /// Centers left out of the benchmark, with the reason.
    pub excluded: Vec<(String, String)>,
}

fn prepare<T: Scalar>(data: &Dataset<T>, config: &BenchmarkConfig<T>) -> Result<(Dataset<T>, Option<ImputationReport<T>>)> {
    config.validate()?;
    if config.imputation_enabled {
        let (d, report) = impute_case_mix(data, config.tau)?;
        if report.total_imputed() > 0 {
            log::info!("imputed {} missing covariate values", report.total_imputed());
        }
        Ok((d, Some(report)))
    } else {
        Ok((data.clone(), None))
    }
}

fn model_rows<T: Scalar>(fit: &CoxFit<T>, records: &[SubjectRecord<T>]) -> Result<Vec<Vec<T>>> {
    records.iter().map(|r| fit.select(&r.covariates)).collect()
}

fn finish<T: Scalar>(
    outcome: Outcome,
    fit: CoxFit<T>,
    summaries: Vec<CenterSummary<T>>,
    p0: T,
    config: &BenchmarkConfig<T>,
    imputation: Option<ImputationReport<T>>,
    pooled_followup_centers: Vec<String>,
    excluded: Vec<(String, String)>,
) -> BenchmarkReport<T> {
    let geometry = match FunnelGeometry::new(p0, config.alpha, config.multiplicity, summaries.len()) {
        Ok(g) => Some(g),
        Err(_) => {
            log::warn!("pooled {} proportion {p0} leaves no funnel to draw", outcome.label());
            None
        }
    };
    BenchmarkReport { outcome, fit, summaries, geometry, p0, imputation, pooled_followup_centers, excluded }
}

fn size_filter<T: Scalar>(data: &Dataset<T>, config: &BenchmarkConfig<T>) -> (Vec<String>, Vec<(String, String)>) {
    let mut keep = Vec::new();
    let mut excluded = Vec::new();
    for (id, idx) in data.center_index() {
        if idx.len() < config.min_center_size {
            excluded.push((id.clone(), format!("{} patients, below minimum {}", idx.len(), config.min_center_size)));
        } else {
            keep.push(id.clone());
        }
    }
    (keep, excluded)
}

/// Deaths within `tau` against a pooled proportional hazards benchmark,
/// using each center's own follow-up curve.
pub fn benchmark_mortality<T: Scalar>(data: &Dataset<T>, config: &BenchmarkConfig<T>) -> Result<BenchmarkReport<T>> {
    let (data, imputation) = prepare(data, config)?;
    let fit = fit_cox(&data, &ModelSpec::pooled())?;
    let pooled_g = reverse_kaplan_meier(data.records())?;
    let p0 = pooled_proportion(data.records(), Outcome::Death, config.tau);
    let (centers, excluded) = size_filter(&data, config);

    let per_center: Vec<Result<(CenterSummary<T>, bool)>> = centers
        .par_iter()
        .map(|id| {
            let records = data.center_records(id);
            let small = records.len() < config.small_center_threshold;
            let g: StepFunction<T> = if small { pooled_g.clone() } else { reverse_kaplan_meier(&records)? };
            let probs = event_probabilities(&fit, &model_rows(&fit, &records)?, &g, config.tau)?;
            Ok((summarize_center(id, &records, &probs, Outcome::Death, config, p0)?, small))
        })
        .collect();

    let mut summaries = Vec::with_capacity(centers.len());
    let mut pooled_followup_centers = Vec::new();
    for r in per_center {
        let (s, small) = r?;
        if small {
            log::info!("center {}: {} patients, using the pooled follow-up curve", s.center_id, s.n);
            pooled_followup_centers.push(s.center_id.clone());
        }
        summaries.push(s);
    }
    Ok(finish(Outcome::Death, fit, summaries, p0, config, imputation, pooled_followup_centers, excluded))
}

/// Losses to follow-up within `tau` against the pooled follow-up curve,
/// with center-stratified survival.
pub fn benchmark_followup<T: Scalar>(data: &Dataset<T>, config: &BenchmarkConfig<T>) -> Result<BenchmarkReport<T>> {
    let (data, imputation) = prepare(data, config)?;
    let pooled_g = reverse_kaplan_meier(data.records())?;
    let p0 = pooled_proportion(data.records(), Outcome::LossToFollowUp, config.tau);
    let (mut centers, mut excluded) = size_filter(&data, config);

    // a stratum baseline needs at least one event
    let without_events: Vec<String> = data
        .center_index()
        .iter()
        .filter(|(_, idx)| !idx.iter().any(|&i| data.records()[i].event))
        .map(|(id, _)| id.clone())
        .collect();
    for id in &without_events {
        log::warn!("center {id}: no events, no survival stratum; not benchmarked for follow-up");
        if let Some(pos) = centers.iter().position(|c| c == id) {
            centers.remove(pos);
            excluded.push((id.clone(), "no events for a survival stratum".into()));
        }
    }
    let fit_data = if without_events.is_empty() {
        data.clone()
    } else {
        data.filter(|r| !without_events.contains(&r.center_id))?
    };
    let fit = fit_cox(&fit_data, &ModelSpec::stratified())?;

    let summaries: Vec<CenterSummary<T>> = centers
        .par_iter()
        .map(|id| {
            let records = data.center_records(id);
            let probs = followup_probabilities(&fit, &pooled_g, &model_rows(&fit, &records)?, id, config.tau)?;
            summarize_center(id, &records, &probs, Outcome::LossToFollowUp, config, p0)
        })
        .collect::<Result<_>>()?;
    excluded.sort();
    Ok(finish(Outcome::LossToFollowUp, fit, summaries, p0, config, imputation, Vec::new(), excluded))
}

impl<T: Scalar> BenchmarkReport<T> {
    pub fn chart(&self) -> Result<super::FunnelChart> {
        let geometry = self.geometry.as_ref().ok_or(Error::AllDegenerate)?;
        super::build_funnel_chart(&self.summaries, geometry, self.outcome)
    }
}
