use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Scalar};
use crate::survdata::{poisson_binomial_p_value, poisson_binomial_pmf, two_sided_critical, SubjectRecord};

/// What is being counted per center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Death,
    LossToFollowUp,
}

impl Outcome {
    pub fn observed<T: Scalar>(self, r: &SubjectRecord<T>, tau: T) -> bool {
        match self {
            Outcome::Death => r.event_by(tau),
            Outcome::LossToFollowUp => r.loss_by(tau),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Outcome::Death => "death",
            Outcome::LossToFollowUp => "loss to follow-up",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Multiplicity {
    None,
    Bonferroni,
}

/// Over-performing means fewer events than expected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Over,
    Target,
    Under,
}

impl Classification {
    /// Wald classification with strict inequalities; the boundary is on target.
    pub fn from_z<T: Scalar>(z: T, critical: T) -> Self {
        if z < -critical {
            Classification::Over
        } else if z > critical {
            Classification::Under
        } else {
            Classification::Target
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Over => "over",
            Classification::Target => "target",
            Classification::Under => "under",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig<T> {
    pub tau: T,
    pub alpha: T,
    /// Adjustment applied to the outer funnel.
    pub multiplicity: Multiplicity,
    /// Centers smaller than this are not benchmarked.
    pub min_center_size: usize,
    /// Centers smaller than this use the pooled follow-up curve.
    pub small_center_threshold: usize,
    pub imputation_enabled: bool,
}

impl<T: Scalar> BenchmarkConfig<T> {
    pub fn new(tau: T) -> Self {
        Self {
            tau,
            alpha: lit(0.05),
            multiplicity: Multiplicity::Bonferroni,
            min_center_size: 1,
            small_center_threshold: 10,
            imputation_enabled: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > T::zero() && self.alpha < T::one()) {
            return Err(Error::InvalidArgument(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if !(self.tau > T::zero()) || !self.tau.is_finite() {
            return Err(Error::InvalidArgument(format!("tau {} must be positive", self.tau)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CenterSummary<T> {
    pub center_id: String,
    pub n: usize,
    pub observed: usize,
    pub expected: T,
    pub variance: T,
    /// `(O - E) / sqrt(V)`; `None` when `V = 0`.
    pub z: Option<T>,
    pub oe_ratio: Option<T>,
    pub eff_n: Option<T>,
    pub p_exact: T,
    /// `None` marks a degenerate center, reported but kept off the funnel.
    pub classification: Option<Classification>,
}

impl<T: Scalar> CenterSummary<T> {
    pub fn is_degenerate(&self) -> bool {
        self.classification.is_none()
    }
}

/// `(E² / V) (1 - p0) / p0`.
pub fn effective_sample_size<T: Scalar>(expected: T, variance: T, p0: T) -> Result<T> {
    if !(variance > T::zero()) {
        return Err(Error::InvalidArgument("variance must be positive".into()));
    }
    if !(p0 > T::zero() && p0 < T::one()) {
        return Err(Error::InvalidProbability(to_f64(p0)));
    }
    Ok(expected * expected / variance * (T::one() - p0) / p0)
}

/// Observed count, null moments, exact p-value and Wald classification for one center.
pub fn summarize_center<T: Scalar>(
    center_id: &str,
    records: &[SubjectRecord<T>],
    probs: &[T],
    outcome: Outcome,
    config: &BenchmarkConfig<T>,
    p0: T,
) -> Result<CenterSummary<T>> {
    if records.len() != probs.len() {
        return Err(Error::InvalidArgument(format!(
            "{} records but {} probabilities",
            records.len(),
            probs.len()
        )));
    }
    let observed = records.iter().filter(|r| outcome.observed(r, config.tau)).count();
    let expected: T = probs.iter().copied().sum();
    let variance: T = probs.iter().map(|&p| p * (T::one() - p)).sum();
    let pmf = poisson_binomial_pmf(probs)?;
    let p_exact = poisson_binomial_p_value(&pmf, observed);
    let o = crate::scalar::from_usize::<T>(observed);

    let (z, eff_n, classification) = if variance > T::zero() {
        let z = (o - expected) / variance.sqrt();
        let eff = effective_sample_size(expected, variance, p0).ok();
        let critical = two_sided_critical(config.alpha)?;
        (Some(z), eff, Some(Classification::from_z(z, critical)))
    } else {
        log::warn!("center {center_id}: null variance is zero; excluded from the funnel");
        (None, None, None)
    };
    let oe_ratio = if expected > T::zero() { Some(o / expected) } else { None };

    Ok(CenterSummary {
        center_id: center_id.to_string(),
        n: records.len(),
        observed,
        expected,
        variance,
        z,
        oe_ratio,
        eff_n,
        p_exact,
        classification,
    })
}

fn opt<T: Scalar>(v: Option<T>) -> String {
    v.map(|v| format!("{:.6}", to_f64(v))).unwrap_or_default()
}

/// `center_id,n,O,E,V,Z,oe_ratio,eff_n,p_exact,classification`
pub fn summaries_csv<T: Scalar>(summaries: &[CenterSummary<T>]) -> String {
    let mut out = String::from("center_id,n,O,E,V,Z,oe_ratio,eff_n,p_exact,classification\n");
    for s in summaries {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6},{},{},{},{:.6e},{}",
            s.center_id,
            s.n,
            s.observed,
            to_f64(s.expected),
            to_f64(s.variance),
            opt(s.z),
            opt(s.oe_ratio),
            opt(s.eff_n),
            to_f64(s.p_exact),
            s.classification.map_or("degenerate", Classification::as_str)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recs(events: &[bool]) -> Vec<SubjectRecord<f64>> {
        events.iter().map(|&d| SubjectRecord::simple("c", 1.0, d, &[]).unwrap()).collect()
    }

    #[test]
    fn equal_probabilities_give_binomial_moments() {
        let probs = vec![0.3; 10];
        let cfg = BenchmarkConfig::new(12.0);
        let s = summarize_center("c", &recs(&[false; 10]), &probs, Outcome::Death, &cfg, 0.3).unwrap();
        assert!((s.expected - 3.0).abs() < 1e-12);
        assert!((s.variance - 2.1).abs() < 1e-12);
        assert!((s.eff_n.unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn on_target_center() {
        let probs = vec![0.5; 4];
        let cfg = BenchmarkConfig::new(12.0);
        let s = summarize_center("c", &recs(&[true, true, false, false]), &probs, Outcome::Death, &cfg, 0.5)
            .unwrap();
        assert_eq!(s.z, Some(0.0));
        assert_eq!(s.classification, Some(Classification::Target));
        assert_eq!(s.oe_ratio, Some(1.0));
    }

    #[test]
    fn two_subject_enumeration_example() {
        let cfg = BenchmarkConfig::new(12.0);
        let s = summarize_center("c", &recs(&[true, true]), &[0.1, 0.2], Outcome::Death, &cfg, 0.2).unwrap();
        assert_eq!(s.observed, 2);
        assert!((s.expected - 0.3).abs() < 1e-12);
        assert!((s.variance - 0.25).abs() < 1e-12);
        assert!((s.z.unwrap() - 3.4).abs() < 1e-12);
        assert!((s.p_exact - 0.04).abs() < 1e-12);
        assert_eq!(s.classification, Some(Classification::Under));
    }

    #[test]
    fn events_beyond_horizon_are_not_counted() {
        let r = vec![
            SubjectRecord::simple("c", 5.0, true, &[]).unwrap(),
            SubjectRecord::simple("c", 15.0, true, &[]).unwrap(),
            SubjectRecord::simple("c", 3.0, false, &[]).unwrap(),
        ];
        let cfg = BenchmarkConfig::new(12.0);
        let s = summarize_center("c", &r, &[0.2, 0.2, 0.2], Outcome::Death, &cfg, 0.2).unwrap();
        assert_eq!(s.observed, 1);
        let s = summarize_center("c", &r, &[0.2, 0.2, 0.2], Outcome::LossToFollowUp, &cfg, 0.2).unwrap();
        assert_eq!(s.observed, 1);
    }

    #[test]
    fn zero_variance_is_degenerate() {
        let cfg = BenchmarkConfig::new(12.0);
        let s = summarize_center("c", &recs(&[false, false]), &[0.0, 0.0], Outcome::Death, &cfg, 0.2).unwrap();
        assert!(s.is_degenerate());
        assert_eq!(s.z, None);
        assert_eq!(s.oe_ratio, None);
        assert!(summaries_csv(&[s]).contains(",degenerate\n"));
    }

    #[test]
    fn effective_sample_size_examples() {
        assert_eq!(effective_sample_size(10.0, 5.0, 0.5).unwrap(), 20.0);
        assert!(effective_sample_size(10.0, 0.0, 0.5).is_err());
        // identical cohort duplicated: E and V double, eff_n doubles
        let a = effective_sample_size(3.0f64, 2.1, 0.3).unwrap();
        let b = effective_sample_size(6.0, 4.2, 0.3).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-12);
    }

    #[test]
    fn boundary_z_is_target() {
        assert_eq!(Classification::from_z(1.96f64, 1.96), Classification::Target);
        assert_eq!(Classification::from_z(-1.96f64, 1.96), Classification::Target);
        assert_eq!(Classification::from_z(-1.97f64, 1.96), Classification::Over);
    }
}
