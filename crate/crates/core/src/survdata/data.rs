use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One patient. Missing covariate entries are `None` until imputed.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord<T> {
    pub center_id: String,
    /// Left-truncation entry time; the subject is at risk on `(entry_time, time]`.
    pub entry_time: T,
    pub time: T,
    /// `true` for an observed event (death), `false` for censoring.
    pub event: bool,
    pub covariates: Vec<Option<T>>,
}

impl<T: Scalar> SubjectRecord<T> {
    pub fn new(
        center_id: impl Into<String>,
        entry_time: T,
        time: T,
        event: bool,
        covariates: Vec<Option<T>>,
    ) -> Result<Self> {
        if !time.is_finite() || time < T::zero() {
            return Err(Error::InvalidRecord(format!("time {time} must be finite and >= 0")));
        }
        if !entry_time.is_finite() || entry_time < T::zero() {
            return Err(Error::InvalidRecord(format!("entry time {entry_time} must be finite and >= 0")));
        }
        if time <= entry_time {
            return Err(Error::InvalidRecord(format!(
                "time {time} must exceed entry time {entry_time}"
            )));
        }
        Ok(Self { center_id: center_id.into(), entry_time, time, event, covariates })
    }

    /// Record without delayed entry and with complete covariates.
    pub fn simple(center_id: impl Into<String>, time: T, event: bool, covariates: &[T]) -> Result<Self> {
        Self::new(center_id, T::zero(), time, event, covariates.iter().map(|&x| Some(x)).collect())
    }

    pub fn is_complete(&self) -> bool {
        self.covariates.iter().all(Option::is_some)
    }

    /// At risk at `t`, i.e. `entry_time < t <= time`.
    #[inline]
    pub fn at_risk(&self, t: T) -> bool {
        self.entry_time < t && t <= self.time
    }

    /// Event observed within `(entry_time, tau]`.
    #[inline]
    pub fn event_by(&self, tau: T) -> bool {
        self.event && self.time <= tau
    }

    /// Censored (lost to follow-up) within `(entry_time, tau]`.
    #[inline]
    pub fn loss_by(&self, tau: T) -> bool {
        !self.event && self.time <= tau
    }

    /// Known alive at `tau`.
    #[inline]
    pub fn favorable_at(&self, tau: T) -> bool {
        if self.event {
            self.time > tau
        } else {
            self.time >= tau
        }
    }
}

/// A cohort of subjects across centers.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    records: Vec<SubjectRecord<T>>,
    covariate_names: Vec<String>,
    center_index: BTreeMap<String, Vec<usize>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(records: Vec<SubjectRecord<T>>, covariate_names: Vec<String>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyCohort);
        }
        let arity = covariate_names.len();
        let mut center_index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            if r.covariates.len() != arity {
                return Err(Error::ArityMismatch { expected: arity, got: r.covariates.len() });
            }
            center_index.entry(r.center_id.clone()).or_default().push(i);
        }
        if !records.iter().any(|r| r.event) {
            return Err(Error::InvalidArgument("dataset contains no events".into()));
        }
        Ok(Self { records, covariate_names, center_index })
    }

    pub fn records(&self) -> &[SubjectRecord<T>] {
        &self.records
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn arity(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Center ids with the indices of their records, sorted by center id.
    pub fn center_index(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.center_index
    }

    pub fn center_ids(&self) -> impl Iterator<Item = &str> {
        self.center_index.keys().map(String::as_str)
    }

    pub fn n_centers(&self) -> usize {
        self.center_index.len()
    }

    pub fn center_records(&self, center_id: &str) -> Vec<SubjectRecord<T>> {
        self.center_index
            .get(center_id)
            .map(|idx| idx.iter().map(|&i| self.records[i].clone()).collect())
            .unwrap_or_default()
    }

    pub fn has_missing(&self) -> bool {
        self.records.iter().any(|r| !r.is_complete())
    }

    /// Row-major dense covariate matrix; fails on any missing entry.
    pub fn design_matrix(&self) -> Result<Vec<Vec<T>>> {
        self.records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.covariates
                    .iter()
                    .enumerate()
                    .map(|(k, v)| {
                        v.ok_or_else(|| Error::MissingCovariate {
                            subject: i,
                            covariate: self.covariate_names[k].clone(),
                        })
                    })
                    .collect()
            })
            .collect()
    }

    /// Keeps the records for which `keep` returns true.
    pub fn filter(&self, mut keep: impl FnMut(&SubjectRecord<T>) -> bool) -> Result<Self> {
        let records = self.records.iter().filter(|r| keep(r)).cloned().collect();
        Self::new(records, self.covariate_names.clone())
    }

    /// Same schema, new records.
    pub fn with_records(&self, records: Vec<SubjectRecord<T>>) -> Result<Self> {
        Self::new(records, self.covariate_names.clone())
    }

    /// CSV in the ingestion layout: `center_id,entry_time,time,status,<covariates...>`.
    /// Missing covariates are written as empty cells.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("center_id,entry_time,time,status");
        for name in &self.covariate_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for r in &self.records {
            let _ = write!(out, "{},{},{},{}", r.center_id, r.entry_time, r.time, u8::from(r.event));
            for v in &r.covariates {
                out.push(',');
                if let Some(v) = v {
                    let _ = write!(out, "{v}");
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_validation() {
        assert!(SubjectRecord::<f64>::simple("a", 1.0, true, &[]).is_ok());
        assert!(SubjectRecord::<f64>::simple("a", 0.0, true, &[]).is_err());
        assert!(SubjectRecord::<f64>::new("a", 2.0, 1.0, true, vec![]).is_err());
        assert!(SubjectRecord::<f64>::simple("a", f64::INFINITY, true, &[]).is_err());
    }

    #[test]
    fn dataset_index_partitions_records() {
        let recs = vec![
            SubjectRecord::simple("b", 1.0, true, &[0.5]).unwrap(),
            SubjectRecord::simple("a", 2.0, false, &[0.1]).unwrap(),
            SubjectRecord::simple("b", 3.0, false, &[0.2]).unwrap(),
        ];
        let ds = Dataset::new(recs, vec!["x".into()]).unwrap();
        assert_eq!(ds.center_ids().collect::<Vec<_>>(), vec!["a", "b"]);
        let mut all: Vec<usize> = ds.center_index().values().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2]);
    }

    #[test]
    fn dataset_rejects_bad_arity_and_no_events() {
        let recs = vec![SubjectRecord::simple("a", 1.0, true, &[0.5, 1.0]).unwrap()];
        assert!(matches!(
            Dataset::new(recs, vec!["x".into()]),
            Err(Error::ArityMismatch { .. })
        ));
        let recs = vec![SubjectRecord::simple("a", 1.0, false, &[]).unwrap()];
        assert!(Dataset::new(recs, vec![]).is_err());
    }

    #[test]
    fn design_matrix_reports_missing() {
        let recs = vec![
            SubjectRecord::new("a", 0.0, 1.0, true, vec![Some(1.0)]).unwrap(),
            SubjectRecord::new("a", 0.0, 2.0, true, vec![None]).unwrap(),
        ];
        let ds = Dataset::new(recs, vec!["age".into()]).unwrap();
        assert!(ds.has_missing());
        assert_eq!(
            ds.design_matrix(),
            Err(Error::MissingCovariate { subject: 1, covariate: "age".into() })
        );
    }

    #[test]
    fn favorable_outcome_rule() {
        let tau = 12.0;
        assert!(SubjectRecord::<f64>::simple("a", 12.0, false, &[]).unwrap().favorable_at(tau));
        assert!(!SubjectRecord::<f64>::simple("a", 12.0, true, &[]).unwrap().favorable_at(tau));
        assert!(SubjectRecord::<f64>::simple("a", 13.0, true, &[]).unwrap().favorable_at(tau));
        assert!(!SubjectRecord::<f64>::simple("a", 5.0, false, &[]).unwrap().favorable_at(tau));
    }
}
