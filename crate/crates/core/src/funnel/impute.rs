use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};
use crate::survdata::Dataset;

#[derive(Debug, Clone, PartialEq)]
pub struct ImputedColumn<T> {
    pub covariate: String,
    pub n_imputed: usize,
    /// `None` when nothing was missing in this column.
    pub fill_value: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImputationReport<T> {
    pub columns: Vec<ImputedColumn<T>>,
}

impl<T: Scalar> ImputationReport<T> {
    pub fn total_imputed(&self) -> usize {
        self.columns.iter().map(|c| c.n_imputed).sum()
    }
}

fn median<T: Scalar>(mut v: Vec<T>) -> T {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite covariates"));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) * lit(0.5)
    }
}

/// Fills every missing covariate with that covariate's median among
/// patients known to be alive at `tau`, pooled over all centers.
pub fn impute_case_mix<T: Scalar>(data: &Dataset<T>, tau: T) -> Result<(Dataset<T>, ImputationReport<T>)> {
    let mut records = data.records().to_vec();
    let mut columns = Vec::with_capacity(data.arity());
    for (k, name) in data.covariate_names().iter().enumerate() {
        let n_missing = records.iter().filter(|r| r.covariates[k].is_none()).count();
        if n_missing == 0 {
            columns.push(ImputedColumn { covariate: name.clone(), n_imputed: 0, fill_value: None });
            continue;
        }
        let values: Vec<T> = records
            .iter()
            .filter(|r| r.favorable_at(tau))
            .filter_map(|r| r.covariates[k])
            .collect();
        if values.is_empty() {
            return Err(Error::ImputationImpossible(name.clone()));
        }
        let fill = median(values);
        for r in records.iter_mut() {
            if r.covariates[k].is_none() {
                r.covariates[k] = Some(fill);
            }
        }
        columns.push(ImputedColumn { covariate: name.clone(), n_imputed: n_missing, fill_value: Some(fill) });
    }
    Ok((data.with_records(records)?, ImputationReport { columns }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survdata::SubjectRecord;

    fn rec(c: &str, t: f64, d: bool, x: Option<f64>) -> SubjectRecord<f64> {
        SubjectRecord::new(c, 0.0, t, d, vec![x]).unwrap()
    }

    #[test]
    fn complete_data_unchanged() {
        let ds = Dataset::new(vec![rec("a", 13.0, false, Some(1.0)), rec("b", 2.0, true, Some(3.0))], vec!["x".into()])
            .unwrap();
        let (out, report) = impute_case_mix(&ds, 12.0).unwrap();
        assert_eq!(out, ds);
        assert_eq!(report.total_imputed(), 0);
    }

    #[test]
    fn fills_with_favorable_median() {
        let ds = Dataset::new(
            vec![
                rec("a", 13.0, false, Some(1.0)),
                rec("a", 20.0, true, Some(2.0)),
                rec("b", 14.0, false, Some(100.0)),
                rec("b", 2.0, true, Some(-50.0)), // died before tau, not favorable
                rec("b", 3.0, true, None),
            ],
            vec!["x".into()],
        )
        .unwrap();
        let (out, report) = impute_case_mix(&ds, 12.0).unwrap();
        assert_eq!(out.records()[4].covariates[0], Some(2.0));
        assert_eq!(report.columns[0].n_imputed, 1);
        assert_eq!(report.columns[0].fill_value, Some(2.0));

        // order of records does not matter
        let mut rev = ds.records().to_vec();
        rev.reverse();
        let (out2, _) = impute_case_mix(&ds.with_records(rev).unwrap(), 12.0).unwrap();
        assert_eq!(out2.records()[0].covariates[0], Some(2.0));
    }

    #[test]
    fn all_favorable_missing_is_an_error() {
        let ds = Dataset::new(vec![rec("a", 13.0, false, None), rec("a", 2.0, true, Some(1.0))], vec!["age".into()])
            .unwrap();
        assert_eq!(impute_case_mix(&ds, 12.0).unwrap_err(), Error::ImputationImpossible("age".into()));
    }
}
