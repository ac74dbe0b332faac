use std::io::Read;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use survfunnel::survdata::{Dataset, SubjectRecord};

const REQUIRED: [&str; 3] = ["center_id", "time", "status"];
const MAX_REPORTED: usize = 20;

pub fn load_dataset(path: &Path, covariates: Option<&[String]>) -> Result<Dataset<f64>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_dataset(file, covariates).with_context(|| format!("reading {}", path.display()))
}

/// Parses `center_id,time,status[,entry_time][,covariates...]`. Without an
/// explicit covariate list every other column is a covariate. Empty
/// covariate cells are missing values.
pub fn read_dataset<R: Read>(reader: R, covariates: Option<&[String]>) -> Result<Dataset<f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| header.iter().position(|h| h == name);
    for req in REQUIRED {
        if col(req).is_none() {
            bail!("missing required column `{req}`");
        }
    }
    let (c_center, c_time, c_status) = (col("center_id").unwrap(), col("time").unwrap(), col("status").unwrap());
    let c_entry = col("entry_time");

    let cov_names: Vec<String> = match covariates {
        Some(names) => names.to_vec(),
        None => header
            .iter()
            .filter(|h| !REQUIRED.contains(&h.as_str()) && h.as_str() != "entry_time")
            .cloned()
            .collect(),
    };
    let cov_cols = cov_names
        .iter()
        .map(|n| col(n).ok_or_else(|| anyhow!("covariate column `{n}` not in header")))
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::new();
    let mut errors = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let parse = |i: usize, what: &str| -> Result<f64, String> {
            let cell = row.get(i).unwrap_or("");
            cell.parse::<f64>().map_err(|_| format!("{what} `{cell}` is not a number"))
        };
        let rec = (|| -> Result<SubjectRecord<f64>, String> {
            let center = row.get(c_center).unwrap_or("");
            if center.is_empty() {
                return Err("empty center_id".into());
            }
            let time = parse(c_time, "time")?;
            let status = match row.get(c_status).unwrap_or("") {
                "0" => false,
                "1" => true,
                other => return Err(format!("status must be 0 or 1, got `{other}`")),
            };
            let entry = match c_entry {
                Some(i) if !row.get(i).unwrap_or("").is_empty() => parse(i, "entry_time")?,
                _ => 0.0,
            };
            if !(time > entry) {
                return Err(format!("time {time} must exceed entry_time {entry}"));
            }
            let covs = cov_cols
                .iter()
                .zip(&cov_names)
                .map(|(&i, name)| match row.get(i).unwrap_or("") {
                    "" | "NA" => Ok(None),
                    _ => parse(i, name).map(Some),
                })
                .collect::<Result<Vec<_>, _>>()?;
            SubjectRecord::new(center, entry, time, status, covs).map_err(|e| e.to_string())
        })();
        match rec {
            Ok(r) => records.push(r),
            Err(e) => errors.push(format!("line {line}: {e}")),
        }
    }
    if !errors.is_empty() {
        let n = errors.len();
        let mut msg = errors.into_iter().take(MAX_REPORTED).collect::<Vec<_>>().join("\n");
        if n > MAX_REPORTED {
            msg.push_str(&format!("\n... and {} more", n - MAX_REPORTED));
        }
        bail!("{n} invalid rows:\n{msg}");
    }
    Ok(Dataset::new(records, cov_names)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_well_formed_rows() {
        let csv = "center_id,time,status,age\na,1.5,1,0.2\nb,3,0,0.4\na,2,1,\n";
        let d = read_dataset(csv.as_bytes(), None).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.n_centers(), 2);
        assert_eq!(d.covariate_names(), ["age"]);
        assert_eq!(d.records()[2].covariates, vec![None]);
    }

    #[test]
    fn reports_bad_status_with_line() {
        let csv = "center_id,time,status\na,1,1\na,2,0\na,3,1\nb,4,2\n";
        let e = format!("{:#}", read_dataset(csv.as_bytes(), None).unwrap_err());
        assert!(e.contains("line 5"), "{e}");
        assert!(e.contains("status"), "{e}");
    }

    #[test]
    fn reports_time_before_entry() {
        let csv = "center_id,entry_time,time,status\na,0,1,1\na,2,1,1\n";
        let e = format!("{:#}", read_dataset(csv.as_bytes(), None).unwrap_err());
        assert!(e.contains("line 3"), "{e}");
    }

    #[test]
    fn missing_columns_are_errors() {
        assert!(read_dataset("center_id,time\na,1\n".as_bytes(), None).is_err());
        let names = vec!["bmi".to_string()];
        let e = read_dataset("center_id,time,status\na,1,1\n".as_bytes(), Some(&names)).unwrap_err();
        assert!(e.to_string().contains("bmi"));
    }

    #[test]
    fn explicit_covariates_select_columns() {
        let csv = "center_id,time,status,a,b\nx,1,1,1,2\ny,2,0,3,4\n";
        let names = vec!["b".to_string()];
        let d = read_dataset(csv.as_bytes(), Some(&names)).unwrap();
        assert_eq!(d.records()[1].covariates, vec![Some(4.0)]);
    }
}
