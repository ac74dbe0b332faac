use serde::Serialize;

use super::run::DiagnosticRow;

/// Ordinary least-squares slope with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeTest {
    pub slope: f64,
    pub se: f64,
    pub t: f64,
    pub n: usize,
}

pub fn ols_slope(x: &[f64], y: &[f64]) -> Option<SlopeTest> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    let se = (rss / (nf - 2.0) / sxx).sqrt();
    Some(SlopeTest { slope, se, t: slope / se, n })
}

/// Regression of `|Z|` on the log censoring rate for each method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CensoringDependence {
    pub funnel: Option<SlopeTest>,
    pub pseudo: Option<SlopeTest>,
}

pub fn censoring_dependence(rows: &[DiagnosticRow]) -> CensoringDependence {
    let fit = |pick: fn(&DiagnosticRow) -> Option<f64>| {
        let (x, y): (Vec<f64>, Vec<f64>) =
            rows.iter().filter_map(|r| pick(r).map(|z| (r.cens_rate.ln(), z.abs()))).unzip();
        ols_slope(&x, &y)
    };
    CensoringDependence { funnel: fit(|r| r.z_funnel), pseudo: fit(|r| r.z_pseudo) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let s = ols_slope(&x, &y).unwrap();
        assert!((s.slope - 2.0).abs() < 1e-12);
        assert!(s.se.abs() < 1e-12);
    }

    #[test]
    fn known_standard_error() {
        let x = [0.0, 1.0, 2.0];
        let y = [0.0, 2.0, 1.0];
        let s = ols_slope(&x, &y).unwrap();
        assert!((s.slope - 0.5).abs() < 1e-12);
        // residuals -0.5, 1, -0.5: rss 1.5, sxx 2
        assert!((s.se - (1.5f64 / 2.0).sqrt()).abs() < 1e-12);
        assert!(ols_slope(&[1.0, 1.0, 1.0], &y).is_none());
    }
}
