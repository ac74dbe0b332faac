//! Pseudo-observation comparator: jackknife pseudo-values of the death
//! probability, a linear model on case mix, and bootstrap prediction
//! intervals for each center's observed mortality.

mod jackknife;

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cox::linalg::{cholesky, cholesky_solve};
use crate::error::{Error, Result};
use crate::funnel::Classification;
use crate::scalar::{from_usize, lit, to_f64, Scalar};
use crate::survdata::{km_death_probability, two_sided_critical, Dataset};

pub use jackknife::pseudo_observations;

/// Fitted values outside this band are clamped before residuals are formed.
const FIT_BAND: (f64, f64) = (-0.2, 1.2);
/// Mean used on the variance scale is kept inside this band.
const MU_BAND: (f64, f64) = (0.001, 0.999);

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoFit<T> {
    /// Intercept first, then one coefficient per covariate.
    pub coefficients: Vec<T>,
    pub fitted: Vec<T>,
    /// Fitted values clamped to `[0.001, 0.999]`.
    pub mu: Vec<T>,
    /// Pearson residuals `(y - mu) / sqrt(mu (1 - mu))`.
    pub residuals: Vec<T>,
    pub n_clamped: usize,
}

/// Least-squares fit of pseudo-values on `[1, x]`.
pub fn fit_pseudo_model<T: Scalar>(pseudo: &[T], covariates: &[Vec<T>]) -> Result<PseudoFit<T>> {
    let n = pseudo.len();
    if n == 0 {
        return Err(Error::EmptyCohort);
    }
    if covariates.len() != n {
        return Err(Error::InvalidArgument(format!("{} pseudo-values but {} covariate rows", n, covariates.len())));
    }
    let p = covariates[0].len() + 1;
    if let Some(row) = covariates.iter().find(|r| r.len() + 1 != p) {
        return Err(Error::ArityMismatch { expected: p - 1, got: row.len() });
    }
    let row = |i: usize| std::iter::once(T::one()).chain(covariates[i].iter().copied());

    let mut xtx = vec![vec![T::zero(); p]; p];
    let mut xty = vec![T::zero(); p];
    for i in 0..n {
        let x: Vec<T> = row(i).collect();
        for a in 0..p {
            xty[a] += x[a] * pseudo[i];
            for b in 0..=a {
                xtx[a][b] += x[a] * x[b];
            }
        }
    }
    for a in 0..p {
        for b in a + 1..p {
            xtx[a][b] = xtx[b][a];
        }
    }
    let l = cholesky(&xtx).ok_or(Error::SingularDesign)?;
    let coefficients = cholesky_solve(&l, &xty);

    let (flo, fhi) = (lit::<T>(FIT_BAND.0), lit::<T>(FIT_BAND.1));
    let (mlo, mhi) = (lit::<T>(MU_BAND.0), lit::<T>(MU_BAND.1));
    let mut n_clamped = 0;
    let mut fitted = Vec::with_capacity(n);
    let mut mu = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    for i in 0..n {
        let raw: T = row(i).zip(&coefficients).map(|(x, b)| x * *b).sum();
        if raw < flo || raw > fhi {
            n_clamped += 1;
        }
        let f = raw.max(flo).min(fhi);
        let m = f.max(mlo).min(mhi);
        fitted.push(f);
        mu.push(m);
        residuals.push((pseudo[i] - m) / (m * (T::one() - m)).sqrt());
    }
    if n_clamped > 0 {
        log::warn!("{n_clamped} pseudo-model fitted values clamped to [{}, {}]", FIT_BAND.0, FIT_BAND.1);
    }
    Ok(PseudoFit { coefficients, fitted, mu, residuals, n_clamped })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionInterval<T> {
    pub center_id: String,
    pub n: usize,
    pub alpha: T,
    pub lower: T,
    pub upper: T,
    /// Center Kaplan-Meier death probability at the horizon.
    pub observed: T,
    /// `None` when the interval has zero width.
    pub z_pseudo: Option<T>,
    pub classification: Classification,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoComparison<T> {
    pub intervals: Vec<PredictionInterval<T>>,
    /// Centers whose own survival curve is undefined at the horizon.
    pub excluded: Vec<String>,
    pub fit: PseudoFit<T>,
}

/// 1-based order statistics bounding a two-sided `1 - alpha` interval from `b` draws.
pub fn interval_ranks(b: usize, alpha: f64) -> (usize, usize) {
    let bf = b as f64;
    let lo = ((bf * alpha / 2.0 + 1e-9).floor() as usize).max(1);
    let hi = ((bf * (1.0 - alpha / 2.0) + 1e-9).floor() as usize + 1).min(b);
    (lo, hi)
}

/// Standardized distance of the observed value from the interval midpoint.
pub fn pseudo_z<T: Scalar>(interval: &PredictionInterval<T>) -> Result<T> {
    let width = interval.upper - interval.lower;
    if !(width > T::zero()) {
        return Err(Error::ZeroWidthInterval);
    }
    let z = two_sided_critical(interval.alpha)?;
    let mid = (interval.upper + interval.lower) / lit(2.0);
    Ok((interval.observed - mid) / (width / (lit::<T>(2.0) * z)))
}

/// Residual-bootstrap prediction intervals for each center's mean outcome.
///
/// Replicate `b` draws from `ChaCha8Rng` seeded with `seed` on stream `b`, so
/// output does not depend on thread count.
pub fn bootstrap_prediction_intervals<T: Scalar>(
    fit: &PseudoFit<T>,
    data: &Dataset<T>,
    tau: T,
    replicates: usize,
    alpha: T,
    seed: u64,
) -> Result<(Vec<PredictionInterval<T>>, Vec<String>)> {
    if replicates < 100 {
        return Err(Error::InvalidArgument(format!("bootstrap needs at least 100 replicates, got {replicates}")));
    }
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::InvalidProbability(to_f64(alpha)));
    }
    let n = data.len();
    if fit.mu.len() != n {
        return Err(Error::InvalidArgument(format!("model has {} rows, dataset {}", fit.mu.len(), n)));
    }
    let centers: Vec<(&String, &Vec<usize>)> = data.center_index().iter().collect();
    let scale: Vec<T> = fit.mu.iter().map(|&m| (m * (T::one() - m)).sqrt()).collect();

    let draws: Vec<Vec<T>> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let mut y = vec![T::zero(); n];
            for i in 0..n {
                let r = fit.residuals[rng.random_range(0..n)];
                y[i] = fit.mu[i] + r * scale[i];
            }
            centers
                .iter()
                .map(|(_, idx)| idx.iter().map(|&i| y[i]).sum::<T>() / from_usize::<T>(idx.len()))
                .collect()
        })
        .collect();

    let (lo, hi) = interval_ranks(replicates, to_f64(alpha));
    let mut intervals = Vec::new();
    let mut excluded = Vec::new();
    for (c, (id, idx)) in centers.iter().enumerate() {
        let records: Vec<_> = idx.iter().map(|&i| data.records()[i].clone()).collect();
        let observed = match km_death_probability(&records, tau) {
            Ok(v) => v,
            Err(Error::UndefinedAtHorizon(_)) => {
                excluded.push((*id).clone());
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut col: Vec<T> = draws.iter().map(|d| d[c]).collect();
        col.sort_by(|a, b| a.partial_cmp(b).expect("finite bootstrap draws"));
        let (lower, upper) = (col[lo - 1], col[hi - 1]);
        let classification = if observed < lower {
            Classification::Over
        } else if observed > upper {
            Classification::Under
        } else {
            Classification::Target
        };
        let mut iv = PredictionInterval {
            center_id: (*id).clone(),
            n: idx.len(),
            alpha,
            lower,
            upper,
            observed,
            z_pseudo: None,
            classification,
        };
        iv.z_pseudo = pseudo_z(&iv).ok();
        intervals.push(iv);
    }
    if !excluded.is_empty() {
        log::info!("{} centers excluded: survival undefined at horizon", excluded.len());
    }
    Ok((intervals, excluded))
}

/// Pseudo-values on the pooled cohort, linear model on the dataset's
/// covariates, then bootstrap intervals per center.
pub fn compare_pseudo<T: Scalar>(
    data: &Dataset<T>,
    tau: T,
    replicates: usize,
    alpha: T,
    seed: u64,
) -> Result<PseudoComparison<T>> {
    let pv = pseudo_observations(data.records(), tau)?;
    let x = data.design_matrix()?;
    let fit = fit_pseudo_model(&pv, &x)?;
    let (intervals, excluded) = bootstrap_prediction_intervals(&fit, data, tau, replicates, alpha, seed)?;
    Ok(PseudoComparison { intervals, excluded, fit })
}

/// CSV with `center_id,observed,lower,upper,z_pseudo,classification`.
pub fn pseudo_csv<T: Scalar>(intervals: &[PredictionInterval<T>]) -> String {
    let mut s = String::from("center_id,observed,lower,upper,z_pseudo,classification\n");
    for iv in intervals {
        let z = iv.z_pseudo.map(|z| format!("{:.6}", to_f64(z))).unwrap_or_else(|| "NA".into());
        let _ = writeln!(
            s,
            "{},{:.6},{:.6},{:.6},{},{}",
            iv.center_id,
            to_f64(iv.observed),
            to_f64(iv.lower),
            to_f64(iv.upper),
            z,
            iv.classification.as_str()
        );
    }
    s
}
