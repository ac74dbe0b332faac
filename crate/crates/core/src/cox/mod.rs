//! Proportional-hazards benchmark model.

pub(crate) mod linalg;
mod likelihood;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Scalar};
use crate::survdata::{Dataset, StepFunction};

pub use likelihood::{LikelihoodEval, PartialLikelihood};

/// Which covariates enter the model and how the baseline is organized.
/// Ties are always handled with the Breslow approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    /// Covariate columns by name; `None` uses every column of the dataset.
    pub covariates: Option<Vec<String>>,
    pub stratify_by_center: bool,
    pub max_iter: usize,
    /// Relative change in log partial likelihood at which iteration stops.
    pub tolerance: f64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self { covariates: None, stratify_by_center: false, max_iter: 50, tolerance: 1e-9 }
    }
}

impl ModelSpec {
    pub fn pooled() -> Self {
        Self::default()
    }

    pub fn stratified() -> Self {
        Self { stratify_by_center: true, ..Self::default() }
    }

    /// Baseline-only model without covariates.
    pub fn intercept_only() -> Self {
        Self { covariates: Some(Vec::new()), ..Self::default() }
    }

    pub fn with_covariates(mut self, names: &[&str]) -> Self {
        self.covariates = Some(names.iter().map(|s| s.to_string()).collect());
        self
    }

    pub(crate) fn column_indices<T: Scalar>(&self, data: &Dataset<T>) -> Result<Vec<usize>> {
        if !(self.tolerance > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidArgument("tolerance and max_iter must be positive".into()));
        }
        match &self.covariates {
            None => Ok((0..data.arity()).collect()),
            Some(names) => names
                .iter()
                .map(|n| {
                    data.covariate_names()
                        .iter()
                        .position(|c| c == n)
                        .ok_or_else(|| Error::InvalidArgument(format!("unknown covariate '{n}'")))
                })
                .collect(),
        }
    }
}

/// Cumulative baseline hazard, shared or per center.
#[derive(Debug, Clone, PartialEq)]
pub enum Baseline<T> {
    Pooled(StepFunction<T>),
    Stratified(BTreeMap<String, StepFunction<T>>),
}

/// A fitted benchmark model, treated as known downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct CoxFit<T> {
    pub covariate_names: Vec<String>,
    /// Positions of the model covariates within the dataset's covariate vector.
    pub columns: Vec<usize>,
    pub beta: Vec<T>,
    pub std_errors: Vec<T>,
    pub baseline: Baseline<T>,
    pub log_likelihood: T,
    pub score_norm: T,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Scalar> CoxFit<T> {
    /// Assembles a fit from known coefficients and baseline, e.g. an external benchmark.
    pub fn from_parts(covariate_names: Vec<String>, beta: Vec<T>, baseline: Baseline<T>) -> Self {
        let p = beta.len();
        Self {
            columns: (0..p).collect(),
            covariate_names,
            std_errors: vec![T::nan(); p],
            beta,
            baseline,
            log_likelihood: T::nan(),
            score_norm: T::zero(),
            iterations: 0,
            converged: true,
        }
    }

    pub fn is_stratified(&self) -> bool {
        matches!(self.baseline, Baseline::Stratified(_))
    }

    /// Model covariates picked out of a full dataset covariate vector.
    pub fn select(&self, covariates: &[Option<T>]) -> Result<Vec<T>> {
        self.columns
            .iter()
            .map(|&c| {
                covariates
                    .get(c)
                    .copied()
                    .flatten()
                    .ok_or_else(|| Error::InvalidArgument(format!("covariate {c} missing")))
            })
            .collect()
    }

    /// `βᵀx`.
    pub fn linear_predictor(&self, x: &[T]) -> Result<T> {
        if x.len() != self.beta.len() {
            return Err(Error::ArityMismatch { expected: self.beta.len(), got: x.len() });
        }
        Ok(self.beta.iter().zip(x).fold(T::zero(), |a, (&b, &v)| a + b * v))
    }

    pub fn baseline_for(&self, stratum: Option<&str>) -> Result<&StepFunction<T>> {
        match (&self.baseline, stratum) {
            (Baseline::Pooled(h), None) => Ok(h),
            (Baseline::Pooled(_), Some(_)) => Err(Error::PooledModelRequired),
            (Baseline::Stratified(_), None) => Err(Error::StratifiedModelRequired),
            (Baseline::Stratified(m), Some(s)) => m.get(s).ok_or_else(|| Error::UnknownStratum(s.to_string())),
        }
    }

    /// `H(t | x) = exp(βᵀx) H₀(t)`.
    pub fn cumulative_hazard(&self, x: &[T], stratum: Option<&str>, t: T) -> Result<T> {
        let lp = self.linear_predictor(x)?;
        Ok(lp.exp() * self.baseline_for(stratum)?.eval(t))
    }

    pub fn survival(&self, x: &[T], stratum: Option<&str>, t: T) -> Result<T> {
        Ok((-self.cumulative_hazard(x, stratum, t)?).exp())
    }

    /// `S(t- | x)`.
    pub fn survival_left(&self, x: &[T], stratum: Option<&str>, t: T) -> Result<T> {
        let lp = self.linear_predictor(x)?;
        Ok((-lp.exp() * self.baseline_for(stratum)?.eval_left(t)).exp())
    }

    fn strata(&self) -> Vec<(&str, &StepFunction<T>)> {
        match &self.baseline {
            Baseline::Pooled(h) => vec![("pooled", h)],
            Baseline::Stratified(m) => m.iter().map(|(k, v)| (k.as_str(), v)).collect(),
        }
    }

    /// Coefficient table as plain text.
    pub fn report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Proportional hazards fit (Breslow ties)");
        let _ = writeln!(
            out,
            "baseline: {}",
            if self.is_stratified() { "stratified by center" } else { "pooled" }
        );
        let _ = writeln!(out, "converged: {} after {} iterations", self.converged, self.iterations);
        let _ = writeln!(out, "log partial likelihood: {:.6}", to_f64(self.log_likelihood));
        let _ = writeln!(out, "score norm: {:.3e}", to_f64(self.score_norm));
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<24} {:>12} {:>12} {:>12}", "covariate", "coef", "exp(coef)", "se(coef)");
        for (k, name) in self.covariate_names.iter().enumerate() {
            let b = to_f64(self.beta[k]);
            let _ = writeln!(
                out,
                "{:<24} {:>12.6} {:>12.6} {:>12.6}",
                name,
                b,
                b.exp(),
                to_f64(self.std_errors[k])
            );
        }
        let strata = self.strata();
        let _ = writeln!(out);
        for (label, h) in strata {
            let _ = writeln!(out, "stratum {label}: {} event times, H0(max) = {:.6}", h.len(), to_f64(h.values().last().copied().unwrap_or(T::zero())));
        }
        out
    }

    /// `stratum,time,jump` rows of the Breslow baseline hazard.
    pub fn baseline_csv(&self) -> String {
        let mut out = String::from("stratum,time,jump\n");
        for (label, h) in self.strata() {
            for (t, j) in h.jumps() {
                let _ = writeln!(out, "{label},{t},{j}");
            }
        }
        out
    }
}

/// Maximizes the Breslow log partial likelihood by Newton-Raphson from `β = 0`,
/// halving the step whenever the likelihood would drop.
pub fn fit_cox<T: Scalar>(data: &Dataset<T>, spec: &ModelSpec) -> Result<CoxFit<T>> {
    let columns = spec.column_indices(data)?;
    let lik = PartialLikelihood::new(data, spec)?;
    let p = lik.n_covariates();
    let tol: T = lit(spec.tolerance);
    let score_tol: T = lit(1e-8);
    let accept_tol: T = lit(1e-6);

    let mut beta = vec![T::zero(); p];
    let mut cur = lik.evaluate(&beta)?;
    let norm = |s: &[T]| s.iter().fold(T::zero(), |a, &v| a + v * v).sqrt();
    if p > 0 && linalg::cholesky(&cur.information).is_none() {
        return Err(Error::CollinearCaseMix);
    }

    let mut iterations = 0;
    let mut converged = p == 0 || norm(&cur.score) < score_tol;
    while !converged && iterations < spec.max_iter {
        iterations += 1;
        let l = linalg::cholesky(&cur.information).ok_or(Error::CollinearCaseMix)?;
        let step = linalg::cholesky_solve(&l, &cur.score);
        // Expected gain of a full Newton step; below the rounding noise of the
        // log likelihood, line search can no longer tell steps apart.
        let gain = step.iter().zip(&cur.score).fold(T::zero(), |a, (&s, &g)| a + s * g) / lit(2.0);
        let noise = lit::<T>(1e3) * T::epsilon() * cur.log_likelihood.abs().max(T::one());
        if gain <= noise {
            let trial: Vec<T> = beta.iter().zip(&step).map(|(&b, &s)| b + s).collect();
            if let Ok(ev) = lik.evaluate(&trial) {
                if ev.log_likelihood.is_finite() && ev.log_likelihood >= cur.log_likelihood - noise {
                    beta = trial;
                    cur = ev;
                }
            }
            converged = true;
            break;
        }
        let mut factor = T::one();
        let mut next = None;
        for _ in 0..40 {
            let trial: Vec<T> = beta.iter().zip(&step).map(|(&b, &s)| b + factor * s).collect();
            if let Ok(ev) = lik.evaluate(&trial) {
                if ev.log_likelihood.is_finite() && ev.log_likelihood >= cur.log_likelihood {
                    next = Some((trial, ev));
                    break;
                }
            }
            factor *= lit(0.5);
        }
        let Some((trial, ev)) = next else {
            break;
        };
        let rel = (ev.log_likelihood - cur.log_likelihood).abs() / cur.log_likelihood.abs().max(T::one());
        beta = trial;
        cur = ev;
        let sn = norm(&cur.score);
        if sn < score_tol || (rel < tol && sn <= accept_tol) {
            converged = true;
        }
    }
    if !converged {
        log::warn!(
            "proportional hazards fit did not converge after {iterations} iterations (score norm {})",
            norm(&cur.score)
        );
    }

    let std_errors = match linalg::cholesky(&cur.information) {
        Some(l) => linalg::inverse_diagonal(&l).into_iter().map(|v| v.sqrt()).collect(),
        None => vec![T::nan(); p],
    };

    let mut strata = BTreeMap::new();
    let mut pooled = None;
    for (label, jumps) in lik.breslow(&beta)? {
        let mut acc = T::zero();
        let (knots, values): (Vec<T>, Vec<T>) = jumps
            .into_iter()
            .map(|(t, h)| {
                acc += h;
                (t, acc)
            })
            .unzip();
        let h = StepFunction::new(T::zero(), knots, values)?;
        match label {
            Some(l) => {
                strata.insert(l, h);
            }
            None => pooled = Some(h),
        }
    }
    let baseline = match pooled {
        Some(h) => Baseline::Pooled(h),
        None => Baseline::Stratified(strata),
    };

    Ok(CoxFit {
        covariate_names: columns.iter().map(|&c| data.covariate_names()[c].clone()).collect(),
        columns,
        beta,
        std_errors,
        baseline,
        log_likelihood: cur.log_likelihood,
        score_norm: norm(&cur.score),
        iterations,
        converged,
    })
}
