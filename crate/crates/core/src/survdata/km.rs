//! Product-limit estimators.

use crate::error::{Error, Result};
use crate::scalar::{from_usize, Scalar};
use crate::survdata::{StepFunction, SubjectRecord};

/// Counts at one distinct observed time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TimeCounts<T> {
    pub time: T,
    /// Subjects with `entry < time <= exit`.
    pub at_risk: usize,
    pub deaths: usize,
    pub censored: usize,
}

/// Risk-set counts at every distinct exit time, ascending.
pub(crate) fn time_counts<T: Scalar>(records: &[SubjectRecord<T>]) -> Vec<TimeCounts<T>> {
    let mut exits: Vec<(T, bool)> = records.iter().map(|r| (r.time, r.event)).collect();
    exits.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite times"));
    let mut entries: Vec<T> = records.iter().map(|r| r.entry_time).collect();
    entries.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));

    let n = records.len();
    let mut out = Vec::new();
    let mut i = 0;
    // exits strictly before t and entries strictly before t
    let mut n_exited = 0usize;
    let mut n_entered = 0usize;
    while i < exits.len() {
        let t = exits[i].0;
        let mut j = i;
        let (mut deaths, mut censored) = (0, 0);
        while j < exits.len() && exits[j].0 == t {
            if exits[j].1 {
                deaths += 1;
            } else {
                censored += 1;
            }
            j += 1;
        }
        while n_entered < n && entries[n_entered] < t {
            n_entered += 1;
        }
        out.push(TimeCounts { time: t, at_risk: n_entered - n_exited, deaths, censored });
        n_exited += j - i;
        i = j;
    }
    out
}

fn product_limit<T: Scalar>(
    records: &[SubjectRecord<T>],
    step: impl Fn(&TimeCounts<T>) -> (usize, usize),
) -> Result<StepFunction<T>> {
    if records.is_empty() {
        return Err(Error::EmptyCohort);
    }
    let mut knots = Vec::new();
    let mut values = Vec::new();
    let mut s = T::one();
    for c in time_counts(records) {
        let (d, n) = step(&c);
        if d == 0 {
            continue;
        }
        if n == 0 {
            return Err(Error::EmptyRiskSet);
        }
        s *= T::one() - from_usize::<T>(d) / from_usize::<T>(n);
        knots.push(c.time);
        values.push(s);
    }
    StepFunction::new(T::one(), knots, values)
}

/// Kaplan-Meier estimate of the event-free probability. Knots at event times only.
pub fn kaplan_meier<T: Scalar>(records: &[SubjectRecord<T>]) -> Result<StepFunction<T>> {
    product_limit(records, |c| (c.deaths, c.at_risk))
}

/// Reverse Kaplan-Meier: the follow-up distribution `G(t) = P(C > t)`.
///
/// Deaths tied with censorings are taken to occur first, so they leave the
/// censoring risk set at that time.
pub fn reverse_kaplan_meier<T: Scalar>(records: &[SubjectRecord<T>]) -> Result<StepFunction<T>> {
    product_limit(records, |c| (c.censored, c.at_risk - c.deaths))
}

/// `1 - S(tau)` from the Kaplan-Meier estimate, or an error when the curve
/// is not determined at `tau` (everyone left before `tau` while the curve is
/// still above zero).
pub fn km_death_probability<T: Scalar>(records: &[SubjectRecord<T>], tau: T) -> Result<T> {
    let km = kaplan_meier(records)?;
    let s = km.eval(tau);
    let anyone_at_tau = records.iter().any(|r| r.time >= tau && r.entry_time < tau);
    if !anyone_at_tau && s > T::zero() {
        return Err(Error::UndefinedAtHorizon(crate::scalar::to_f64(tau)));
    }
    Ok(T::one() - s)
}
