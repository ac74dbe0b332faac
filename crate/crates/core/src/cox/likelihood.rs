//! Breslow log partial likelihood with left-truncated, optionally stratified risk sets.

use crate::error::{Error, Result};
use crate::scalar::{from_usize, Scalar};
use crate::survdata::Dataset;

use super::ModelSpec;

#[derive(Debug, Clone)]
struct EventTime<T> {
    time: T,
    deaths: usize,
    /// Sum of centered covariates over the subjects dying at `time`.
    x_sum: Vec<T>,
}

#[derive(Debug, Clone)]
struct Stratum<T> {
    label: Option<String>,
    /// Subject indices sorted by exit time, descending, with their times.
    by_exit: Vec<(usize, T)>,
    /// Subject indices sorted by entry time, descending, with their entries.
    by_entry: Vec<(usize, T)>,
    /// Distinct event times, descending.
    events: Vec<EventTime<T>>,
}

/// Value, score and observed information at one coefficient vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodEval<T> {
    pub log_likelihood: T,
    pub score: Vec<T>,
    pub information: Vec<Vec<T>>,
}

/// Precomputed risk-set structure for repeated likelihood evaluation.
#[derive(Debug, Clone)]
pub struct PartialLikelihood<T> {
    p: usize,
    /// Row-major centered design, `n * p`.
    x: Vec<T>,
    means: Vec<T>,
    strata: Vec<Stratum<T>>,
}

impl<T: Scalar> PartialLikelihood<T> {
    pub fn new(data: &Dataset<T>, spec: &ModelSpec) -> Result<Self> {
        let columns = spec.column_indices(data)?;
        let p = columns.len();
        let n = data.len();
        let records = data.records();

        let mut raw = Vec::with_capacity(n * p);
        for (i, r) in records.iter().enumerate() {
            for &c in &columns {
                let v = r.covariates[c].ok_or_else(|| Error::MissingCovariate {
                    subject: i,
                    covariate: data.covariate_names()[c].clone(),
                })?;
                if !v.is_finite() {
                    return Err(Error::InvalidRecord(format!("non-finite covariate for subject {i}")));
                }
                raw.push(v);
            }
        }

        // center at the mean over subjects with an event
        let mut means = vec![T::zero(); p];
        let mut n_events = 0usize;
        for (i, r) in records.iter().enumerate() {
            if r.event {
                n_events += 1;
                for k in 0..p {
                    means[k] += raw[i * p + k];
                }
            }
        }
        let ne = from_usize::<T>(n_events.max(1));
        means.iter_mut().for_each(|m| *m /= ne);
        let x: Vec<T> = raw.iter().enumerate().map(|(j, &v)| v - means[j % p.max(1)]).collect();

        let groups: Vec<(Option<String>, Vec<usize>)> = if spec.stratify_by_center {
            data.center_index().iter().map(|(id, idx)| (Some(id.clone()), idx.clone())).collect()
        } else {
            vec![(None, (0..n).collect())]
        };

        let mut strata = Vec::with_capacity(groups.len());
        for (label, idx) in groups {
            let mut by_exit: Vec<(usize, T)> = idx.iter().map(|&i| (i, records[i].time)).collect();
            by_exit.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite").then(a.0.cmp(&b.0)));
            let mut by_entry: Vec<(usize, T)> = idx.iter().map(|&i| (i, records[i].entry_time)).collect();
            by_entry.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite").then(a.0.cmp(&b.0)));

            let mut events: Vec<EventTime<T>> = Vec::new();
            for &(i, t) in &by_exit {
                if !records[i].event {
                    continue;
                }
                if events.last().map_or(true, |e| e.time != t) {
                    events.push(EventTime { time: t, deaths: 0, x_sum: vec![T::zero(); p] });
                }
                let e = events.last_mut().expect("just pushed");
                e.deaths += 1;
                for k in 0..p {
                    e.x_sum[k] += x[i * p + k];
                }
            }
            if events.is_empty() {
                return Err(match label {
                    Some(l) => Error::StratumWithoutEvents(l),
                    None => Error::InvalidArgument("no events".into()),
                });
            }
            strata.push(Stratum { label, by_exit, by_entry, events });
        }

        Ok(Self { p, x, means, strata })
    }

    pub fn n_covariates(&self) -> usize {
        self.p
    }

    /// Event-weighted covariate means used for internal centering.
    pub fn means(&self) -> &[T] {
        &self.means
    }

    fn linear_predictors(&self, beta: &[T]) -> (Vec<T>, T) {
        let n = if self.p == 0 {
            self.strata.iter().map(|s| s.by_exit.len()).sum()
        } else {
            self.x.len() / self.p
        };
        let eta: Vec<T> = (0..n)
            .map(|i| (0..self.p).fold(T::zero(), |a, k| a + beta[k] * self.x[i * self.p + k]))
            .collect();
        let max = eta.iter().copied().fold(T::neg_infinity(), T::max);
        let max = if max.is_finite() { max } else { T::zero() };
        (eta, max)
    }

    /// Sweeps each stratum's event times in descending order, calling
    /// `visit(stratum, event, s0, s1, s2)` with risk-set sums of
    /// `w = exp(eta - shift)`.
    fn sweep(
        &self,
        beta: &[T],
        second_order: bool,
        mut visit: impl FnMut(usize, &EventTime<T>, T, &[T], &[Vec<T>]) -> Result<()>,
    ) -> Result<T> {
        let p = self.p;
        let (eta, shift) = self.linear_predictors(beta);
        let w: Vec<T> = eta.iter().map(|&e| (e - shift).exp()).collect();
        for (si, st) in self.strata.iter().enumerate() {
            let (mut a, mut b) = (0usize, 0usize);
            let mut add0 = T::zero();
            let mut sub0 = T::zero();
            let mut add1 = vec![T::zero(); p];
            let mut sub1 = vec![T::zero(); p];
            let mut add2 = vec![vec![T::zero(); p]; if second_order { p } else { 0 }];
            let mut sub2 = add2.clone();
            let mut s1 = vec![T::zero(); p];
            let mut s2 = add2.clone();
            for ev in &st.events {
                while a < st.by_exit.len() && st.by_exit[a].1 >= ev.time {
                    let i = st.by_exit[a].0;
                    accumulate(&mut add0, &mut add1, &mut add2, w[i], &self.x[i * p..(i + 1) * p]);
                    a += 1;
                }
                while b < st.by_entry.len() && st.by_entry[b].1 >= ev.time {
                    let i = st.by_entry[b].0;
                    accumulate(&mut sub0, &mut sub1, &mut sub2, w[i], &self.x[i * p..(i + 1) * p]);
                    b += 1;
                }
                let s0 = add0 - sub0;
                if !(s0 > T::zero()) {
                    return Err(Error::EmptyRiskSet);
                }
                for k in 0..p {
                    s1[k] = add1[k] - sub1[k];
                }
                for (r, row) in s2.iter_mut().enumerate() {
                    for (c, v) in row.iter_mut().enumerate() {
                        *v = add2[r][c] - sub2[r][c];
                    }
                }
                visit(si, ev, s0, &s1, &s2)?;
            }
        }
        Ok(shift)
    }

    /// Log partial likelihood, score and information at `beta`.
    pub fn evaluate(&self, beta: &[T]) -> Result<LikelihoodEval<T>> {
        if beta.len() != self.p {
            return Err(Error::ArityMismatch { expected: self.p, got: beta.len() });
        }
        let p = self.p;
        let mut ll = T::zero();
        let mut score = vec![T::zero(); p];
        let mut info = vec![vec![T::zero(); p]; p];
        let mut total_deaths = T::zero();
        let shift = self.sweep(beta, true, |_, ev, s0, s1, s2| {
            let d = from_usize::<T>(ev.deaths);
            let bx = (0..p).fold(T::zero(), |a, k| a + beta[k] * ev.x_sum[k]);
            ll += bx - d * s0.ln();
            total_deaths += d;
            for r in 0..p {
                let mr = s1[r] / s0;
                score[r] += ev.x_sum[r] - d * mr;
                for c in 0..p {
                    info[r][c] += d * (s2[r][c] / s0 - mr * s1[c] / s0);
                }
            }
            Ok(())
        })?;
        ll -= total_deaths * shift;
        Ok(LikelihoodEval { log_likelihood: ll, score, information: info })
    }

    /// Breslow jumps per stratum on the original covariate scale, ascending in time.
    pub(crate) fn breslow(&self, beta: &[T]) -> Result<Vec<(Option<String>, Vec<(T, T)>)>> {
        let p = self.p;
        let offset = (0..p).fold(T::zero(), |a, k| a + beta[k] * self.means[k]);
        let mut out: Vec<(Option<String>, Vec<(T, T)>)> =
            self.strata.iter().map(|s| (s.label.clone(), Vec::with_capacity(s.events.len()))).collect();
        let shift = self.sweep(beta, false, |si, ev, s0, _, _| {
            out[si].1.push((ev.time, from_usize::<T>(ev.deaths) / s0));
            Ok(())
        })?;
        let scale = (-(shift + offset)).exp();
        for (_, jumps) in &mut out {
            jumps.reverse();
            for j in jumps.iter_mut() {
                j.1 *= scale;
            }
        }
        Ok(out)
    }
}

#[inline]
fn accumulate<T: Scalar>(s0: &mut T, s1: &mut [T], s2: &mut [Vec<T>], w: T, x: &[T]) {
    *s0 += w;
    for k in 0..s1.len() {
        s1[k] += w * x[k];
    }
    for (r, row) in s2.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v += w * x[r] * x[c];
        }
    }
}
