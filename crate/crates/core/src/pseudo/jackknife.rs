use crate::error::{Error, Result};
use crate::scalar::{from_usize, Scalar};
use crate::survdata::km::time_counts;
use crate::survdata::{km_death_probability, SubjectRecord};

/// Products of a factor sequence over index ranges, robust to zero factors.
struct RangeProduct<T> {
    log_prefix: Vec<T>,
    zero_prefix: Vec<usize>,
}

impl<T: Scalar> RangeProduct<T> {
    fn new(factors: impl Iterator<Item = T>) -> Self {
        let mut log_prefix = vec![T::zero()];
        let mut zero_prefix = vec![0];
        for f in factors {
            let (l, z) = (*log_prefix.last().unwrap(), *zero_prefix.last().unwrap());
            if f > T::zero() {
                log_prefix.push(l + f.ln());
                zero_prefix.push(z);
            } else {
                log_prefix.push(l);
                zero_prefix.push(z + 1);
            }
        }
        Self { log_prefix, zero_prefix }
    }

    /// Product over `[a, b)`.
    fn range(&self, a: usize, b: usize) -> T {
        if b <= a {
            return T::one();
        }
        if self.zero_prefix[b] > self.zero_prefix[a] {
            T::zero()
        } else {
            (self.log_prefix[b] - self.log_prefix[a]).exp()
        }
    }
}

/// Jackknife pseudo-values of the death probability `F(tau) = 1 - S(tau)`:
/// `n F - (n - 1) F_{-i}`. Values may fall outside `[0, 1]`.
pub fn pseudo_observations<T: Scalar>(records: &[SubjectRecord<T>], tau: T) -> Result<Vec<T>> {
    let n = records.len();
    if n < 2 {
        return Err(Error::InvalidArgument("pseudo-observations need at least two subjects".into()));
    }
    let full = km_death_probability(records, tau)?;

    let events: Vec<_> = time_counts(records).into_iter().filter(|c| c.deaths > 0 && c.time <= tau).collect();
    let times: Vec<T> = events.iter().map(|c| c.time).collect();
    let factor = |d: usize, r: usize| {
        if r == 0 {
            T::one()
        } else {
            T::one() - from_usize::<T>(d) / from_usize::<T>(r)
        }
    };
    let keep = RangeProduct::new(events.iter().map(|c| factor(c.deaths, c.at_risk)));
    let drop_one = RangeProduct::new(events.iter().map(|c| factor(c.deaths, c.at_risk - 1)));
    let k_all = events.len();

    let nf = from_usize::<T>(n);
    let n1 = from_usize::<T>(n - 1);
    Ok(records
        .iter()
        .map(|r| {
            // event indices where subject r is in the risk set: entry < t_k <= min(time, tau)
            let lo = times.partition_point(|&t| t <= r.entry_time);
            let hi = times.partition_point(|&t| t <= r.time);
            let s = if r.event && hi > lo && times[hi - 1] == r.time {
                let own = &events[hi - 1];
                keep.range(0, lo)
                    * drop_one.range(lo, hi - 1)
                    * factor(own.deaths - 1, own.at_risk - 1)
                    * keep.range(hi, k_all)
            } else {
                keep.range(0, lo) * drop_one.range(lo, hi) * keep.range(hi, k_all)
            };
            nf * full - n1 * (T::one() - s)
        })
        .collect())
}
