//! Exact law of a sum of independent, non-identical Bernoulli variables.

use num_traits::{Num, ToPrimitive};

use crate::error::{Error, Result};

/// PMF over `0..=n` by iterative convolution, O(n²).
///
/// Generic over any numeric type with an order, so it runs on floats as well
/// as exact rationals.
pub fn poisson_binomial_pmf<T>(probs: &[T]) -> Result<Vec<T>>
where
    T: Num + Copy + PartialOrd + ToPrimitive,
{
    let mut pmf = Vec::with_capacity(probs.len() + 1);
    pmf.push(T::one());
    for &p in probs {
        if !(p >= T::zero() && p <= T::one()) {
            return Err(Error::InvalidProbability(p.to_f64().unwrap_or(f64::NAN)));
        }
        let q = T::one() - p;
        pmf.push(T::zero());
        for k in (1..pmf.len()).rev() {
            pmf[k] = pmf[k] * q + pmf[k - 1] * p;
        }
        pmf[0] = pmf[0] * q;
    }
    Ok(pmf)
}

/// Two-sided exact p-value `2 * min(P(O <= k), P(O >= k))`, capped at 1.
pub fn poisson_binomial_p_value<T>(pmf: &[T], observed: usize) -> T
where
    T: Num + Copy + PartialOrd,
{
    let sum = |it: &[T]| it.iter().fold(T::zero(), |a, &b| a + b);
    let k = observed.min(pmf.len());
    let lower = sum(&pmf[..(k + 1).min(pmf.len())]);
    let upper = sum(&pmf[k..]);
    let tail = if lower < upper { lower } else { upper };
    let two = T::one() + T::one();
    let p = two * tail;
    if p > T::one() {
        T::one()
    } else {
        p
    }
}
