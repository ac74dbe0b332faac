use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Right-continuous piecewise-constant function of time.
///
/// Takes `initial` on `[0, knots[0])` and `values[k]` on `[knots[k], knots[k + 1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction<T> {
    initial: T,
    knots: Vec<T>,
    values: Vec<T>,
}

impl<T: Scalar> StepFunction<T> {
    pub fn new(initial: T, knots: Vec<T>, values: Vec<T>) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} knots but {} values",
                knots.len(),
                values.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("knots must be strictly increasing".into()));
        }
        Ok(Self { initial, knots, values })
    }

    pub fn constant(value: T) -> Self {
        Self { initial: value, knots: Vec::new(), values: Vec::new() }
    }

    pub fn initial(&self) -> T {
        self.initial
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    /// Value at `t` (right-continuous).
    pub fn eval(&self, t: T) -> T {
        let k = self.knots.partition_point(|&s| s <= t);
        if k == 0 {
            self.initial
        } else {
            self.values[k - 1]
        }
    }

    /// Left limit `f(t-)`.
    pub fn eval_left(&self, t: T) -> T {
        let k = self.knots.partition_point(|&s| s < t);
        if k == 0 {
            self.initial
        } else {
            self.values[k - 1]
        }
    }

    /// Value just before knot `k`.
    pub fn value_before(&self, k: usize) -> T {
        if k == 0 {
            self.initial
        } else {
            self.values[k - 1]
        }
    }

    /// `(knot, f(knot) - f(knot-))` for every knot.
    pub fn jumps(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.knots
            .iter()
            .enumerate()
            .map(move |(k, &t)| (t, self.values[k] - self.value_before(k)))
    }

    /// Rescales the time axis by `factor`.
    pub fn scale_time(&self, factor: T) -> Result<Self> {
        if !(factor > T::zero()) {
            return Err(Error::InvalidArgument("time scale factor must be positive".into()));
        }
        Ok(Self {
            initial: self.initial,
            knots: self.knots.iter().map(|&t| t * factor).collect(),
            values: self.values.clone(),
        })
    }

    /// Two-column `time,value` CSV; the initial value is written at time 0.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,value\n");
        let _ = writeln!(out, "0,{}", self.initial);
        for (t, v) in self.knots.iter().zip(&self.values) {
            let _ = writeln!(out, "{t},{v}");
        }
        out
    }
}
