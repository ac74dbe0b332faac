use crate::error::{Error, Result};
use crate::scalar::{from_usize, to_f64, Scalar};
use crate::survdata::{two_sided_critical, SubjectRecord};

use super::summary::{Multiplicity, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitLevel {
    /// Per-center level `alpha`.
    Inner,
    /// Multiplicity adjusted level `alpha'`.
    Outer,
}

/// Control-limit curves `1 ± z sqrt((1 - p0) / p0) / sqrt(x)` in effective
/// sample size coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunnelGeometry<T> {
    pub p0: T,
    pub alpha: T,
    pub alpha_prime: T,
    pub z_inner: T,
    pub z_outer: T,
}

impl<T: Scalar> FunnelGeometry<T> {
    pub fn new(p0: T, alpha: T, multiplicity: Multiplicity, n_centers: usize) -> Result<Self> {
        if !(p0 > T::zero() && p0 < T::one()) {
            return Err(Error::InvalidProbability(to_f64(p0)));
        }
        if !(alpha > T::zero() && alpha < T::one()) {
            return Err(Error::InvalidProbability(to_f64(alpha)));
        }
        let alpha_prime = match multiplicity {
            Multiplicity::None => alpha,
            Multiplicity::Bonferroni => alpha / from_usize::<T>(n_centers.max(1)),
        };
        Ok(Self {
            p0,
            alpha,
            alpha_prime,
            z_inner: two_sided_critical(alpha)?,
            z_outer: two_sided_critical(alpha_prime)?,
        })
    }

    pub fn critical(&self, level: LimitLevel) -> T {
        match level {
            LimitLevel::Inner => self.z_inner,
            LimitLevel::Outer => self.z_outer,
        }
    }

    /// `sqrt((1 - p0) / p0)`.
    pub fn scale(&self) -> T {
        ((T::one() - self.p0) / self.p0).sqrt()
    }
}

fn limits<T: Scalar>(x: T, half_width: T) -> Result<(T, T)> {
    if !(x > T::zero()) {
        return Err(Error::InvalidArgument(format!("funnel abscissa {x} must be positive")));
    }
    let h = half_width / x.sqrt();
    Ok((T::one() - h, T::one() + h))
}

/// Limits at effective sample size `x`.
pub fn funnel_limits<T: Scalar>(x: T, geometry: &FunnelGeometry<T>, level: LimitLevel) -> Result<(T, T)> {
    limits(x, geometry.critical(level) * geometry.scale())
}

/// Limits at raw precision `x = E² / V`: `1 ± z / sqrt(x)`.
pub fn raw_funnel_limits<T: Scalar>(x: T, geometry: &FunnelGeometry<T>, level: LimitLevel) -> Result<(T, T)> {
    limits(x, geometry.critical(level))
}

/// Mean over all subjects of the outcome indicator within `tau`.
pub fn pooled_proportion<T: Scalar>(records: &[SubjectRecord<T>], outcome: Outcome, tau: T) -> T {
    if records.is_empty() {
        return T::nan();
    }
    let hits = records.iter().filter(|r| outcome.observed(r, tau)).count();
    from_usize::<T>(hits) / from_usize::<T>(records.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_limits_at_unit_precision() {
        let g = FunnelGeometry::<f64>::new(0.3, 0.05, Multiplicity::None, 10).unwrap();
        let (lo, hi) = raw_funnel_limits(1.0, &g, LimitLevel::Inner).unwrap();
        assert!((lo - (1.0 - 1.959_963_984_540_054)).abs() < 1e-9);
        assert!((hi - (1.0 + 1.959_963_984_540_054)).abs() < 1e-9);
    }

    #[test]
    fn symmetric_about_one() {
        let g = FunnelGeometry::<f64>::new(0.2, 0.05, Multiplicity::Bonferroni, 50).unwrap();
        for &x in &[0.5, 3.0, 80.0, 1e4] {
            for level in [LimitLevel::Inner, LimitLevel::Outer] {
                let (lo, hi) = funnel_limits(x, &g, level).unwrap();
                assert!(((lo + hi) / 2.0 - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn half_proportion_matches_raw() {
        let g = FunnelGeometry::new(0.5, 0.05, Multiplicity::None, 1).unwrap();
        assert_eq!(
            funnel_limits(7.0, &g, LimitLevel::Inner).unwrap(),
            raw_funnel_limits(7.0, &g, LimitLevel::Inner).unwrap()
        );
    }

    #[test]
    fn bonferroni_widens_outer() {
        let g = FunnelGeometry::<f64>::new(0.3, 0.05, Multiplicity::Bonferroni, 100).unwrap();
        assert!((g.alpha_prime - 0.0005).abs() < 1e-15);
        assert!(g.z_outer > g.z_inner);
        assert!(g.alpha_prime <= g.alpha);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = FunnelGeometry::new(0.3, 0.05, Multiplicity::None, 1).unwrap();
        assert!(funnel_limits(0.0, &g, LimitLevel::Inner).is_err());
        assert!(FunnelGeometry::new(0.0, 0.05, Multiplicity::None, 1).is_err());
        assert!(FunnelGeometry::new(0.3, 1.0, Multiplicity::None, 1).is_err());
    }
}
