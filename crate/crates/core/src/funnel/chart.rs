use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Scalar};

use super::geometry::{funnel_limits, FunnelGeometry, LimitLevel};
use super::summary::{CenterSummary, Classification, Outcome};

const CURVE_SAMPLES: usize = 120;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub center_id: String,
    pub eff_n: f64,
    pub oe_ratio: f64,
    pub classification: Classification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCurve {
    pub alpha: f64,
    pub z: f64,
    pub x: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketCounts {
    pub over: usize,
    pub target: usize,
    pub under: usize,
}

impl BucketCounts {
    pub fn total(&self) -> usize {
        self.over + self.target + self.under
    }

    pub fn add(&mut self, c: Classification) {
        match c {
            Classification::Over => self.over += 1,
            Classification::Target => self.target += 1,
            Classification::Under => self.under += 1,
        }
    }
}

/// Everything needed to draw a funnel plot; serializable for the renderer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunnelChart {
    pub outcome: Outcome,
    pub p0: f64,
    pub target: f64,
    pub x_range: (f64, f64),
    pub inner: LimitCurve,
    pub outer: LimitCurve,
    pub points: Vec<ChartPoint>,
    pub counts: BucketCounts,
    /// Degenerate centers left off the plot.
    pub omitted: Vec<String>,
}

fn sample_curve<T: Scalar>(geometry: &FunnelGeometry<T>, level: LimitLevel, lo: f64, hi: f64) -> Result<LimitCurve> {
    let (la, lb) = (lo.ln(), hi.ln());
    let mut curve = LimitCurve {
        alpha: to_f64(match level {
            LimitLevel::Inner => geometry.alpha,
            LimitLevel::Outer => geometry.alpha_prime,
        }),
        z: to_f64(geometry.critical(level)),
        x: Vec::with_capacity(CURVE_SAMPLES),
        lower: Vec::with_capacity(CURVE_SAMPLES),
        upper: Vec::with_capacity(CURVE_SAMPLES),
    };
    for k in 0..CURVE_SAMPLES {
        let x = (la + (lb - la) * k as f64 / (CURVE_SAMPLES - 1) as f64).exp();
        let (l, u) = funnel_limits(lit::<T>(x), geometry, level)?;
        curve.x.push(x);
        curve.lower.push(to_f64(l));
        curve.upper.push(to_f64(u));
    }
    Ok(curve)
}

/// Points at `(eff_n, O/E)` with the inner and outer limits sampled over the
/// observed effective sample size range.
pub fn build_funnel_chart<T: Scalar>(
    summaries: &[CenterSummary<T>],
    geometry: &FunnelGeometry<T>,
    outcome: Outcome,
) -> Result<FunnelChart> {
    let mut points = Vec::new();
    let mut omitted = Vec::new();
    let mut counts = BucketCounts::default();
    for s in summaries {
        match (s.classification, s.eff_n, s.oe_ratio) {
            (Some(c), Some(x), Some(r)) => {
                counts.add(c);
                points.push(ChartPoint {
                    center_id: s.center_id.clone(),
                    eff_n: to_f64(x),
                    oe_ratio: to_f64(r),
                    classification: c,
                });
            }
            _ => omitted.push(s.center_id.clone()),
        }
    }
    if points.is_empty() {
        return Err(Error::AllDegenerate);
    }
    let mut lo = points.iter().map(|p| p.eff_n).fold(f64::INFINITY, f64::min);
    let mut hi = points.iter().map(|p| p.eff_n).fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        lo /= 2.0;
        hi *= 2.0;
    }
    Ok(FunnelChart {
        outcome,
        p0: to_f64(geometry.p0),
        target: 1.0,
        x_range: (lo, hi),
        inner: sample_curve(geometry, LimitLevel::Inner, lo, hi)?,
        outer: sample_curve(geometry, LimitLevel::Outer, lo, hi)?,
        points,
        counts,
        omitted,
    })
}
