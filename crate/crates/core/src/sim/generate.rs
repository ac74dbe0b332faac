use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, Normal, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::survdata::{Dataset, SubjectRecord};

use super::config::ScenarioConfig;

/// Random streams per replicate, so replicates are independent of each
/// other and of scheduling.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Stream {
    Data = 0,
    Bootstrap = 1,
}

pub(crate) fn replicate_rng(seed: u64, replicate: usize, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((replicate as u64) << 4) | stream as u64);
    rng
}

/// Generating parameters of one simulated center.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterTruth {
    pub center_id: String,
    pub size: usize,
    pub censoring_shape: f64,
    pub censoring_rate: f64,
    pub event_shape: f64,
    pub event_rate: f64,
    /// Center mean of the covariate.
    pub covariate_effect: f64,
}

#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub dataset: Dataset<f64>,
    /// Sorted by center id, matching the dataset's center order.
    pub centers: Vec<CenterTruth>,
}

/// Shape giving a center with rate `center_rate` the same cumulative hazard
/// at `t_star` as the baseline: `(b t*)^a = (b0 t*)^a0`.
pub fn solve_nonph_shape(center_rate: f64, base_shape: f64, base_rate: f64, t_star: f64) -> Result<f64> {
    if !(center_rate > 0.0 && base_shape > 0.0 && base_rate > 0.0 && t_star > 0.0) {
        return Err(Error::InvalidArgument("rates, shape and reference time must be positive".into()));
    }
    let denom = (center_rate * t_star).ln();
    if denom == 0.0 {
        return Err(Error::ShapeUnsolvable);
    }
    let a = base_shape * (base_rate * t_star).ln() / denom;
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::ShapeUnsolvable);
    }
    Ok(a)
}

/// Negative binomial as a gamma-Poisson mixture with the given mean and
/// sd, redrawn until positive. Falls back to Poisson when the sd does not
/// exceed the Poisson sd.
pub fn sample_center_size<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> usize {
    let var = sd * sd;
    loop {
        let lambda = if var > mean {
            let shape = mean * mean / (var - mean);
            Gamma::new(shape, mean / shape).expect("valid gamma").sample(rng)
        } else {
            mean
        };
        if lambda <= 0.0 {
            continue;
        }
        let n: f64 = Poisson::new(lambda).expect("valid poisson").sample(rng);
        if n >= 1.0 {
            return n as usize;
        }
    }
}

/// Weibull draw with cumulative hazard `(rate t)^shape / multiplier`
/// inverted at a unit exponential.
fn weibull(rng: &mut ChaCha8Rng, shape: f64, rate: f64, multiplier: f64) -> f64 {
    let e: f64 = Exp1.sample(rng);
    (e / multiplier).powf(1.0 / shape) / rate
}

pub fn generate_dataset(config: &ScenarioConfig, replicate: usize) -> Result<SimulatedData> {
    config.validate()?;
    let mut rng = replicate_rng(config.seed, replicate, Stream::Data);
    let width = config.n_centers.to_string().len().max(3);
    let normal = |sd: f64| Normal::new(0.0, sd).expect("non-negative sd");
    let between = normal(config.covariate_between_var.sqrt());
    let within = normal(config.covariate_within_var.sqrt());
    let frailty = normal(config.frailty_log_variance.sqrt());
    let rho = config.censoring_correlation;

    let mut records = Vec::new();
    let mut centers = Vec::with_capacity(config.n_centers);
    for c in 0..config.n_centers {
        let center_id = format!("c{:0width$}", c + 1);
        let size = sample_center_size(&mut rng, config.center_size_mean, config.center_size_sd);

        let (censoring_shape, censoring_rate) = if config.same_followup {
            (config.same_followup_log_shape.exp(), config.same_followup_log_rate.exp())
        } else {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            let ls = config.censoring_log_shape_mean + config.censoring_log_shape_sd * z1;
            let lr = config.censoring_log_rate_mean
                + config.censoring_log_rate_sd * (rho * z1 + (1.0 - rho * rho).sqrt() * z2);
            (ls.exp(), lr.exp())
        };

        let covariate_effect = between.sample(&mut rng);

        // A non-PH center whose rate gives no positive shape draws a new frailty.
        let (event_shape, event_rate) = loop {
            let rate = if config.frailty_log_variance > 0.0 {
                config.baseline_rate * frailty.sample(&mut rng).exp()
            } else {
                config.baseline_rate
            };
            if !config.non_ph {
                break (config.baseline_shape, rate);
            }
            match solve_nonph_shape(rate, config.baseline_shape, config.baseline_rate, config.non_ph_reference_time) {
                Ok(shape) => break (shape, rate),
                Err(_) => continue,
            }
        };

        for _ in 0..size {
            let x = covariate_effect + within.sample(&mut rng);
            let t_event = weibull(&mut rng, event_shape, event_rate, (config.covariate_beta * x).exp());
            let t_cens = weibull(&mut rng, censoring_shape, censoring_rate, 1.0);
            let event = t_event <= t_cens;
            let time = t_event.min(t_cens).max(f64::MIN_POSITIVE);
            records.push(SubjectRecord::new(center_id.clone(), 0.0, time, event, vec![Some(x)])?);
        }
        centers.push(CenterTruth {
            center_id,
            size,
            censoring_shape,
            censoring_rate,
            event_shape,
            event_rate,
            covariate_effect,
        });
    }
    let dataset = Dataset::new(records, vec!["x".into()])?;
    Ok(SimulatedData { dataset, centers })
}
