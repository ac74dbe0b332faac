//! Per-subject Bernoulli probabilities of an observed event (or loss to
//! follow-up) within the horizon, as sums over the jump times of the fitted
//! step functions with left limits.

use crate::cox::CoxFit;
use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};
use crate::survdata::StepFunction;

/// One term of the discretized integral: hazard mass, `H₀(s-)` and the
/// weight `G(s-)` (event) or `G(s-) - G(s)` (follow-up).
#[derive(Debug, Clone, Copy)]
struct Term<T> {
    jump: T,
    cum_hazard_left: T,
    weight: T,
}

fn clamp_probability<T: Scalar>(p: T) -> T {
    if p > T::one() + lit(1e-6) {
        log::warn!("probability sum {p} exceeds 1; clamped");
    }
    p.max(T::zero()).min(T::one())
}

/// Probabilities of observing the event by `tau` for subjects sharing the
/// follow-up curve `censoring`. `xs` holds the model covariates per subject.
pub fn event_probabilities<T: Scalar>(
    fit: &CoxFit<T>,
    xs: &[Vec<T>],
    censoring: &StepFunction<T>,
    tau: T,
) -> Result<Vec<T>> {
    if fit.is_stratified() {
        return Err(Error::PooledModelRequired);
    }
    let h0 = fit.baseline_for(None)?;
    let terms: Vec<Term<T>> = h0
        .jumps()
        .enumerate()
        .take_while(|(_, (s, _))| *s <= tau)
        .map(|(k, (s, jump))| Term { jump, cum_hazard_left: h0.value_before(k), weight: censoring.eval_left(s) })
        .collect();
    xs.iter()
        .map(|x| {
            let risk = fit.linear_predictor(x)?.exp();
            let p = terms
                .iter()
                .map(|t| t.jump * risk * (-risk * t.cum_hazard_left).exp() * t.weight)
                .sum();
            Ok(clamp_probability(p))
        })
        .collect()
}

/// Single-subject form of [`event_probabilities`].
pub fn event_probability<T: Scalar>(fit: &CoxFit<T>, x: &[T], censoring: &StepFunction<T>, tau: T) -> Result<T> {
    Ok(event_probabilities(fit, &[x.to_vec()], censoring, tau)?[0])
}

/// Probabilities of a loss to follow-up by `tau` for subjects of `center`,
/// under the pooled follow-up curve and the center's own survival stratum.
///
/// The censoring hazard mass at `s` times `G(s-)` equals the drop
/// `G(s-) - G(s)`, so the pooled reverse Kaplan-Meier curve carries both.
pub fn followup_probabilities<T: Scalar>(
    stratified_fit: &CoxFit<T>,
    pooled_censoring: &StepFunction<T>,
    xs: &[Vec<T>],
    center: &str,
    tau: T,
) -> Result<Vec<T>> {
    if !stratified_fit.is_stratified() {
        return Err(Error::StratifiedModelRequired);
    }
    let h0 = stratified_fit.baseline_for(Some(center))?;
    let terms: Vec<Term<T>> = pooled_censoring
        .jumps()
        .take_while(|(s, _)| *s <= tau)
        .map(|(s, dg)| Term { jump: -dg, cum_hazard_left: h0.eval_left(s), weight: T::one() })
        .collect();
    xs.iter()
        .map(|x| {
            let risk = stratified_fit.linear_predictor(x)?.exp();
            let p = terms.iter().map(|t| t.jump * (-risk * t.cum_hazard_left).exp()).sum();
            Ok(clamp_probability(p))
        })
        .collect()
}

/// Single-subject form of [`followup_probabilities`].
pub fn followup_probability<T: Scalar>(
    stratified_fit: &CoxFit<T>,
    pooled_censoring: &StepFunction<T>,
    x: &[T],
    center: &str,
    tau: T,
) -> Result<T> {
    Ok(followup_probabilities(stratified_fit, pooled_censoring, &[x.to_vec()], center, tau)?[0])
}
