//! Data model and model-free estimators.

mod data;
pub(crate) mod km;
mod normal;
mod poibin;
mod step;

pub use data::{Dataset, SubjectRecord};
pub use km::{kaplan_meier, km_death_probability, reverse_kaplan_meier};
pub use normal::{normal_quantile, two_sided_critical};
pub use poibin::{poisson_binomial_p_value, poisson_binomial_pmf};
pub use step::StepFunction;
