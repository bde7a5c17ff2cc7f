//! Delayed rough paths, controlled paths, the compensated-sum rough integral,
//! and the metrics between them.

mod controlled;
mod distance;
mod grr;
mod integral;
mod path;

pub use controlled::{
    controlled_norm, d2beta_distance, d2beta_parts, promote, ControlledNorm, ControlledPath, DelayedControlledPath,
};
pub use distance::{first_index_with_history, rho_distance, rho_distance_on, rough_path_norms, seminorm_terms};
pub use grr::grr_diagnostic;
pub use integral::{compensated_germ, delayed_rough_integral};
pub use path::DelayedRoughPath;

pub(crate) use integral::add_compensated_term;
#[cfg(test)]
pub(crate) use path::random_path;
