//! Exact index machinery for the per-content problem.
//!
//! All distributions here are over the embedded jump chain, i.e. they weight
//! decision epochs, not time. The simulator is the only place that averages
//! over continuous time.

pub mod dp;
pub mod index;
pub mod oracle;
pub mod stationary;

pub use dp::{
    discounted_value_iteration, discounted_value_iteration_from, relative_value_iteration, threshold_of_policy,
    ValueFunctions,
};
pub use index::{whittle_index_closed_form, whittle_table, WhittleTable};
pub use oracle::{indifference_index_oracle, passive_set, subsidy_ceiling};
pub use stationary::{stationary_distribution, threshold_action, StationaryDist};
