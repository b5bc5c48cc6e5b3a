//! Whittle-index-based wireless edge caching.
//!
//! Each cached content is modelled as a controlled birth–death queue of
//! outstanding requests: requests arrive at rate `lambda`, and while the
//! content is cached (action `1`) the queue drains at rate `nu * s`. The
//! crate provides
//!
//! * [`mdp`]: the per-content MDP, its embedded decision-epoch kernel and a
//!   seeded sampler;
//! * [`whittle`]: threshold-policy stationary distributions, the closed-form
//!   Whittle index, and dynamic-programming oracles (discounted value
//!   iteration, relative value iteration, indifference search);
//! * [`learning`]: Q-Whittle, Q⁺-Whittle and Q⁺-Whittle with linear function
//!   approximation, step-size schedules and two-timescale telemetry;
//! * [`simulator`]: a multi-content continuous-time cache simulator with
//!   index and classical baseline policies;
//! * [`workload`]: Zipf rate vectors and request-trace ingestion.

pub mod error;
pub mod learning;
pub mod mdp;
pub mod rng;
pub mod simulator;
pub mod whittle;
pub mod workload;

pub use error::{Error, Result};
pub use mdp::{Action, PerContentParams, Transition};
