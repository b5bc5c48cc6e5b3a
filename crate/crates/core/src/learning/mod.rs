//! Model-free index learners.
//!
//! * [`q_whittle`]: the relative Q-learning baseline with epsilon-greedy
//!   exploration (average-cost mode).
//! * [`qplus`]: tabular Q⁺-Whittle, which learns `W(R)` one threshold at a
//!   time under the threshold behaviour policy and only touches on-policy
//!   Q entries.
//! * [`lfa`]: the same scheme with `Q(s,a) = phi(s,a)^T theta`.
//!
//! Q⁺ learners run in discounted mode. Each sweep `R = 0..=s_max` restarts
//! the step-size clock, starts the chain at `s = R`, and warm-starts both the
//! Q representation and `W(R)` from the previous sweep.

pub mod features;
pub mod lfa;
pub mod q_whittle;
pub mod qplus;
pub mod schedule;
pub mod target;
pub mod telemetry;

use rand::Rng;

use crate::mdp::Action;

pub use features::{FeatureMap, FeatureSpec};
pub use lfa::{lfa_run, lfa_run_observed, lfa_step, lfa_update, lfa_w_update, LfaLearnerState};
pub use q_whittle::{q_whittle_run, q_whittle_run_observed, q_whittle_step, QWhittleOptions};
pub use qplus::{
    qplus_whittle_run, qplus_whittle_run_observed, qplus_whittle_step, qplus_whittle_update, qplus_whittle_w_update,
    TabularLearnerState,
};
pub use schedule::StepSizeSchedule;
pub use target::{discounted_threshold_index, discounted_threshold_table, QPlusTarget};
pub use telemetry::{lyapunov_record, tsa_telemetry, TsaRecord, TsaTelemetry};

/// Threshold behaviour policy: passive below `R`, active above, a fair coin
/// at `R`. The coin is only drawn at `s == R`.
#[inline]
pub fn behavior_action<G: Rng + ?Sized>(threshold: usize, s: usize, rng: &mut G) -> Action {
    use std::cmp::Ordering::*;
    match s.cmp(&threshold) {
        Less => Action::Passive,
        Greater => Action::Active,
        Equal => {
            if rng.gen_bool(0.5) {
                Action::Active
            } else {
                Action::Passive
            }
        }
    }
}

/// Threshold-gated bootstrap value of the next state: the active entry above
/// `R`, the passive entry below `R`, and the better of the two at `R`.
#[inline]
pub fn gated_value(value: impl Fn(usize, Action) -> f64, threshold: usize, next: usize) -> f64 {
    use std::cmp::Ordering::*;
    match next.cmp(&threshold) {
        Greater => value(next, Action::Active),
        Less => value(next, Action::Passive),
        Equal => value(next, Action::Passive).min(value(next, Action::Active)),
    }
}

/// True for entries the threshold behaviour policy `R` never selects.
#[inline]
pub fn is_off_policy(threshold: usize, s: usize, a: Action) -> bool {
    (s < threshold && a == Action::Active) || (s > threshold && a == Action::Passive)
}

/// One learner step as seen by run observers.
#[derive(Debug, Clone, Copy)]
pub struct StepView<'a> {
    pub threshold: usize,
    /// Iterations completed in the current sweep.
    pub n: u64,
    pub gamma: f64,
    pub eta: f64,
    /// `W(R)` before the step.
    pub w_prev: f64,
    /// `W(R)` after the step.
    pub w: f64,
    /// Q table flattened as `2 s + a`, or the LFA weights.
    pub weights: &'a [f64],
}

/// Final per-state index estimates from a sweep run.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedIndices {
    pub indices: Vec<f64>,
    pub epochs: u64,
}
