//! Relative Q-learning baseline for the average-cost problem.
//!
//! A single Q table is learned under epsilon-greedy exploration. The visited
//! state's own index estimate `W(S_n)` is the subsidy in the stage cost and is
//! the only index moved at each step. The reference `I(Q) = Q(s_ref, a_ref)`
//! pins the additive constant of the relative values.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::qplus::TabularLearnerState;
use super::schedule::StepSizeSchedule;
use super::{LearnedIndices, StepView};
use crate::error::{invalid, Result};
use crate::mdp::{sample_unchecked, stage_cost, Action, PerContentParams, Transition};
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QWhittleOptions {
    pub epsilon: f64,
    pub reference_state: usize,
    pub reference_action: Action,
}

impl Default for QWhittleOptions {
    fn default() -> Self {
        QWhittleOptions {
            epsilon: 0.1,
            reference_state: 0,
            reference_action: Action::Passive,
        }
    }
}

impl QWhittleOptions {
    pub fn validate(&self, s_max: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(invalid("epsilon", "must lie in [0, 1]"));
        }
        if self.reference_state > s_max {
            return Err(invalid("reference_state", format!("exceeds s_max = {s_max}")));
        }
        Ok(())
    }
}

/// Applies one observed transition:
///
/// ```text
/// Q(s,a) += gamma (s - (1-a) W(s) + min_b Q(s',b) - I(Q) - Q(s,a))
/// W(s)   += eta (Q(s,0) - Q(s,1))
/// ```
///
/// Both right-hand sides use the pre-step table.
pub fn q_whittle_step(
    state: &mut TabularLearnerState,
    t: &Transition,
    gamma: f64,
    eta: f64,
    options: &QWhittleOptions,
) {
    let s = t.from;
    let reference = state.value(options.reference_state, options.reference_action);
    let next = state.q[t.to][0].min(state.q[t.to][1]);
    let gap = state.action_gap(s);
    let cost = stage_cost(s, t.action, state.w[s]);
    let entry = &mut state.q[s][t.action.index()];
    *entry += gamma * (cost + next - reference - *entry);
    state.w[s] += eta * gap;
    state.update_counts[s][t.action.index()] += 1;
}

fn epsilon_greedy(q: &[f64; 2], epsilon: f64, rng: &mut Stream) -> Action {
    if rng.gen::<f64>() < epsilon {
        if rng.gen_bool(0.5) {
            Action::Active
        } else {
            Action::Passive
        }
    } else if q[0] <= q[1] {
        Action::Passive
    } else {
        Action::Active
    }
}

/// `epochs` decision epochs from `s = 0` with the step-size clock never
/// reset.
pub fn q_whittle_run(
    params: &PerContentParams,
    schedule: &StepSizeSchedule,
    epochs: u64,
    options: &QWhittleOptions,
    rng: &mut Stream,
) -> Result<(LearnedIndices, TabularLearnerState)> {
    q_whittle_run_observed(params, schedule, epochs, options, rng, |_| {})
}

/// As [`q_whittle_run`], reporting every epoch. The view's `threshold` is
/// the visited state whose index moved.
pub fn q_whittle_run_observed(
    params: &PerContentParams,
    schedule: &StepSizeSchedule,
    epochs: u64,
    options: &QWhittleOptions,
    rng: &mut Stream,
    mut observer: impl FnMut(&StepView<'_>),
) -> Result<(LearnedIndices, TabularLearnerState)> {
    params.validate()?;
    schedule.validate()?;
    options.validate(params.s_max)?;
    let mut state = TabularLearnerState::new(params.s_max);
    for _ in 0..epochs {
        let (gamma, eta) = schedule.step_sizes(state.n);
        let s = state.current_state;
        let a = epsilon_greedy(&state.q[s], options.epsilon, rng);
        let t = sample_unchecked(params, s, a, state.w[s], rng);
        let w_prev = state.w[s];
        q_whittle_step(&mut state, &t, gamma, eta, options);
        state.current_state = t.to;
        state.n += 1;
        observer(&StepView {
            threshold: s,
            n: state.n,
            gamma,
            eta,
            w_prev,
            w: state.w[s],
            weights: state.flat(),
        });
    }
    Ok((
        LearnedIndices {
            indices: state.w.clone(),
            epochs,
        },
        state,
    ))
}
