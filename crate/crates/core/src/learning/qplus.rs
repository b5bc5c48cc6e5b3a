use super::schedule::StepSizeSchedule;
use super::{behavior_action, gated_value, LearnedIndices, StepView};
use crate::error::Result;
use crate::mdp::{sample_unchecked, stage_cost, Action, PerContentParams, Transition};
use crate::rng::Stream;

#[derive(Debug, Clone, PartialEq)]
pub struct TabularLearnerState {
    /// `q[s][a]`, carried across sweeps.
    pub q: Vec<[f64; 2]>,
    /// Index estimates; `w[R]` is only written during sweep `R`.
    pub w: Vec<f64>,
    /// Iterations completed in the current sweep.
    pub n: u64,
    pub current_state: usize,
    /// Number of updates applied to each `(s, a)` entry.
    pub update_counts: Vec<[u64; 2]>,
    /// Updates to `Q(s,1)` with `s < R` or to `Q(s,0)` with `s > R`.
    pub off_policy_updates: u64,
}

impl TabularLearnerState {
    pub fn new(s_max: usize) -> Self {
        TabularLearnerState {
            q: vec![[0.0; 2]; s_max + 1],
            w: vec![0.0; s_max + 1],
            n: 0,
            current_state: 0,
            update_counts: vec![[0; 2]; s_max + 1],
            off_policy_updates: 0,
        }
    }

    #[inline]
    pub fn value(&self, s: usize, a: Action) -> f64 {
        self.q[s][a.index()]
    }

    /// `Q(R,0) - Q(R,1)`.
    #[inline]
    pub fn action_gap(&self, threshold: usize) -> f64 {
        self.q[threshold][0] - self.q[threshold][1]
    }

    pub fn flat(&self) -> &[f64] {
        self.q.as_flattened()
    }
}

/// Q⁺ update of the visited entry `(t.from, t.action)`:
///
/// ```text
/// Q(s,a) <- (1 - gamma) Q(s,a) + gamma (s - (1-a) W(R) + alpha V_R(s'))
/// ```
///
/// where `V_R` is the threshold-gated bootstrap. The subsidy only enters on
/// the passive branch. No other entry changes.
pub fn qplus_whittle_update(
    state: &mut TabularLearnerState,
    params: &PerContentParams,
    threshold: usize,
    t: &Transition,
    gamma: f64,
) {
    let cost = stage_cost(t.from, t.action, state.w[threshold]);
    let boot = gated_value(|s, a| state.value(s, a), threshold, t.to);
    let entry = &mut state.q[t.from][t.action.index()];
    let delta = cost + params.alpha * boot - *entry;
    *entry += gamma * delta;
    state.update_counts[t.from][t.action.index()] += 1;
    if super::is_off_policy(threshold, t.from, t.action) {
        state.off_policy_updates += 1;
    }
}

/// `W(R) <- W(R) + eta (Q(R,0) - Q(R,1))`.
pub fn qplus_whittle_w_update(state: &mut TabularLearnerState, threshold: usize, eta: f64) {
    state.w[threshold] += eta * state.action_gap(threshold);
}

/// One decision epoch of sweep `R`: behaviour action, transition, Q update
/// and index update (both from the pre-step iterates).
pub fn qplus_whittle_step(
    state: &mut TabularLearnerState,
    params: &PerContentParams,
    threshold: usize,
    schedule: &StepSizeSchedule,
    rng: &mut Stream,
) -> Transition {
    let (gamma, eta) = schedule.step_sizes(state.n);
    let s = state.current_state;
    let a = behavior_action(threshold, s, rng);
    let t = sample_unchecked(params, s, a, state.w[threshold], rng);
    let dw = eta * state.action_gap(threshold);
    qplus_whittle_update(state, params, threshold, &t, gamma);
    state.w[threshold] += dw;
    state.current_state = t.to;
    state.n += 1;
    t
}

/// Threshold sweep with warm starts, `T` epochs per threshold.
pub fn qplus_whittle_run(
    params: &PerContentParams,
    schedule: &StepSizeSchedule,
    epochs_per_threshold: u64,
    rng: &mut Stream,
) -> Result<(LearnedIndices, TabularLearnerState)> {
    qplus_whittle_run_observed(params, schedule, epochs_per_threshold, rng, |_| {})
}

pub fn qplus_whittle_run_observed(
    params: &PerContentParams,
    schedule: &StepSizeSchedule,
    epochs_per_threshold: u64,
    rng: &mut Stream,
    mut observer: impl FnMut(&StepView<'_>),
) -> Result<(LearnedIndices, TabularLearnerState)> {
    params.validate()?;
    schedule.validate()?;
    let mut state = TabularLearnerState::new(params.s_max);
    let mut epochs = 0;
    for r in 0..=params.s_max {
        if r > 0 {
            state.w[r] = state.w[r - 1];
        }
        state.n = 0;
        state.current_state = r;
        for _ in 0..epochs_per_threshold {
            let (gamma, eta) = schedule.step_sizes(state.n);
            let w_prev = state.w[r];
            qplus_whittle_step(&mut state, params, r, schedule, rng);
            epochs += 1;
            observer(&StepView {
                threshold: r,
                n: state.n,
                gamma,
                eta,
                w_prev,
                w: state.w[r],
                weights: state.flat(),
            });
        }
    }
    Ok((
        LearnedIndices {
            indices: state.w.clone(),
            epochs,
        },
        state,
    ))
}
