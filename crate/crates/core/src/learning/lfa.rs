//! Q⁺-Whittle with linear function approximation, `Q(s,a) = phi(s,a)^T theta`.

use super::features::{FeatureMap, FeatureSpec};
use super::schedule::StepSizeSchedule;
use super::{behavior_action, gated_value, LearnedIndices, StepView};
use crate::error::Result;
use crate::mdp::{sample_unchecked, stage_cost, Action, PerContentParams, Transition};
use crate::rng::Stream;

#[derive(Debug, Clone, PartialEq)]
pub struct LfaLearnerState {
    pub theta: Vec<f64>,
    pub w: Vec<f64>,
    pub features: FeatureMap,
    pub n: u64,
    pub current_state: usize,
    pub update_counts: Vec<[u64; 2]>,
    /// Updates to `Q(s,1)` with `s < R` or to `Q(s,0)` with `s > R`.
    pub off_policy_updates: u64,
}

impl LfaLearnerState {
    pub fn new(spec: FeatureSpec, s_max: usize) -> Result<Self> {
        let features = FeatureMap::new(spec, s_max)?;
        Ok(LfaLearnerState {
            theta: vec![0.0; features.dim()],
            w: vec![0.0; s_max + 1],
            features,
            n: 0,
            current_state: 0,
            update_counts: vec![[0; 2]; s_max + 1],
            off_policy_updates: 0,
        })
    }

    #[inline]
    pub fn value(&self, s: usize, a: Action) -> f64 {
        self.features.value(&self.theta, s, a)
    }

    /// `phi(R,0)^T theta - phi(R,1)^T theta`.
    #[inline]
    pub fn action_gap(&self, threshold: usize) -> f64 {
        self.value(threshold, Action::Passive) - self.value(threshold, Action::Active)
    }

    /// Gated TD error of a transition under the current weights.
    pub fn td_error(&self, params: &PerContentParams, threshold: usize, t: &Transition) -> f64 {
        let cost = stage_cost(t.from, t.action, self.w[threshold]);
        let boot = gated_value(|s, a| self.value(s, a), threshold, t.to);
        cost + params.alpha * boot - self.value(t.from, t.action)
    }

    /// Expected TD error at `(s, a)` over the transition law: the Bellman
    /// residual `[T theta](s,a) - phi(s,a)^T theta`.
    pub fn expected_td_error(&self, params: &PerContentParams, threshold: usize, s: usize, a: Action) -> f64 {
        let v: Vec<f64> = (0..params.num_states())
            .map(|x| gated_value(|y, b| self.value(y, b), threshold, x))
            .collect();
        stage_cost(s, a, self.w[threshold]) + params.alpha * params.expect(s, a, &v) - self.value(s, a)
    }
}

/// Semi-gradient step `theta <- theta + gamma delta phi(S_n, A_n)`.
pub fn lfa_update(state: &mut LfaLearnerState, params: &PerContentParams, threshold: usize, t: &Transition, gamma: f64) {
    let delta = state.td_error(params, threshold, t);
    let step = gamma * delta;
    let phi = state.features.phi(t.from, t.action);
    for (th, p) in state.theta.iter_mut().zip(phi) {
        *th += step * p;
    }
    state.update_counts[t.from][t.action.index()] += 1;
    if super::is_off_policy(threshold, t.from, t.action) {
        state.off_policy_updates += 1;
    }
}

pub fn lfa_w_update(state: &mut LfaLearnerState, threshold: usize, eta: f64) {
    state.w[threshold] += eta * state.action_gap(threshold);
}

/// One decision epoch; consumes the RNG exactly like the tabular learner.
pub fn lfa_step(
    state: &mut LfaLearnerState,
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
    lfa_update(state, params, threshold, &t, gamma);
    state.w[threshold] += dw;
    state.current_state = t.to;
    state.n += 1;
    t
}

pub fn lfa_run(
    params: &PerContentParams,
    schedule: &StepSizeSchedule,
    spec: FeatureSpec,
    epochs_per_threshold: u64,
    rng: &mut Stream,
) -> Result<(LearnedIndices, LfaLearnerState)> {
    lfa_run_observed(params, schedule, spec, epochs_per_threshold, rng, |_| {})
}

pub fn lfa_run_observed(
    params: &PerContentParams,
    schedule: &StepSizeSchedule,
    spec: FeatureSpec,
    epochs_per_threshold: u64,
    rng: &mut Stream,
    mut observer: impl FnMut(&StepView<'_>),
) -> Result<(LearnedIndices, LfaLearnerState)> {
    params.validate()?;
    schedule.validate()?;
    let mut state = LfaLearnerState::new(spec, params.s_max)?;
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
            lfa_step(&mut state, params, r, schedule, rng);
            epochs += 1;
            observer(&StepView {
                threshold: r,
                n: state.n,
                gamma,
                eta,
                w_prev,
                w: state.w[r],
                weights: &state.theta,
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn rbf() -> FeatureSpec {
        FeatureSpec::GaussianRbf { d: 20, bandwidth: None }
    }

    #[test]
    fn increment_lies_along_visited_feature() {
        let p = PerContentParams::new(1.0, 1.0, 10, 0.98).unwrap();
        let mut st = LfaLearnerState::new(rbf(), 10).unwrap();
        for (i, th) in st.theta.iter_mut().enumerate() {
            *th = (i as f64 * 0.37).sin();
        }
        st.w[4] = 0.8;
        let t = Transition {
            from: 6,
            action: Action::Active,
            to: 5,
            stage_cost: 0.0,
        };
        let before = st.theta.clone();
        let delta = st.td_error(&p, 4, &t);
        lfa_update(&mut st, &p, 4, &t, 0.05);
        let phi = st.features.phi(6, Action::Active);
        for k in 0..20 {
            let inc = st.theta[k] - before[k];
            assert!((inc - 0.05 * delta * phi[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_gamma_and_w_fixed_point() {
        let p = PerContentParams::new(1.0, 1.0, 6, 0.98).unwrap();
        let mut st = LfaLearnerState::new(rbf(), 6).unwrap();
        st.theta.iter_mut().for_each(|x| *x = 1.5);
        let t = Transition {
            from: 2,
            action: Action::Passive,
            to: 3,
            stage_cost: 0.0,
        };
        let before = st.theta.clone();
        lfa_update(&mut st, &p, 3, &t, 0.0);
        assert_eq!(st.theta, before);
        // rbf blocks for the two actions are mirror images, so a constant theta
        // is indifferent everywhere
        let w = st.w.clone();
        lfa_w_update(&mut st, 3, 0.7);
        assert!((st.w[3] - w[3]).abs() < 1e-12);
    }

    #[test]
    fn w_increment_is_linear_in_eta() {
        let mut a = LfaLearnerState::new(FeatureSpec::Onehot, 3).unwrap();
        a.theta[4] = 2.0;
        a.theta[5] = -1.0;
        let mut b = a.clone();
        lfa_w_update(&mut a, 2, 0.1);
        lfa_w_update(&mut b, 2, 0.2);
        assert!((2.0 * a.w[2] - b.w[2]).abs() < 1e-15);
        assert!((a.w[2] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn epoch_count_is_sweeps_times_t() {
        let p = PerContentParams::new(1.0, 1.0, 4, 0.98).unwrap();
        let (out, _) = lfa_run(&p, &StepSizeSchedule::default(), rbf(), 37, &mut rng::stream(3)).unwrap();
        assert_eq!(out.epochs, 5 * 37);
    }

    #[test]
    fn expected_increment_is_bellman_residual() {
        // Averaging the TD error over many sampled transitions from a fixed
        // (s, a) recovers the exact residual.
        use rand::Rng;
        let p = PerContentParams::new(1.3, 0.9, 6, 0.98).unwrap();
        let mut st = LfaLearnerState::new(rbf(), 6).unwrap();
        let mut g = rng::stream(11);
        for th in st.theta.iter_mut() {
            *th = g.gen_range(-3.0..3.0);
        }
        st.w[3] = 1.1;
        for (s, a) in [(1, Action::Passive), (3, Action::Active), (3, Action::Passive), (6, Action::Active)] {
            let exact = st.expected_td_error(&p, 3, s, a);
            let row = p.step(s, a);
            let mut avg = 0.0;
            for (to, pr) in [(s + 1, row.up), (s.wrapping_sub(1), row.down), (s, row.stay)] {
                if pr > 0.0 {
                    let t = Transition {
                        from: s,
                        action: a,
                        to,
                        stage_cost: 0.0,
                    };
                    avg += pr * st.td_error(&p, 3, &t);
                }
            }
            assert!((avg - exact).abs() < 1e-12);
        }
    }
}
