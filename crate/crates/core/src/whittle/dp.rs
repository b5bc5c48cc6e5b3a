//! Dynamic-programming solvers for the single-content problem with a fixed
//! passivity subsidy `w`.

use crate::error::{Error, Result};
use crate::mdp::{stage_cost, Action, PerContentParams};

pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;

/// Mixing weight of the aperiodicity transform used by relative value
/// iteration (the birth–death jump chain has period two).
const APERIODICITY_WEIGHT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunctions {
    /// `J(s)` (discounted) or the bias `V(s)` with `V(0) = 0` (average cost).
    pub j: Vec<f64>,
    /// `q[s][a]`.
    pub q: Vec<[f64; 2]>,
    /// Optimal average cost per epoch; only set by relative value iteration.
    pub gain: Option<f64>,
    pub iterations: usize,
}

impl ValueFunctions {
    /// Greedy action per state; `|Q(s,0) - Q(s,1)| <= tie_tol` resolves to
    /// passive.
    pub fn greedy_policy(&self, tie_tol: f64) -> Vec<Action> {
        self.q
            .iter()
            .map(|q| {
                if q[0] <= q[1] + tie_tol {
                    Action::Passive
                } else {
                    Action::Active
                }
            })
            .collect()
    }
}

fn bellman_q(params: &PerContentParams, w: f64, discount: f64, v: &[f64], q: &mut [[f64; 2]]) {
    for (s, qs) in q.iter_mut().enumerate() {
        for a in Action::BOTH {
            qs[a.index()] = stage_cost(s, a, w) + discount * params.expect(s, a, v);
        }
    }
}

pub fn discounted_value_iteration(params: &PerContentParams, w: f64, tol: f64) -> Result<ValueFunctions> {
    discounted_value_iteration_from(params, w, tol, &vec![0.0; params.num_states()], DEFAULT_MAX_ITERATIONS)
}

/// Value iteration `J <- min_a { s - w(1-a) + alpha E[J(s')] }` from `init`,
/// stopped once the sup-norm Bellman residual is at most `tol`.
pub fn discounted_value_iteration_from(
    params: &PerContentParams,
    w: f64,
    tol: f64,
    init: &[f64],
    max_iterations: usize,
) -> Result<ValueFunctions> {
    params.validate()?;
    check_tol(tol)?;
    let n = params.num_states();
    if init.len() != n {
        return Err(crate::error::invalid("init", format!("expected {n} entries, got {}", init.len())));
    }
    let mut j = init.to_vec();
    let mut q = vec![[0.0; 2]; n];
    let mut residual = f64::INFINITY;
    for it in 1..=max_iterations {
        bellman_q(params, w, params.alpha, &j, &mut q);
        residual = 0.0;
        for (js, qs) in j.iter_mut().zip(&q) {
            let next = qs[0].min(qs[1]);
            residual = f64::max(residual, (next - *js).abs());
            *js = next;
        }
        if residual <= tol {
            bellman_q(params, w, params.alpha, &j, &mut q);
            return Ok(ValueFunctions {
                j,
                q,
                gain: None,
                iterations: it,
            });
        }
    }
    Err(Error::MaxIterationsExceeded {
        solver: "discounted value iteration",
        iterations: max_iterations,
        residual,
    })
}

pub fn relative_value_iteration(params: &PerContentParams, w: f64, tol: f64) -> Result<ValueFunctions> {
    relative_value_iteration_with(params, w, tol, DEFAULT_MAX_ITERATIONS)
}

/// Relative value iteration for the average cost per decision epoch, with
/// reference state 0.
///
/// Runs on the aperiodic transform `tau P + (1 - tau) I` (costs scaled by
/// `tau`), which has the same bias and optimal policies and gain `tau g`.
/// Stops when the span of `T V - V` is at most `tol`; the gain is then
/// bracketed to within `tol`.
pub fn relative_value_iteration_with(
    params: &PerContentParams,
    w: f64,
    tol: f64,
    max_iterations: usize,
) -> Result<ValueFunctions> {
    params.validate()?;
    check_tol(tol)?;
    let n = params.num_states();
    let tau = APERIODICITY_WEIGHT;
    let mut v = vec![0.0; n];
    let mut q = vec![[0.0; 2]; n];
    let mut tv = vec![0.0; n];
    let mut span = f64::INFINITY;
    for it in 1..=max_iterations {
        bellman_q(params, w, 1.0, &v, &mut q);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in 0..n {
            tv[s] = q[s][0].min(q[s][1]);
            let d = tv[s] - v[s];
            lo = lo.min(d);
            hi = hi.max(d);
        }
        span = hi - lo;
        if span <= tol {
            let gain = tv[0] - v[0];
            for qs in q.iter_mut() {
                qs[0] -= gain;
                qs[1] -= gain;
            }
            return Ok(ValueFunctions {
                j: v,
                q,
                gain: Some(gain),
                iterations: it,
            });
        }
        let reference = (1.0 - tau) * v[0] + tau * tv[0];
        for s in 0..n {
            v[s] = (1.0 - tau) * v[s] + tau * tv[s] - reference;
        }
    }
    Err(Error::MaxIterationsExceeded {
        solver: "relative value iteration",
        iterations: max_iterations,
        residual: span,
    })
}

/// Threshold certificate: `Some(R)` with `R` the number of leading passive
/// states when every state after the first active one is active.
pub fn threshold_of_policy(policy: &[Action]) -> Option<usize> {
    let r = policy.iter().take_while(|&&a| a == Action::Passive).count();
    policy[r..]
        .iter()
        .all(|&a| a == Action::Active)
        .then_some(r)
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(crate::error::invalid("tol", format!("must be positive, got {tol}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Action::{Active as A1, Passive as A0};

    fn params(lambda: f64, nu: f64, s_max: usize, alpha: f64) -> PerContentParams {
        PerContentParams::new(lambda, nu, s_max, alpha).unwrap()
    }

    #[test]
    fn threshold_certifier() {
        assert_eq!(threshold_of_policy(&[A0, A0, A1, A1]), Some(2));
        assert_eq!(threshold_of_policy(&[A1, A1, A1]), Some(0));
        assert_eq!(threshold_of_policy(&[A0, A1, A0]), None);
        assert_eq!(threshold_of_policy(&[A0, A0]), Some(2));
    }

    #[test]
    fn empty_queue_without_subsidy_is_passive() {
        for alpha in [0.5, 0.98, 0.999] {
            let vf = discounted_value_iteration(&params(1.0, 1.0, 6, alpha), 0.0, 1e-10).unwrap();
            assert_eq!(vf.q[0][0], vf.q[0][1]);
            assert_eq!(vf.greedy_policy(0.0)[0], A0);
        }
    }

    #[test]
    fn fixed_point_is_unique() {
        let p = params(1.7, 0.6, 12, 0.95);
        let tol = 1e-8;
        let a = discounted_value_iteration_from(&p, 3.0, tol, &vec![0.0; 13], DEFAULT_MAX_ITERATIONS).unwrap();
        let b = discounted_value_iteration_from(&p, 3.0, tol, &vec![500.0; 13], DEFAULT_MAX_ITERATIONS).unwrap();
        let gap = a.j.iter().zip(&b.j).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(gap <= 2.0 * tol / (1.0 - p.alpha), "gap {gap}");
    }

    #[test]
    fn j_is_min_of_q() {
        let vf = discounted_value_iteration(&params(2.0, 1.0, 10, 0.98), 2.0, 1e-10).unwrap();
        for (j, q) in vf.j.iter().zip(&vf.q) {
            assert!((j - q[0].min(q[1])).abs() < 1e-9);
        }
    }

    #[test]
    fn unit_instance_greedy_is_threshold() {
        let vf = discounted_value_iteration(&params(1.0, 1.0, 10, 0.98), 2.0, 1e-10).unwrap();
        let policy = vf.greedy_policy(1e-9);
        assert!(threshold_of_policy(&policy).is_some(), "{policy:?}");
    }

    #[test]
    fn iteration_cap_reported() {
        let err = discounted_value_iteration_from(&params(1.0, 1.0, 5, 0.999), 0.0, 1e-12, &[0.0; 6], 10).unwrap_err();
        assert!(matches!(err, Error::MaxIterationsExceeded { iterations: 10, .. }));
    }

    #[test]
    fn bad_tolerance_rejected() {
        assert!(discounted_value_iteration(&params(1.0, 1.0, 5, 0.9), 0.0, 0.0).is_err());
        assert!(relative_value_iteration(&params(1.0, 1.0, 5, 0.9), 0.0, -1.0).is_err());
    }

    #[test]
    fn rvi_huge_subsidy_is_passive_everywhere() {
        let p = params(1.0, 1.0, 8, 0.9);
        let vf = relative_value_iteration(&p, 10.0 * 9.0, 1e-10).unwrap();
        assert!(vf.greedy_policy(1e-10).iter().all(|&a| a == A0));
        // all-passive drifts to s_max and stays there: gain = s_max - w
        assert!((vf.gain.unwrap() - (8.0 - 90.0)).abs() < 1e-8);
    }

    #[test]
    fn rvi_zero_subsidy_activates_nonempty_states() {
        let p = params(1.0, 1.0, 8, 0.9);
        let vf = relative_value_iteration(&p, 0.0, 1e-10).unwrap();
        let pol = vf.greedy_policy(1e-10);
        assert_eq!(pol[0], A0);
        assert!(pol[1..].iter().all(|&a| a == A1), "{pol:?}");
        assert_eq!(vf.j[0], 0.0);
    }
}
