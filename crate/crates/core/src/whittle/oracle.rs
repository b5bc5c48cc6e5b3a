//! Definition-based index oracle: the smallest subsidy at which the
//! average-cost optimal action in a state becomes passive.

use std::collections::BTreeSet;

use super::dp::relative_value_iteration;
use crate::error::{Error, Result};
use crate::mdp::{Action, PerContentParams};

pub const DEFAULT_ORACLE_TOL: f64 = 1e-6;
/// Solver tolerance for the value functions behind each greedy decision.
pub const RVI_TOL: f64 = 1e-10;
const SCAN_POINTS: usize = 256;

/// Upper end of the subsidy bracket, `10 (s_max + 1)`.
pub fn subsidy_ceiling(params: &PerContentParams) -> f64 {
    10.0 * (params.s_max as f64 + 1.0)
}

fn greedy_is_passive(params: &PerContentParams, state: usize, w: f64) -> Result<bool> {
    let vf = relative_value_iteration(params, w, RVI_TOL)?;
    Ok(vf.greedy_policy(RVI_TOL)[state] == Action::Passive)
}

/// Smallest subsidy at which state `R` is passive under the RVI-greedy
/// policy, to within `tol`.
///
/// The bracket is `[-w_hi, w_hi]` with `w_hi = 10 (s_max + 1)`; a
/// uniform scan locates the first passive grid point and bisection refines
/// the crossing to its left, so the result is the smallest crossing even
/// where the greedy action at `R` is not monotone in the subsidy.
pub fn indifference_index_oracle(params: &PerContentParams, state: usize, tol: f64) -> Result<f64> {
    params.validate()?;
    params.check_state(state)?;
    if !(tol > 0.0) {
        return Err(crate::error::invalid("tol", "must be positive"));
    }
    let hi = subsidy_ceiling(params);
    let lo = -hi;
    let not_found = Error::BracketNotFound { state, lo, hi };
    if greedy_is_passive(params, state, lo)? {
        return Err(not_found);
    }
    let step = (hi - lo) / SCAN_POINTS as f64;
    let mut left = lo;
    let mut right = None;
    for k in 1..=SCAN_POINTS {
        let w = lo + step * k as f64;
        if greedy_is_passive(params, state, w)? {
            right = Some(w);
            break;
        }
        left = w;
    }
    let mut right = right.ok_or(not_found)?;
    while right - left > tol {
        let mid = 0.5 * (left + right);
        if greedy_is_passive(params, state, mid)? {
            right = mid;
        } else {
            left = mid;
        }
    }
    Ok(0.5 * (left + right))
}

/// `D(w)`: states whose RVI-greedy action is passive (ties are passive).
pub fn passive_set(params: &PerContentParams, w: f64) -> Result<BTreeSet<usize>> {
    let vf = relative_value_iteration(params, w, RVI_TOL)?;
    Ok(vf
        .greedy_policy(RVI_TOL)
        .into_iter()
        .enumerate()
        .filter(|(_, a)| *a == Action::Passive)
        .map(|(s, _)| s)
        .collect())
}
