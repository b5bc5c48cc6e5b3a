use crate::error::{Error, Result};
use crate::mdp::{Action, PerContentParams};

/// Embedded-chain stationary distribution of the threshold policy `R`.
///
/// The policy is passive at states `s <= R` and active above `R`;
/// `R = -1` is the always-active policy.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDist {
    pub threshold: i64,
    pub probs: Vec<f64>,
}

impl StationaryDist {
    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(s, p)| s as f64 * p).sum()
    }

    /// Probability mass on states `0..=upto` (zero for `upto < 0`).
    pub fn mass_upto(&self, upto: i64) -> f64 {
        if upto < 0 {
            return 0.0;
        }
        let end = (upto as usize + 1).min(self.probs.len());
        self.probs[..end].iter().sum()
    }
}

/// Action taken by threshold policy `threshold` in state `s`.
#[inline]
pub fn threshold_action(threshold: i64, s: usize) -> Action {
    if (s as i64) <= threshold {
        Action::Passive
    } else {
        Action::Active
    }
}

pub(crate) fn check_threshold(params: &PerContentParams, threshold: i64) -> Result<()> {
    if threshold < -1 || threshold > params.s_max as i64 {
        return Err(Error::ThresholdOutOfRange {
            threshold,
            s_max: params.s_max,
        });
    }
    Ok(())
}

/// Product-form stationary distribution.
///
/// States below `R` are transient. On the recurrent class `max(R,0)..=s_max`
/// the cut between `s` and `s+1` balances,
///
/// ```text
/// phi(s) * up(s) = phi(s+1) * down(s+1),
/// ```
///
/// with `up(R) = 1` (passive at the threshold) and
/// `down(s) = nu s / (lambda + nu s)` above it. The product is accumulated in
/// log space so heavy-traffic instances with large `s_max` do not overflow.
pub fn stationary_distribution(params: &PerContentParams, threshold: i64) -> Result<StationaryDist> {
    params.validate()?;
    check_threshold(params, threshold)?;
    let n = params.num_states();
    let start = threshold.max(0) as usize;

    let mut log_w = vec![f64::NEG_INFINITY; n];
    log_w[start] = 0.0;
    for s in start..params.s_max {
        let up = params.step(s, threshold_action(threshold, s)).up;
        let down = params.step(s + 1, threshold_action(threshold, s + 1)).down;
        log_w[s + 1] = log_w[s] + up.ln() - down.ln();
    }
    let peak = log_w[start..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = log_w.iter().map(|&l| (l - peak).exp()).collect();
    let z: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= z;
    }
    Ok(StationaryDist { threshold, probs })
}
