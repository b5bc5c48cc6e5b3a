use serde::Serialize;

use super::stationary::stationary_distribution;
use crate::error::{Error, Result};
use crate::mdp::PerContentParams;

const DENOMINATOR_FLOOR: f64 = 1e-12;
const TIE_TOLERANCE: f64 = 1e-9;

/// Closed-form index `W(R)`: the subsidy at which thresholds `R - 1` and
/// `R` have equal average cost per decision epoch,
///
/// ```text
///        sum_s s phi_R(s) - sum_s s phi_{R-1}(s)
/// W(R) = -------------------------------------------------
///        sum_{s<=R} phi_R(s) - sum_{s<=R-1} phi_{R-1}(s)
/// ```
pub fn whittle_index_closed_form(params: &PerContentParams, threshold: usize) -> Result<f64> {
    params.validate()?;
    params.check_state(threshold)?;
    let r = threshold as i64;
    let at = stationary_distribution(params, r)?;
    let below = stationary_distribution(params, r - 1)?;
    let numerator = at.mean() - below.mean();
    let denominator = at.mass_upto(r) - below.mass_upto(r - 1);
    if denominator.abs() < DENOMINATOR_FLOOR {
        return Err(Error::DegenerateDenominator {
            threshold,
            denominator,
        });
    }
    Ok(numerator / denominator)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WhittleTable {
    pub params: PerContentParams,
    /// `indices[R]` for `R = 0..=s_max`.
    pub indices: Vec<f64>,
    /// True iff `indices` is non-decreasing (ties within 1e-9).
    pub indexable: bool,
}

impl WhittleTable {
    pub fn index(&self, s: usize) -> f64 {
        self.indices[s.min(self.indices.len() - 1)]
    }

    /// First `R` at which the table decreases, if any.
    pub fn first_decrease(&self) -> Option<usize> {
        self.indices
            .windows(2)
            .position(|w| w[1] < w[0] - TIE_TOLERANCE)
            .map(|i| i + 1)
    }
}

pub fn is_non_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] >= w[0] - TIE_TOLERANCE)
}

pub fn whittle_table(params: &PerContentParams) -> Result<WhittleTable> {
    params.validate()?;
    let indices = (0..=params.s_max)
        .map(|r| whittle_index_closed_form(params, r))
        .collect::<Result<Vec<_>>>()?;
    let indexable = is_non_decreasing(&indices);
    Ok(WhittleTable {
        params: *params,
        indices,
        indexable,
    })
}
