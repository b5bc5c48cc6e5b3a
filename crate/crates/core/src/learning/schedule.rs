use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Fast (`gamma`) and slow (`eta`) step sizes for the two-timescale updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepSizeSchedule {
    /// `gamma_n = gamma0 / (n+1)^(5/9)`, `eta_n = eta0 / (n+1)^(10/9)`.
    Theorem1 { gamma0: f64, eta0: f64 },
    /// Both rates divided by `decay_factor` every `decay_period` steps.
    Geometric {
        gamma0: f64,
        eta0: f64,
        decay_factor: f64,
        decay_period: u64,
    },
}

impl Default for StepSizeSchedule {
    fn default() -> Self {
        StepSizeSchedule::Geometric {
            gamma0: 0.1,
            eta0: 0.01,
            decay_factor: 1.1,
            decay_period: 1000,
        }
    }
}

impl StepSizeSchedule {
    pub fn theorem1(gamma0: f64, eta0: f64) -> Self {
        StepSizeSchedule::Theorem1 { gamma0, eta0 }
    }

    pub fn validate(&self) -> Result<()> {
        let (g, e) = match *self {
            StepSizeSchedule::Theorem1 { gamma0, eta0 } => (gamma0, eta0),
            StepSizeSchedule::Geometric {
                gamma0,
                eta0,
                decay_factor,
                decay_period,
            } => {
                if !(decay_factor >= 1.0) {
                    return Err(invalid("decay_factor", "must be at least 1"));
                }
                if decay_period == 0 {
                    return Err(invalid("decay_period", "must be positive"));
                }
                (gamma0, eta0)
            }
        };
        if !(g > 0.0 && g.is_finite()) {
            return Err(invalid("gamma0", "must be positive"));
        }
        if !(e > 0.0 && e.is_finite()) {
            return Err(invalid("eta0", "must be positive"));
        }
        Ok(())
    }

    /// `(gamma_n, eta_n)` at iteration `n` (counted from 0).
    pub fn step_sizes(&self, n: u64) -> (f64, f64) {
        match *self {
            StepSizeSchedule::Theorem1 { gamma0, eta0 } => {
                let m = (n + 1) as f64;
                (gamma0 * m.powf(-5.0 / 9.0), eta0 * m.powf(-10.0 / 9.0))
            }
            StepSizeSchedule::Geometric {
                gamma0,
                eta0,
                decay_factor,
                decay_period,
            } => {
                let k = (n / decay_period) as i32;
                let scale = decay_factor.powi(-k);
                (gamma0 * scale, eta0 * scale)
            }
        }
    }
}
