//! Per-content controlled birth–death MDP.
//!
//! Requests for a content arrive at rate `lambda`. While the content is
//! cached (active) every outstanding request is served at rate `nu`, so the
//! queue drains at rate `nu * s`. Decisions are taken at the jumps of this
//! process; between jumps nothing changes. The embedded jump chain from
//! state `s` under action `a` therefore moves
//!
//! ```text
//! up   w.p. lambda / (lambda + nu*s*a)
//! down w.p. nu*s*a / (lambda + nu*s*a)
//! ```
//!
//! At the cap `s_max` an arrival is dropped and the up-mass becomes a
//! self-loop, which keeps every row stochastic.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Passive = 0,
    Active = 1,
}

impl Action {
    pub const BOTH: [Action; 2] = [Action::Passive, Action::Active];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn as_f64(self) -> f64 {
        self as usize as f64
    }

    pub fn from_index(i: usize) -> Action {
        if i == 0 {
            Action::Passive
        } else {
            Action::Active
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerContentParams {
    /// Request arrival rate.
    pub lambda: f64,
    /// Per-request delivery rate; the queue drains at `nu * s` when cached.
    pub nu: f64,
    /// Largest representable queue length.
    pub s_max: usize,
    /// Discount factor used by the discounted formulations.
    pub alpha: f64,
}

/// One row of the embedded kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepProbabilities {
    pub up: f64,
    pub down: f64,
    pub stay: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub from: usize,
    pub action: Action,
    pub to: usize,
    pub stage_cost: f64,
}

impl PerContentParams {
    pub fn new(lambda: f64, nu: f64, s_max: usize, alpha: f64) -> Result<Self> {
        let p = PerContentParams {
            lambda,
            nu,
            s_max,
            alpha,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(invalid("lambda", format!("must be finite and > 0, got {}", self.lambda)));
        }
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(invalid("nu", format!("must be finite and > 0, got {}", self.nu)));
        }
        if self.s_max < 1 {
            return Err(invalid("s_max", "must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid("alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }

    #[inline]
    pub fn num_states(&self) -> usize {
        self.s_max + 1
    }

    pub fn check_state(&self, s: usize) -> Result<()> {
        if s > self.s_max {
            Err(Error::StateOutOfRange {
                state: s,
                s_max: self.s_max,
            })
        } else {
            Ok(())
        }
    }

    /// Kernel row without range checking. `s` must be `<= s_max`.
    #[inline]
    pub fn step(&self, s: usize, a: Action) -> StepProbabilities {
        let death = self.nu * s as f64 * a.as_f64();
        let total = self.lambda + death;
        let up = self.lambda / total;
        let down = death / total;
        if s < self.s_max {
            StepProbabilities { up, down, stay: 0.0 }
        } else {
            StepProbabilities {
                up: 0.0,
                down,
                stay: up,
            }
        }
    }

    pub fn kernel_row(&self, s: usize, a: Action) -> Result<StepProbabilities> {
        self.check_state(s)?;
        Ok(self.step(s, a))
    }

    pub fn up_probability(&self, s: usize, a: Action) -> Result<f64> {
        Ok(self.kernel_row(s, a)?.up)
    }

    pub fn down_probability(&self, s: usize, a: Action) -> Result<f64> {
        Ok(self.kernel_row(s, a)?.down)
    }

    pub fn self_probability(&self, s: usize, a: Action) -> Result<f64> {
        Ok(self.kernel_row(s, a)?.stay)
    }

    /// `sum_{s'} p(s'|s,a) v(s')` for a vector `v` over states.
    #[inline]
    pub(crate) fn expect(&self, s: usize, a: Action, v: &[f64]) -> f64 {
        let p = self.step(s, a);
        let mut e = p.stay * v[s];
        if p.up > 0.0 {
            e += p.up * v[s + 1];
        }
        if p.down > 0.0 {
            e += p.down * v[s - 1];
        }
        e
    }
}

/// Lagrangian stage cost `s - w (1 - a)`: queue length, minus the subsidy
/// `w` earned for staying passive.
#[inline]
pub fn stage_cost(s: usize, a: Action, w: f64) -> f64 {
    s as f64 - w * (1.0 - a.as_f64())
}

/// Draws one embedded-chain step. Consumes exactly one uniform variate.
pub fn sample_transition<R: Rng + ?Sized>(
    params: &PerContentParams,
    s: usize,
    a: Action,
    w: f64,
    rng: &mut R,
) -> Result<Transition> {
    params.check_state(s)?;
    Ok(sample_unchecked(params, s, a, w, rng))
}

#[inline]
pub(crate) fn sample_unchecked<R: Rng + ?Sized>(
    params: &PerContentParams,
    s: usize,
    a: Action,
    w: f64,
    rng: &mut R,
) -> Transition {
    let p = params.step(s, a);
    let u: f64 = rng.gen();
    let to = if u < p.up {
        s + 1
    } else if u < p.up + p.down {
        s - 1
    } else {
        s
    };
    Transition {
        from: s,
        action: a,
        to,
        stage_cost: stage_cost(s, a, w),
    }
}
