//! What the Q⁺ learners converge to.
//!
//! For a fixed threshold `R` and multiplier `W`, the gated Q⁺ operator has a
//! unique fixed point `f(W)`: the discounted Q-values of the threshold policy
//! that is passive below `R`, active above it, and picks the better action at
//! `R`. The slow iterate settles where `f(W)` is indifferent at `R`; that
//! multiplier is the discounted threshold index returned by
//! [`discounted_threshold_index`].
//!
//! Both branches (passive or active at `R`) are affine in `W`, so every
//! quantity here comes from four tridiagonal solves.

use crate::error::{Error, Result};
use crate::mdp::{Action, PerContentParams};

/// Solves `(I - alpha P_pi) J = c` for a birth–death policy.
fn evaluate(params: &PerContentParams, policy: &[Action], cost: &[f64]) -> Vec<f64> {
    let n = params.num_states();
    let alpha = params.alpha;
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    for s in 0..n {
        let p = params.step(s, policy[s]);
        sub[s] = -alpha * p.down;
        diag[s] = 1.0 - alpha * p.stay;
        sup[s] = -alpha * p.up;
    }
    // Thomas algorithm; the matrix is strictly diagonally dominant.
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = cost[0] / diag[0];
    for s in 1..n {
        let m = diag[s] - sub[s] * c[s - 1];
        c[s] = sup[s] / m;
        d[s] = (cost[s] - sub[s] * d[s - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for s in (0..n - 1).rev() {
        x[s] = d[s] - c[s] * x[s + 1];
    }
    x
}

/// `J = base + W * slope` for one branch.
#[derive(Debug, Clone)]
struct Branch {
    base: Vec<f64>,
    slope: Vec<f64>,
}

impl Branch {
    fn new(params: &PerContentParams, threshold: usize, at_r: Action) -> Self {
        let policy: Vec<Action> = (0..params.num_states())
            .map(|s| match s.cmp(&threshold) {
                std::cmp::Ordering::Less => Action::Passive,
                std::cmp::Ordering::Greater => Action::Active,
                std::cmp::Ordering::Equal => at_r,
            })
            .collect();
        let c0: Vec<f64> = (0..params.num_states()).map(|s| s as f64).collect();
        let c1: Vec<f64> = policy.iter().map(|a| a.as_f64() - 1.0).collect();
        Branch {
            base: evaluate(params, &policy, &c0),
            slope: evaluate(params, &policy, &c1),
        }
    }

    fn values(&self, w: f64) -> Vec<f64> {
        self.base.iter().zip(&self.slope).map(|(b, k)| b + w * k).collect()
    }
}

#[derive(Debug, Clone)]
pub struct QPlusTarget {
    params: PerContentParams,
    threshold: usize,
    passive: Branch,
    active: Branch,
}

impl QPlusTarget {
    pub fn new(params: &PerContentParams, threshold: usize) -> Result<Self> {
        params.validate()?;
        if threshold > params.s_max {
            return Err(Error::ThresholdOutOfRange {
                threshold: threshold as i64,
                s_max: params.s_max,
            });
        }
        Ok(QPlusTarget {
            params: *params,
            threshold,
            passive: Branch::new(params, threshold, Action::Passive),
            active: Branch::new(params, threshold, Action::Active),
        })
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    /// Fixed-point value function `J` of the gated operator at multiplier `w`.
    pub fn value_function(&self, w: f64) -> Vec<f64> {
        let r = self.threshold;
        let jp = self.passive.values(w);
        let ja = self.active.values(w);
        if jp[r] <= ja[r] {
            jp
        } else {
            ja
        }
    }

    /// Full Q table `s - w(1-a) + alpha E[J(s')]` at the fixed point.
    pub fn q_table(&self, w: f64) -> Vec<[f64; 2]> {
        let j = self.value_function(w);
        (0..self.params.num_states())
            .map(|s| {
                let mut q = [0.0; 2];
                for a in Action::BOTH {
                    q[a.index()] = crate::mdp::stage_cost(s, a, w) + self.params.alpha * self.params.expect(s, a, &j);
                }
                q
            })
            .collect()
    }

    /// `f(w)` in the flattened `2 s + a` coordinates. Entries the threshold
    /// behaviour policy never updates are `None`.
    pub fn fixed_point(&self, w: f64) -> Vec<Option<f64>> {
        let r = self.threshold;
        let q = self.q_table(w);
        let mut out = Vec::with_capacity(2 * q.len());
        for (s, qs) in q.iter().enumerate() {
            out.push((s <= r).then_some(qs[0]));
            out.push((s >= r).then_some(qs[1]));
        }
        out
    }

    /// The multiplier at which `f(W)` is indifferent at `R`.
    pub fn equilibrium_index(&self) -> Result<f64> {
        let r = self.threshold;
        let p = &self.params;
        // On the passive branch Q(R,0) = J(R) and Q(R,1) = R + alpha E_1[J].
        let gap = |b: &Branch, w: f64| {
            let j = b.values(w);
            j[r] - (r as f64 + p.alpha * p.expect(r, Action::Active, &j))
        };
        let g0 = gap(&self.passive, 0.0);
        let g1 = gap(&self.passive, 1.0) - g0;
        if g1.abs() < 1e-14 {
            return Err(Error::DegenerateDenominator {
                threshold: r,
                denominator: g1,
            });
        }
        Ok(-g0 / g1)
    }
}

/// Discounted indifference multiplier of threshold `R`; the limit of the Q⁺
/// index iterate for that sweep.
pub fn discounted_threshold_index(params: &PerContentParams, threshold: usize) -> Result<f64> {
    QPlusTarget::new(params, threshold)?.equilibrium_index()
}

/// [`discounted_threshold_index`] for every `R = 0..=s_max`.
pub fn discounted_threshold_table(params: &PerContentParams) -> Result<Vec<f64>> {
    (0..=params.s_max).map(|r| discounted_threshold_index(params, r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::gated_value;

    /// Iterates the gated operator directly.
    fn gated_vi(p: &PerContentParams, r: usize, w: f64) -> Vec<[f64; 2]> {
        let mut q = vec![[0.0; 2]; p.num_states()];
        for _ in 0..20_000 {
            let v: Vec<f64> = (0..p.num_states())
                .map(|s| gated_value(|x, a| q[x][a.index()], r, s))
                .collect();
            let mut next = q.clone();
            for s in 0..p.num_states() {
                for a in Action::BOTH {
                    next[s][a.index()] = crate::mdp::stage_cost(s, a, w) + p.alpha * p.expect(s, a, &v);
                }
            }
            q = next;
        }
        q
    }

    #[test]
    fn fixed_point_matches_gated_iteration() {
        let p = PerContentParams::new(1.0, 1.0, 5, 0.9).unwrap();
        for r in 0..=5 {
            let t = QPlusTarget::new(&p, r).unwrap();
            for w in [-1.0, 0.0, 2.5, 9.0] {
                let a = t.q_table(w);
                let b = gated_vi(&p, r, w);
                for s in 0..=5 {
                    for k in 0..2 {
                        assert!((a[s][k] - b[s][k]).abs() < 1e-8, "r={r} w={w} s={s}");
                    }
                }
            }
        }
    }

    #[test]
    fn equilibrium_is_indifferent_on_both_branches() {
        let p = PerContentParams::new(2.0, 0.7, 8, 0.98).unwrap();
        for r in 0..=8 {
            let t = QPlusTarget::new(&p, r).unwrap();
            let w = t.equilibrium_index().unwrap();
            let q = t.q_table(w);
            assert!((q[r][0] - q[r][1]).abs() < 1e-8 * (1.0 + q[r][0].abs()));
            let ja = t.active.values(w);
            let jp = t.passive.values(w);
            for s in 0..=8 {
                assert!((ja[s] - jp[s]).abs() < 1e-8 * (1.0 + ja[s].abs()));
            }
        }
    }

    #[test]
    fn off_policy_coordinates_are_masked() {
        let p = PerContentParams::new(1.0, 1.0, 4, 0.98).unwrap();
        let f = QPlusTarget::new(&p, 2).unwrap().fixed_point(1.0);
        let defined: Vec<bool> = f.iter().map(Option::is_some).collect();
        assert_eq!(
            defined,
            vec![true, false, true, false, true, true, false, true, false, true]
        );
    }
}
