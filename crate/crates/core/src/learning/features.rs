//! Feature maps `phi(s, a)` for the linear Q approximation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::Action;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FeatureSpec {
    /// Indicator of `(s, a)`, coordinate `2 s + a`. Reduces the linear
    /// learner to the tabular one.
    Onehot,
    /// `d / 2` Gaussian bumps in `s / s_max` per action. `bandwidth` is the
    /// standard deviation in normalized-state units; `None` uses the center
    /// spacing.
    GaussianRbf { d: usize, bandwidth: Option<f64> },
}

/// Precomputed feature vectors for every state–action pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub spec: FeatureSpec,
    dim: usize,
    s_max: usize,
    // row-major: (2 s + a) * dim
    table: Vec<f64>,
}

impl FeatureMap {
    pub fn new(spec: FeatureSpec, s_max: usize) -> Result<Self> {
        let n = 2 * (s_max + 1);
        let (dim, table) = match spec {
            FeatureSpec::Onehot => {
                let mut t = vec![0.0; n * n];
                for i in 0..n {
                    t[i * n + i] = 1.0;
                }
                (n, t)
            }
            FeatureSpec::GaussianRbf { d, bandwidth } => {
                if d < 4 || d % 2 != 0 {
                    return Err(Error::InvalidFeatures(format!(
                        "gaussian-rbf needs an even dimension of at least 4, got {d}"
                    )));
                }
                let per_action = d / 2;
                let spacing = 1.0 / (per_action - 1) as f64;
                let sigma = bandwidth.unwrap_or(spacing);
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidFeatures(format!("bandwidth must be positive, got {sigma}")));
                }
                let mut t = vec![0.0; n * d];
                for s in 0..=s_max {
                    let x = s as f64 / s_max as f64;
                    for a in 0..2 {
                        let row = &mut t[(2 * s + a) * d..(2 * s + a + 1) * d];
                        for k in 0..per_action {
                            let z = (x - k as f64 * spacing) / sigma;
                            row[a * per_action + k] = (-0.5 * z * z).exp();
                        }
                    }
                }
                let max_norm = t
                    .chunks(d)
                    .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
                    .fold(0.0, f64::max);
                for x in &mut t {
                    *x /= max_norm;
                }
                (d, t)
            }
        };
        let map = FeatureMap {
            spec,
            dim,
            s_max,
            table,
        };
        debug_assert!(map.max_norm() <= 1.0 + 1e-12);
        Ok(map)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn s_max(&self) -> usize {
        self.s_max
    }

    #[inline]
    pub fn phi(&self, s: usize, a: Action) -> &[f64] {
        let i = 2 * s + a.index();
        &self.table[i * self.dim..(i + 1) * self.dim]
    }

    pub fn features(&self, s: usize, a: Action) -> Result<Vec<f64>> {
        if s > self.s_max {
            return Err(Error::StateOutOfRange {
                state: s,
                s_max: self.s_max,
            });
        }
        Ok(self.phi(s, a).to_vec())
    }

    #[inline]
    pub fn value(&self, theta: &[f64], s: usize, a: Action) -> f64 {
        self.phi(s, a).iter().zip(theta).map(|(p, t)| p * t).sum()
    }

    pub fn max_norm(&self) -> f64 {
        self.table
            .chunks(self.dim)
            .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn onehot_basis() {
        let f = FeatureMap::new(FeatureSpec::Onehot, 4).unwrap();
        assert_eq!(f.dim(), 10);
        let e0 = f.features(0, Action::Passive).unwrap();
        assert_eq!(e0[0], 1.0);
        assert!(e0[1..].iter().all(|&x| x == 0.0));
        // the 10 vectors are the identity columns
        for s in 0..=4 {
            for a in Action::BOTH {
                let v = f.phi(s, a);
                assert_eq!(v.iter().filter(|&&x| x == 1.0).count(), 1);
                assert_eq!(v[2 * s + a.index()], 1.0);
            }
        }
    }

    #[test]
    fn rbf_norm_bounded_on_whole_grid() {
        for s_max in [1, 5, 10, 37] {
            let f = FeatureMap::new(FeatureSpec::GaussianRbf { d: 20, bandwidth: None }, s_max).unwrap();
            assert_eq!(f.dim(), 20);
            for s in 0..=s_max {
                for a in Action::BOTH {
                    let n: f64 = f.phi(s, a).iter().map(|x| x * x).sum::<f64>().sqrt();
                    assert!(n <= 1.0 + 1e-12);
                }
            }
            assert!((f.max_norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rbf_actions_use_disjoint_blocks() {
        let f = FeatureMap::new(FeatureSpec::GaussianRbf { d: 8, bandwidth: Some(0.2) }, 6).unwrap();
        assert!(f.phi(3, Action::Passive)[4..].iter().all(|&x| x == 0.0));
        assert!(f.phi(3, Action::Active)[..4].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn invalid_specs() {
        assert!(FeatureMap::new(FeatureSpec::GaussianRbf { d: 3, bandwidth: None }, 5).is_err());
        assert!(FeatureMap::new(FeatureSpec::GaussianRbf { d: 8, bandwidth: Some(-1.0) }, 5).is_err());
        let f = FeatureMap::new(FeatureSpec::Onehot, 3).unwrap();
        assert!(f.features(4, Action::Active).is_err());
    }
}
