//! Independent reference computations shared by the integration tests.
//!
//! Everything here builds explicit matrices and hands them to nalgebra, so
//! none of it reuses the crate's own product-form or tridiagonal shortcuts.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use whittle_core::{rng, Action, PerContentParams};

/// Dense embedded-chain kernel under `policy`.
pub fn kernel(p: &PerContentParams, policy: &[Action]) -> DMatrix<f64> {
    let n = p.s_max + 1;
    let mut k = DMatrix::zeros(n, n);
    for s in 0..n {
        let a = policy[s].as_f64();
        let death = p.nu * s as f64 * a;
        let total = p.lambda + death;
        if s < p.s_max {
            k[(s, s + 1)] += p.lambda / total;
        } else {
            k[(s, s)] += p.lambda / total;
        }
        if s > 0 {
            k[(s, s - 1)] += death / total;
        }
    }
    k
}

/// Passive at `s <= R`, active above (`R = -1` is all active).
pub fn threshold_policy(p: &PerContentParams, r: i64) -> Vec<Action> {
    (0..=p.s_max)
        .map(|s| if (s as i64) <= r { Action::Passive } else { Action::Active })
        .collect()
}

/// Stationary law of the threshold chain restricted to its recurrent class
/// `{max(R,0), ..., s_max}`; states below carry zero mass.
pub fn embedded_stationary(p: &PerContentParams, r: i64) -> Vec<f64> {
    let k = kernel(p, &threshold_policy(p, r));
    let start = r.max(0) as usize;
    let n = p.s_max + 1 - start;
    let sub = k.view((start, start), (n, n)).into_owned();
    // (P^T - I) pi = 0 with one row replaced by normalization.
    let mut a = sub.transpose() - DMatrix::identity(n, n);
    let mut b = DVector::zeros(n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    b[n - 1] = 1.0;
    let pi = a.lu().solve(&b).expect("balance system is nonsingular");
    let mut out = vec![0.0; start];
    out.extend(pi.iter());
    out
}

/// Time-stationary law of the always-cached continuous-time queue with
/// arrivals dropped at the cap, from the generator's global balance.
pub fn ctmc_always_active(lambda: f64, nu: f64, s_max: usize) -> Vec<f64> {
    let n = s_max + 1;
    let mut q = DMatrix::zeros(n, n);
    for s in 0..n {
        if s < s_max {
            q[(s, s + 1)] = lambda;
        }
        if s > 0 {
            q[(s, s - 1)] = nu * s as f64;
        }
        let out: f64 = (0..n).filter(|&j| j != s).map(|j| q[(s, j)]).sum();
        q[(s, s)] = -out;
    }
    let mut a = q.transpose();
    let mut b = DVector::zeros(n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    b[n - 1] = 1.0;
    a.lu().solve(&b).expect("generator system is nonsingular").iter().copied().collect()
}

/// Discounted value of a stationary policy by a dense solve of
/// `(I - alpha P) J = c`.
pub fn policy_value(p: &PerContentParams, policy: &[Action], w: f64) -> Vec<f64> {
    let n = p.s_max + 1;
    let k = kernel(p, policy);
    let a = DMatrix::identity(n, n) - k * p.alpha;
    let c = DVector::from_iterator(n, (0..n).map(|s| s as f64 - w * (1.0 - policy[s].as_f64())));
    a.lu().solve(&c).expect("discounted system is nonsingular").iter().copied().collect()
}

/// Random instances with `lambda, nu` uniform on `[0.1, 20]` and `s_max`
/// uniform on `1..=s_max_hi`.
pub fn random_instances(seed: u64, count: usize, s_max_hi: usize, alpha: f64) -> Vec<PerContentParams> {
    let mut g = rng::stream(seed);
    (0..count)
        .map(|_| {
            let lambda = g.gen_range(0.1..=20.0);
            let nu = g.gen_range(0.1..=20.0);
            let s_max = g.gen_range(1..=s_max_hi);
            PerContentParams::new(lambda, nu, s_max, alpha).unwrap()
        })
        .collect()
}

pub fn sup_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Elementwise median over runs.
pub fn median(runs: &[Vec<f64>]) -> Vec<f64> {
    let n = runs[0].len();
    (0..n)
        .map(|i| {
            let mut v: Vec<f64> = runs.iter().map(|r| r[i]).collect();
            v.sort_by(|a, b| a.total_cmp(b));
            let k = v.len();
            0.5 * (v[k / 2] + v[(k - 1) / 2])
        })
        .collect()
}

/// `|x - t| / max(1, |t|)`.
pub fn relative_error(x: f64, t: f64) -> f64 {
    (x - t).abs() / t.abs().max(1.0)
}
