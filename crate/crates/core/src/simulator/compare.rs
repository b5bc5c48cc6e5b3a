use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::{run_episode_with, ArrivalProcess, Metrics, PolicyKind, SystemConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub policy: String,
    pub seed: u64,
    pub accumulated_cost: f64,
    pub average_cost: f64,
    pub events: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub policy: String,
    pub seeds: usize,
    pub mean_accumulated_cost: f64,
    /// Standard error of the mean; zero for a single seed.
    pub std_error: f64,
    pub mean_average_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    /// Policy-major, seeds in the given order.
    pub rows: Vec<ComparisonRow>,
    pub aggregates: Vec<Aggregate>,
    /// Full episode metrics, aligned with `rows`.
    pub episodes: Vec<Metrics>,
}

/// Runs every (policy, seed) pair. Work is spread over the rayon pool; the
/// output order only depends on the inputs.
pub fn run_comparison(
    config: &SystemConfig,
    horizon: f64,
    policies: &[PolicyKind],
    seeds: &[u64],
) -> Result<ComparisonTable> {
    run_comparison_with(config, horizon, policies, seeds, &ArrivalProcess::Poisson)
}

/// As [`run_comparison`] with an explicit arrival process shared by every
/// episode.
pub fn run_comparison_with(
    config: &SystemConfig,
    horizon: f64,
    policies: &[PolicyKind],
    seeds: &[u64],
    arrivals: &ArrivalProcess,
) -> Result<ComparisonTable> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("at least one seed is required".into()));
    }
    config.validate()?;
    let jobs: Vec<(usize, u64)> = (0..policies.len())
        .flat_map(|p| seeds.iter().map(move |&s| (p, s)))
        .collect();
    let (rows, episodes): (Vec<ComparisonRow>, Vec<Metrics>) = jobs
        .par_iter()
        .map(|&(p, seed)| {
            let m = run_episode_with(config, horizon, &policies[p], seed, arrivals)?;
            let row = ComparisonRow {
                policy: policies[p].name().to_string(),
                seed,
                accumulated_cost: m.accumulated_cost,
                average_cost: m.average_cost,
                events: m.events,
            };
            Ok((row, m))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    let aggregates = rows
        .chunks(seeds.len())
        .map(|chunk| {
            let n = chunk.len() as f64;
            let mean = chunk.iter().map(|r| r.accumulated_cost).sum::<f64>() / n;
            let var = if chunk.len() > 1 {
                chunk.iter().map(|r| (r.accumulated_cost - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            Aggregate {
                policy: chunk[0].policy.clone(),
                seeds: chunk.len(),
                mean_accumulated_cost: mean,
                std_error: (var / n).sqrt(),
                mean_average_cost: chunk.iter().map(|r| r.average_cost).sum::<f64>() / n,
            }
        })
        .collect();
    Ok(ComparisonTable {
        rows,
        aggregates,
        episodes,
    })
}

impl ComparisonTable {
    /// Data rows, then one `mean` and one `stderr` row per policy (the
    /// `seed` column holds the label).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "policy,seed,accumulated_cost,average_cost,events")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.policy, r.seed, r.accumulated_cost, r.average_cost, r.events
            )?;
        }
        for a in &self.aggregates {
            writeln!(out, "{},mean,{},{},", a.policy, a.mean_accumulated_cost, a.mean_average_cost)?;
            writeln!(out, "{},stderr,{},,", a.policy, a.std_error)?;
        }
        Ok(())
    }

    pub fn aggregate(&self, policy: &str) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.policy == policy)
    }
}
