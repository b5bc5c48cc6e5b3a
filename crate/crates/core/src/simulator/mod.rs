//! Multi-content continuous-time cache simulator.
//!
//! Each content `m` has a queue of outstanding requests. Requests arrive at
//! rate `lambda_m` (dropped at the cap `s_max`) and, while `m` is cached,
//! are served at total rate `nu_m S_m`. The next event is drawn from the
//! competing exponential clocks; the cache is re-selected at every jump and
//! never holds more than `B` contents.
//!
//! Costs are exact time integrals of `sum_m S_m` over the piecewise-constant
//! path. This is the only place in the crate that weights states by time;
//! the index and learning modules work with the embedded jump chain.

mod compare;
mod policy;

pub use compare::{run_comparison, run_comparison_with, Aggregate, ComparisonRow, ComparisonTable};
pub use policy::{select_cache, CachePolicy, PolicyKind};

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::PerContentParams;
use crate::rng::{self, Stream};
use crate::workload::{TraceEvent, Workload};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContentSpec {
    pub lambda: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub contents: Vec<ContentSpec>,
    /// Queue cap shared by all contents.
    pub s_max: usize,
    /// Cache capacity `B`.
    pub capacity: usize,
    /// Discount factor attached to the per-content models. The closed-form
    /// index does not use it; learned tables may.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Initial queue lengths; all zero when absent.
    #[serde(default)]
    pub initial_queues: Option<Vec<usize>>,
}

fn default_alpha() -> f64 {
    0.98
}

impl SystemConfig {
    /// One content per workload rate, all served at rate `nu`.
    pub fn from_workload(workload: &Workload, nu: f64, s_max: usize, capacity: usize) -> Self {
        SystemConfig {
            contents: workload.rates.iter().map(|&lambda| ContentSpec { lambda, nu }).collect(),
            s_max,
            capacity,
            alpha: default_alpha(),
            initial_queues: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.contents.is_empty() {
            return bad("no contents".into());
        }
        if self.s_max == 0 {
            return bad("s_max must be at least 1".into());
        }
        for (m, c) in self.contents.iter().enumerate() {
            if !(c.lambda >= 0.0 && c.lambda.is_finite()) {
                return bad(format!("content {m}: lambda must be finite and nonnegative"));
            }
            if !(c.nu > 0.0 && c.nu.is_finite()) {
                return bad(format!("content {m}: nu must be positive"));
            }
        }
        if let Some(q) = &self.initial_queues {
            if q.len() != self.contents.len() {
                return bad(format!("initial_queues has {} entries for {} contents", q.len(), self.contents.len()));
            }
            if let Some(m) = q.iter().position(|&s| s > self.s_max) {
                return bad(format!("content {m}: initial queue exceeds s_max"));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)".into());
        }
        Ok(())
    }

    /// Per-content MDP parameters. Contents with `lambda = 0` get a tiny
    /// positive rate so the index machinery stays defined.
    pub fn per_content_params(&self) -> Result<Vec<PerContentParams>> {
        self.contents
            .iter()
            .map(|c| PerContentParams::new(c.lambda.max(1e-12), c.nu, self.s_max, self.alpha))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub queues: Vec<usize>,
    pub cache: BTreeSet<usize>,
    pub clock: f64,
    /// `integral_0^clock sum_m S_m(t) dt`.
    pub cost_integral: f64,
    /// `occupancy[m][s]`: time content `m` has spent in state `s`.
    pub occupancy: Vec<Vec<f64>>,
}

impl SystemState {
    pub fn new(config: &SystemConfig) -> Self {
        let queues = config
            .initial_queues
            .clone()
            .unwrap_or_else(|| vec![0; config.contents.len()]);
        SystemState {
            queues,
            cache: BTreeSet::new(),
            clock: 0.0,
            cost_integral: 0.0,
            occupancy: vec![vec![0.0; config.s_max + 1]; config.contents.len()],
        }
    }

    pub fn total_queue(&self) -> usize {
        self.queues.iter().sum()
    }

    /// Holds the current state for `dt` time units.
    fn advance(&mut self, dt: f64) {
        self.cost_integral += dt * self.total_queue() as f64;
        for (occ, &s) in self.occupancy.iter_mut().zip(&self.queues) {
            occ[s] += dt;
        }
        self.clock += dt;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "content", rename_all = "kebab-case")]
pub enum Event {
    Arrival(usize),
    Departure(usize),
}

fn arrival_rate(config: &SystemConfig, state: &SystemState, m: usize) -> f64 {
    if state.queues[m] < config.s_max {
        config.contents[m].lambda
    } else {
        0.0
    }
}

fn departure_rate(config: &SystemConfig, state: &SystemState, m: usize) -> f64 {
    if state.cache.contains(&m) {
        config.contents[m].nu * state.queues[m] as f64
    } else {
        0.0
    }
}

/// Samples the next jump of the competing clocks, integrates the cost over
/// the holding time and applies the jump.
pub fn next_event(config: &SystemConfig, state: &mut SystemState, rng: &mut Stream) -> Result<(f64, Event)> {
    let (dt, event) = sample_event(config, state, rng)?;
    state.advance(dt);
    apply(state, event);
    Ok((dt, event))
}

/// Holding time and next jump from the current state, without applying it.
pub fn sample_event(config: &SystemConfig, state: &SystemState, rng: &mut Stream) -> Result<(f64, Event)> {
    let m_count = config.contents.len();
    let arrivals: f64 = (0..m_count).map(|m| arrival_rate(config, state, m)).sum();
    let departures: f64 = state.cache.iter().map(|&m| departure_rate(config, state, m)).sum();
    let total = arrivals + departures;
    if total <= 0.0 {
        return Err(Error::DeadSystem);
    }
    let e: f64 = Exp1.sample(rng);
    let dt = e / total;
    let mut u = rng.gen::<f64>() * total;
    let mut event = None;
    for m in 0..m_count {
        let r = arrival_rate(config, state, m);
        if r > 0.0 {
            if u < r {
                event = Some(Event::Arrival(m));
                break;
            }
            u -= r;
        }
    }
    if event.is_none() {
        for &m in &state.cache {
            let r = departure_rate(config, state, m);
            if r > 0.0 {
                if u < r {
                    event = Some(Event::Departure(m));
                    break;
                }
                u -= r;
            }
        }
    }
    // Rounding can leave u marginally above the last rate; fall back to the
    // last event with positive rate.
    let event = event.unwrap_or_else(|| last_positive_event(config, state));
    Ok((dt, event))
}

fn last_positive_event(config: &SystemConfig, state: &SystemState) -> Event {
    if let Some(&m) = state.cache.iter().rev().find(|&&m| departure_rate(config, state, m) > 0.0) {
        return Event::Departure(m);
    }
    let m = (0..config.contents.len())
        .rev()
        .find(|&m| arrival_rate(config, state, m) > 0.0)
        .expect("positive total rate");
    Event::Arrival(m)
}

fn apply(state: &mut SystemState, event: Event) {
    match event {
        Event::Arrival(m) => state.queues[m] += 1,
        Event::Departure(m) => state.queues[m] -= 1,
    }
}

/// Where arrivals come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ArrivalProcess {
    Poisson,
    /// Replays request timestamps, shifted so the first request is at time
    /// 0. Content ids index `SystemConfig::contents`; service completions
    /// stay exponential.
    Replay(Vec<TraceEvent>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub horizon: f64,
    pub accumulated_cost: f64,
    pub average_cost: f64,
    pub events: u64,
    pub arrivals: u64,
    pub departures: u64,
    /// Replayed requests lost at the queue cap.
    pub dropped_arrivals: u64,
    /// Largest cache observed at any decision epoch.
    pub max_cache_size: usize,
    /// Per-content time fraction in each state.
    pub occupancy: Vec<Vec<f64>>,
}

/// Simulates `[0, horizon]` under `policy`. The event stream for `seed` is
/// independent of the policy's own randomness.
pub fn run_episode(config: &SystemConfig, horizon: f64, policy: &PolicyKind, seed: u64) -> Result<Metrics> {
    run_episode_with(config, horizon, policy, seed, &ArrivalProcess::Poisson)
}

pub fn run_episode_with(
    config: &SystemConfig,
    horizon: f64,
    policy: &PolicyKind,
    seed: u64,
    arrivals: &ArrivalProcess,
) -> Result<Metrics> {
    config.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidConfig("horizon must be positive".into()));
    }
    let mut cache_policy = CachePolicy::new(policy, config, seed)?;
    let mut rng = rng::substream(seed, 0);
    let mut state = SystemState::new(config);
    let mut metrics = Metrics {
        horizon,
        accumulated_cost: 0.0,
        average_cost: 0.0,
        events: 0,
        arrivals: 0,
        departures: 0,
        dropped_arrivals: 0,
        max_cache_size: 0,
        occupancy: Vec::new(),
    };
    let reselect = |state: &mut SystemState, metrics: &mut Metrics, cp: &mut CachePolicy| {
        state.cache = cp.select(state, config.capacity);
        assert!(state.cache.len() <= config.capacity, "cache capacity exceeded");
        metrics.max_cache_size = metrics.max_cache_size.max(state.cache.len());
    };
    reselect(&mut state, &mut metrics, &mut cache_policy);

    match arrivals {
        ArrivalProcess::Poisson => loop {
            match sample_event(config, &state, &mut rng) {
                Ok((dt, event)) if state.clock + dt <= horizon => {
                    state.advance(dt);
                    apply(&mut state, event);
                    record(&mut metrics, event);
                    cache_policy.observe(event, state.clock);
                    reselect(&mut state, &mut metrics, &mut cache_policy);
                }
                Ok(_) | Err(Error::DeadSystem) => {
                    let rest = horizon - state.clock;
                    state.advance(rest);
                    break;
                }
                Err(e) => return Err(e),
            }
        },
        ArrivalProcess::Replay(trace) => {
            let t0 = trace.first().map_or(0.0, |e| e.timestamp);
            let n = config.contents.len();
            let mut idx = 0;
            loop {
                let next_arrival = trace.get(idx).map(|e| e.timestamp - t0);
                let departures: f64 = state.cache.iter().map(|&m| departure_rate(config, &state, m)).sum();
                let dt_dep = if departures > 0.0 {
                    let e: f64 = Exp1.sample(&mut rng);
                    e / departures
                } else {
                    f64::INFINITY
                };
                let t_dep = state.clock + dt_dep;
                let t_arr = next_arrival.unwrap_or(f64::INFINITY);
                let t_next = t_dep.min(t_arr);
                if t_next > horizon {
                    let rest = horizon - state.clock;
                    state.advance(rest);
                    break;
                }
                state.advance(t_next - state.clock);
                let event = if t_arr <= t_dep {
                    let id = trace[idx].content_id as usize;
                    idx += 1;
                    if id >= n {
                        return Err(Error::InvalidConfig(format!("trace references content {id} but only {n} are configured")));
                    }
                    if state.queues[id] >= config.s_max {
                        metrics.dropped_arrivals += 1;
                        cache_policy.observe(Event::Arrival(id), state.clock);
                        continue;
                    }
                    Event::Arrival(id)
                } else {
                    let mut u = rng.gen::<f64>() * departures;
                    let mut pick = None;
                    for &m in &state.cache {
                        let r = departure_rate(config, &state, m);
                        if r > 0.0 {
                            pick = Some(m);
                            if u < r {
                                break;
                            }
                            u -= r;
                        }
                    }
                    Event::Departure(pick.expect("positive departure rate"))
                };
                apply(&mut state, event);
                record(&mut metrics, event);
                cache_policy.observe(event, state.clock);
                reselect(&mut state, &mut metrics, &mut cache_policy);
            }
        }
    }

    metrics.accumulated_cost = state.cost_integral;
    metrics.average_cost = state.cost_integral / horizon;
    metrics.occupancy = state
        .occupancy
        .iter()
        .map(|o| o.iter().map(|t| t / horizon).collect())
        .collect();
    Ok(metrics)
}

fn record(metrics: &mut Metrics, event: Event) {
    metrics.events += 1;
    match event {
        Event::Arrival(_) => metrics.arrivals += 1,
        Event::Departure(_) => metrics.departures += 1,
    }
}
