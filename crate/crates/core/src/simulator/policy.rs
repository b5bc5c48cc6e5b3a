use std::collections::BTreeSet;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::{Event, SystemConfig, SystemState};
use crate::error::{Error, Result};
use crate::rng::{self, Stream};
use crate::whittle::whittle_table;

/// Cache policies the simulator understands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PolicyKind {
    /// Top-`B` by the closed-form index of each content's current state.
    WhittleOracle,
    /// Top-`B` by supplied per-content index tables (`tables[m][s]`).
    WhittleLearned { tables: Vec<Vec<f64>> },
    /// Most recently requested contents.
    Lru,
    /// Most frequently requested contents so far.
    Lfu,
    /// A fresh uniform `B`-subset at every decision epoch.
    Random { seed: u64 },
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::WhittleOracle => "whittle-oracle",
            PolicyKind::WhittleLearned { .. } => "whittle-learned",
            PolicyKind::Lru => "lru",
            PolicyKind::Lfu => "lfu",
            PolicyKind::Random { .. } => "random",
        }
    }
}

/// Runtime state of a policy during one episode.
#[derive(Debug, Clone)]
pub enum CachePolicy {
    Index { tables: Vec<Vec<f64>> },
    Lru { last_request: Vec<f64> },
    Lfu { requests: Vec<u64> },
    Random { rng: Stream, contents: usize },
}

impl CachePolicy {
    pub fn new(kind: &PolicyKind, config: &SystemConfig, episode_seed: u64) -> Result<Self> {
        let m = config.contents.len();
        Ok(match kind {
            PolicyKind::WhittleOracle => {
                let tables = config
                    .per_content_params()?
                    .iter()
                    .map(|p| whittle_table(p).map(|t| t.indices))
                    .collect::<Result<Vec<_>>>()?;
                CachePolicy::Index { tables }
            }
            PolicyKind::WhittleLearned { tables } => {
                if tables.len() != m {
                    return Err(Error::InvalidConfig(format!(
                        "learned index tables cover {} contents, expected {m}",
                        tables.len()
                    )));
                }
                if let Some(i) = tables.iter().position(|t| t.len() != config.s_max + 1) {
                    return Err(Error::InvalidConfig(format!(
                        "learned index table for content {i} has {} states, expected {}",
                        tables[i].len(),
                        config.s_max + 1
                    )));
                }
                CachePolicy::Index { tables: tables.clone() }
            }
            PolicyKind::Lru => CachePolicy::Lru {
                last_request: vec![f64::NEG_INFINITY; m],
            },
            PolicyKind::Lfu => CachePolicy::Lfu { requests: vec![0; m] },
            PolicyKind::Random { seed } => CachePolicy::Random {
                rng: rng::substream(episode_seed ^ seed.rotate_left(32), 1),
                contents: m,
            },
        })
    }

    /// Feeds a jump to history-based policies.
    pub fn observe(&mut self, event: Event, clock: f64) {
        if let Event::Arrival(m) = event {
            match self {
                CachePolicy::Lru { last_request } => last_request[m] = clock,
                CachePolicy::Lfu { requests } => requests[m] += 1,
                _ => {}
            }
        }
    }

    pub fn select(&mut self, state: &SystemState, capacity: usize) -> BTreeSet<usize> {
        select_cache(self, state, capacity)
    }
}

/// Indices of the `b` largest scores; ties go to the smaller index.
pub fn top_b(scores: &[f64], b: usize) -> BTreeSet<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));
    order.into_iter().take(b).collect()
}

/// The cache the policy holds in `state`, of size `min(B, M)`.
pub fn select_cache(policy: &mut CachePolicy, state: &SystemState, capacity: usize) -> BTreeSet<usize> {
    match policy {
        CachePolicy::Index { tables } => {
            let scores: Vec<f64> = tables.iter().zip(&state.queues).map(|(t, &s)| t[s]).collect();
            top_b(&scores, capacity)
        }
        CachePolicy::Lru { last_request } => top_b(last_request, capacity),
        CachePolicy::Lfu { requests } => {
            let scores: Vec<f64> = requests.iter().map(|&c| c as f64).collect();
            top_b(&scores, capacity)
        }
        CachePolicy::Random { rng, contents } => {
            let k = capacity.min(*contents);
            index::sample(rng, *contents, k).into_iter().collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::ContentSpec;

    fn config(m: usize, b: usize) -> SystemConfig {
        SystemConfig {
            contents: vec![ContentSpec { lambda: 1.0, nu: 2.0 }; m],
            s_max: 4,
            capacity: b,
            alpha: 0.98,
            initial_queues: None,
        }
    }

    #[test]
    fn ties_go_to_lower_ids() {
        assert_eq!(top_b(&[2.1, 2.1, 0.5], 1), BTreeSet::from([0]));
        let c = config(5, 2);
        let st = SystemState::new(&c);
        let mut p = CachePolicy::new(&PolicyKind::WhittleOracle, &c, 0).unwrap();
        assert_eq!(p.select(&st, 2), BTreeSet::from([0, 1]));
    }

    #[test]
    fn unconstrained_caches_everything() {
        let c = config(3, 5);
        let st = SystemState::new(&c);
        for k in [PolicyKind::WhittleOracle, PolicyKind::Lru, PolicyKind::Lfu, PolicyKind::Random { seed: 1 }] {
            let mut p = CachePolicy::new(&k, &c, 7).unwrap();
            assert_eq!(p.select(&st, 5), BTreeSet::from([0, 1, 2]));
        }
    }

    #[test]
    fn learned_tables_are_checked() {
        let c = config(2, 1);
        let short = PolicyKind::WhittleLearned { tables: vec![vec![0.0; 5]] };
        assert!(CachePolicy::new(&short, &c, 0).is_err());
        let ragged = PolicyKind::WhittleLearned {
            tables: vec![vec![0.0; 5], vec![0.0; 3]],
        };
        assert!(CachePolicy::new(&ragged, &c, 0).is_err());
    }

    #[test]
    fn lru_and_lfu_follow_history() {
        let c = config(3, 1);
        let st = SystemState::new(&c);
        let mut lru = CachePolicy::new(&PolicyKind::Lru, &c, 0).unwrap();
        let mut lfu = CachePolicy::new(&PolicyKind::Lfu, &c, 0).unwrap();
        for (t, m) in [(1.0, 2), (2.0, 2), (3.0, 1)] {
            lru.observe(Event::Arrival(m), t);
            lfu.observe(Event::Arrival(m), t);
        }
        assert_eq!(lru.select(&st, 1), BTreeSet::from([1]));
        assert_eq!(lfu.select(&st, 1), BTreeSet::from([2]));
    }

    #[test]
    fn index_policy_prefers_longer_queues() {
        let c = config(3, 1);
        let mut st = SystemState::new(&c);
        st.queues = vec![0, 2, 1];
        let mut p = CachePolicy::new(&PolicyKind::WhittleOracle, &c, 0).unwrap();
        let tables = match &p {
            CachePolicy::Index { tables } => tables.clone(),
            _ => unreachable!(),
        };
        let best = (0..3).max_by(|&i, &j| tables[i][st.queues[i]].total_cmp(&tables[j][st.queues[j]]).then(j.cmp(&i)));
        assert_eq!(p.select(&st, 1), BTreeSet::from([best.unwrap()]));
    }
}
