use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use whittle_core::learning::{
    lfa_run_observed, lyapunov_record, q_whittle_run_observed, qplus_whittle_run_observed, LearnedIndices,
    QPlusTarget, StepView,
};
use whittle_core::rng;
use whittle_core::simulator::{run_comparison_with, ArrivalProcess, Metrics, PolicyKind};
use whittle_core::whittle::index::is_non_decreasing;
use whittle_core::whittle::whittle_index_closed_form;
use whittle_core::workload::{generate_poisson_trace, write_trace, TraceEvent, Workload, WorkloadSource};
use whittle_core::{Error, PerContentParams};

use crate::config::{Algorithm, PolicyName, Resolved};
use crate::{emit, Failure, WorkloadMode};

const INDEX_COLUMNS: &str = "content_id,R,whittle_index,indexable";

fn index_rows(out: &mut String, label: u64, values: &[f64], indexable: Option<bool>) {
    let flag = indexable.map_or(String::new(), |b| b.to_string());
    for (r, w) in values.iter().enumerate() {
        writeln!(out, "{label},{r},{w},{flag}").unwrap();
    }
}

/// A degenerate closed-form denominator stops the table. Rows computed so
/// far are still written, the failing content without an `indexable` flag.
pub fn index(cfg: &Resolved, out: Option<&Path>) -> Result<(), Failure> {
    let mut text = cfg.header();
    text.push_str(INDEX_COLUMNS);
    text.push('\n');
    for (p, &label) in cfg.params().iter().zip(&cfg.labels) {
        let mut values = Vec::with_capacity(p.s_max + 1);
        for r in 0..=p.s_max {
            match whittle_index_closed_form(p, r) {
                Ok(w) => values.push(w),
                Err(e @ Error::DegenerateDenominator { .. }) => {
                    index_rows(&mut text, label, &values, None);
                    emit(out, text.as_bytes())?;
                    return Err(Failure::usage(format!("content {label}: {e}; output is partial")));
                }
                Err(e) => return Err(e.into()),
            }
        }
        index_rows(&mut text, label, &values, Some(is_non_decreasing(&values)));
    }
    emit(out, text.as_bytes())
}

struct Learned {
    indices: LearnedIndices,
    trace: String,
}

fn learn_one(cfg: &Resolved, m: usize, p: &PerContentParams, label: u64) -> Result<Learned, Failure> {
    let l = &cfg.learning;
    let t = l.epochs_per_threshold;
    let mut g = rng::substream(cfg.master_seed, m as u64);
    let targets = match l.algorithm {
        Algorithm::QWhittle => Vec::new(),
        _ => (0..=p.s_max)
            .map(|r| {
                let target = QPlusTarget::new(p, r)?;
                let w_star = target.equilibrium_index()?;
                Ok((target, w_star))
            })
            .collect::<Result<Vec<_>, Error>>()?,
    };
    let tabular_dim = 2 * (p.s_max + 1);
    let mut trace = String::new();
    let mut failure = None;
    let mut observe = |v: &StepView<'_>, sweep_len: u64| {
        if v.n % l.trace_stride != 0 && v.n != sweep_len {
            return;
        }
        let lyapunov = match targets.get(v.threshold) {
            Some((target, w_star)) if v.weights.len() == tabular_dim => {
                let f = target.fixed_point(v.w);
                match lyapunov_record(v, Some(&f), *w_star) {
                    Ok(rec) => rec.lyapunov.to_string(),
                    Err(e) => {
                        failure.get_or_insert(e);
                        String::new()
                    }
                }
            }
            _ => String::new(),
        };
        writeln!(
            trace,
            "{label},{},{},{},{},{},{lyapunov}",
            v.n, v.threshold, v.w, v.gamma, v.eta
        )
        .unwrap();
    };
    let indices = match l.algorithm {
        Algorithm::QPlusWhittle => qplus_whittle_run_observed(p, &l.schedule, t, &mut g, |v| observe(v, t))?.0,
        Algorithm::QPlusWhittleLfa => {
            lfa_run_observed(p, &l.schedule, l.features, t, &mut g, |v| observe(v, t))?.0
        }
        Algorithm::QWhittle => {
            let total = t * (p.s_max as u64 + 1);
            q_whittle_run_observed(p, &l.schedule, total, &l.q_whittle, &mut g, |v| observe(v, total))?.0
        }
    };
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(Learned { indices, trace })
}

pub fn learn(cfg: &Resolved, out: Option<&Path>, trace_out: Option<&Path>) -> Result<(), Failure> {
    let params = cfg.params();
    let learned = params
        .par_iter()
        .enumerate()
        .map(|(m, p)| learn_one(cfg, m, p, cfg.labels[m]))
        .collect::<Result<Vec<_>, Failure>>()?;

    if let Some(path) = trace_out {
        let mut text = cfg.header();
        text.push_str("content_id,n,R,W_n,gamma_n,eta_n,M_n\n");
        for l in &learned {
            text.push_str(&l.trace);
        }
        emit(Some(path), text.as_bytes())?;
    }
    let mut text = cfg.header();
    text.push_str(INDEX_COLUMNS);
    text.push('\n');
    for (l, &label) in learned.iter().zip(&cfg.labels) {
        let w = &l.indices.indices;
        index_rows(&mut text, label, w, Some(is_non_decreasing(w)));
    }
    emit(out, text.as_bytes())
}

/// Reads a final-index CSV into tables aligned with the configured contents.
fn load_index_tables(path: &Path, cfg: &Resolved) -> Result<Vec<Vec<f64>>, Failure> {
    let bad = |m: String| Failure::usage(format!("index file {}: {m}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| {
        Failure::usage(format!(
            "whittle-learned needs the index table {}, which cannot be read ({e}); \
             create it with `whittle-cache learn --out {}`",
            path.display(),
            path.display()
        ))
    })?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.starts_with("content_id,R,whittle_index") => {}
        _ => return Err(bad("missing `content_id,R,whittle_index` header".into())),
    }
    let mut tables: BTreeMap<u64, Vec<(usize, f64)>> = BTreeMap::new();
    for (i, line) in lines.enumerate() {
        let mut f = line.split(',');
        let parsed = (|| {
            let id: u64 = f.next()?.parse().ok()?;
            let r: usize = f.next()?.parse().ok()?;
            let w: f64 = f.next()?.parse().ok()?;
            Some((id, r, w))
        })();
        let (id, r, w) = parsed.ok_or_else(|| bad(format!("malformed data row {}", i + 1)))?;
        tables.entry(id).or_default().push((r, w));
    }
    cfg.labels
        .iter()
        .map(|label| {
            let mut rows = tables
                .remove(label)
                .ok_or_else(|| bad(format!("no rows for content {label}")))?;
            rows.sort_by_key(|&(r, _)| r);
            if rows.len() != cfg.s_max + 1 || rows.iter().enumerate().any(|(i, &(r, _))| i != r) {
                return Err(bad(format!("content {label} needs exactly R = 0..={}", cfg.s_max)));
            }
            Ok(rows.into_iter().map(|(_, w)| w).collect())
        })
        .collect()
}

#[derive(Serialize)]
struct EpisodeRecord<'a> {
    policy: &'a str,
    seed: u64,
    metrics: &'a Metrics,
}

#[derive(Serialize)]
struct MetricsDocument<'a> {
    config: &'a Resolved,
    episodes: Vec<EpisodeRecord<'a>>,
}

pub fn simulate(cfg: &Resolved, out: Option<&Path>, metrics_json: Option<&Path>) -> Result<(), Failure> {
    let sim = &cfg.simulation;
    let policies = sim
        .policies
        .iter()
        .map(|name| {
            Ok(match name {
                PolicyName::WhittleOracle => PolicyKind::WhittleOracle,
                PolicyName::Lru => PolicyKind::Lru,
                PolicyName::Lfu => PolicyKind::Lfu,
                PolicyName::Random => PolicyKind::Random { seed: cfg.master_seed },
                PolicyName::WhittleLearned => {
                    let path = sim.index_file.as_deref().ok_or_else(|| {
                        Failure::usage(
                            "whittle-learned needs an index table file: set simulation.index_file or pass \
                             --index-file (the `--out` file of `whittle-cache learn`)",
                        )
                    })?;
                    PolicyKind::WhittleLearned {
                        tables: load_index_tables(path, cfg)?,
                    }
                }
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let seeds: Vec<u64> = (0..sim.seeds).map(|k| cfg.master_seed.wrapping_add(k)).collect();
    let arrivals = match &cfg.replay {
        Some(events) => ArrivalProcess::Replay(events.clone()),
        None => ArrivalProcess::Poisson,
    };
    let table = run_comparison_with(&cfg.system, sim.horizon, &policies, &seeds, &arrivals)?;

    let mut bytes = cfg.header().into_bytes();
    table.write_csv(&mut bytes)?;
    emit(out, &bytes)?;
    if let Some(path) = metrics_json {
        let doc = MetricsDocument {
            config: cfg,
            episodes: table
                .rows
                .iter()
                .zip(&table.episodes)
                .map(|(r, m)| EpisodeRecord {
                    policy: &r.policy,
                    seed: r.seed,
                    metrics: m,
                })
                .collect(),
        };
        let mut json = serde_json::to_string_pretty(&doc).expect("metrics serialize");
        json.push('\n');
        emit(Some(path), json.as_bytes())?;
    }
    Ok(())
}

pub fn workload(cfg: &Resolved, mode: WorkloadMode, out: Option<&Path>) -> Result<(), Failure> {
    let mut bytes = cfg.header().into_bytes();
    match mode {
        WorkloadMode::Rates => {
            bytes.extend_from_slice(b"content_id,lambda\n");
            for (c, label) in cfg.system.contents.iter().zip(&cfg.labels) {
                bytes.extend_from_slice(format!("{label},{}\n", c.lambda).as_bytes());
            }
        }
        WorkloadMode::Trace => {
            let w = Workload {
                rates: cfg.system.contents.iter().map(|c| c.lambda).collect(),
                labels: cfg.labels.clone(),
                source: WorkloadSource::Trace,
            };
            let events: Vec<TraceEvent> =
                generate_poisson_trace(&w, cfg.trace.horizon, &mut rng::stream(cfg.master_seed))?;
            write_trace(&events, &mut bytes)?;
        }
    }
    emit(out, &bytes)
}
