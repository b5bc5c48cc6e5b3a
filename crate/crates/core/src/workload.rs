//! Arrival-rate vectors: Zipf popularity profiles and rates estimated from
//! request traces.
//!
//! Trace files are CSV with a `timestamp,content_id` header, non-decreasing
//! timestamps in seconds and `#` comment lines.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WorkloadSource {
    Zipf { m: usize, kappa: f64, total_rate: f64 },
    Trace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    /// Requests per unit time, aligned with `labels`.
    pub rates: Vec<f64>,
    /// Content ids.
    pub labels: Vec<u64>,
    pub source: WorkloadSource,
}

impl Workload {
    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn total_rate(&self) -> f64 {
        self.rates.iter().sum()
    }
}

/// `lambda_m = total_rate m^-kappa / sum_j j^-kappa` for ranks `m = 1..=M`.
/// Content ids are `0..M` in rank order.
pub fn zipf_workload(m: usize, kappa: f64, total_rate: f64) -> Result<Workload> {
    if m == 0 {
        return Err(invalid("M", "need at least one content"));
    }
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(invalid("kappa", "must be finite and nonnegative"));
    }
    if !(total_rate > 0.0 && total_rate.is_finite()) {
        return Err(invalid("total_rate", "must be positive"));
    }
    let weights: Vec<f64> = (1..=m).map(|r| (r as f64).powf(-kappa)).collect();
    let norm: f64 = weights.iter().sum();
    Ok(Workload {
        rates: weights.iter().map(|w| total_rate * w / norm).collect(),
        labels: (0..m as u64).collect(),
        source: WorkloadSource::Zipf { m, kappa, total_rate },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub timestamp: f64,
    pub content_id: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTrace {
    pub events: Vec<TraceEvent>,
    pub workload: Workload,
    /// 1-based line numbers that could not be parsed.
    pub malformed_lines: Vec<usize>,
}

fn parse_line(line: &str) -> Option<TraceEvent> {
    let mut parts = line.split(',');
    let ts: f64 = parts.next()?.trim().parse().ok()?;
    let id: u64 = parts.next()?.trim().parse().ok()?;
    if parts.next().is_some() || !(ts >= 0.0 && ts.is_finite()) {
        return None;
    }
    Some(TraceEvent {
        timestamp: ts,
        content_id: id,
    })
}

/// Reads a request trace and estimates `count_m / (t_last - t_first)` per
/// content. Blank lines and `#` comments are skipped; the header is optional.
pub fn parse_trace<R: BufRead>(reader: R) -> Result<ParsedTrace> {
    let mut events = Vec::new();
    let mut malformed_lines = Vec::new();
    let mut seen_data = false;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        if !seen_data && body.replace(' ', "") == "timestamp,content_id" {
            seen_data = true;
            continue;
        }
        seen_data = true;
        match parse_line(body) {
            Some(ev) => {
                if let Some(prev) = events.last().map(|e: &TraceEvent| e.timestamp) {
                    if ev.timestamp < prev {
                        return Err(Error::NonMonotonicTimestamps { line: lineno });
                    }
                }
                events.push(ev);
            }
            None => malformed_lines.push(lineno),
        }
    }
    let (first, last) = match (events.first(), events.last()) {
        (Some(f), Some(l)) => (f.timestamp, l.timestamp),
        _ => return Err(Error::EmptyTrace),
    };
    let span = last - first;
    if span <= 0.0 {
        return Err(invalid("trace", "all requests share one timestamp; rates are undefined"));
    }
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for e in &events {
        *counts.entry(e.content_id).or_default() += 1;
    }
    let workload = Workload {
        rates: counts.values().map(|&c| c as f64 / span).collect(),
        labels: counts.keys().copied().collect(),
        source: WorkloadSource::Trace,
    };
    Ok(ParsedTrace {
        events,
        workload,
        malformed_lines,
    })
}

/// Independent Poisson request streams on `[0, horizon)`, merged in time
/// order (ties by content id).
pub fn generate_poisson_trace<G: Rng + ?Sized>(workload: &Workload, horizon: f64, rng: &mut G) -> Result<Vec<TraceEvent>> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid("horizon", "must be positive"));
    }
    let mut events = Vec::new();
    for (&rate, &id) in workload.rates.iter().zip(&workload.labels) {
        if rate <= 0.0 {
            continue;
        }
        let exp = Exp::new(rate).map_err(|e| invalid("rate", e.to_string()))?;
        let mut t = exp.sample(rng);
        while t < horizon {
            events.push(TraceEvent {
                timestamp: t,
                content_id: id,
            });
            t += exp.sample(rng);
        }
    }
    events.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp).then(a.content_id.cmp(&b.content_id)));
    Ok(events)
}

pub fn write_trace<W: Write>(events: &[TraceEvent], mut out: W) -> Result<()> {
    writeln!(out, "timestamp,content_id")?;
    for e in events {
        writeln!(out, "{},{}", e.timestamp, e.content_id)?;
    }
    Ok(())
}

/// Mean number of distinct contents requested per window of length
/// `window`, over the consecutive windows covering the trace. A common way
/// to size a cache for trace replay is a fraction of this figure.
pub fn average_active_contents(events: &[TraceEvent], window: f64) -> Result<f64> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(invalid("window", "must be positive"));
    }
    let first = events.first().ok_or(Error::EmptyTrace)?.timestamp;
    let mut per_window: BTreeMap<u64, std::collections::BTreeSet<u64>> = BTreeMap::new();
    for e in events {
        let k = ((e.timestamp - first) / window).floor() as u64;
        per_window.entry(k).or_default().insert(e.content_id);
    }
    let windows = per_window.keys().next_back().map_or(1, |k| k + 1);
    let total: usize = per_window.values().map(|s| s.len()).sum();
    Ok(total as f64 / windows as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn zipf_examples() {
        let w = zipf_workload(4, 0.0, 4.0).unwrap();
        assert!(w.rates.iter().all(|&r| (r - 1.0).abs() < 1e-12));
        assert_eq!(zipf_workload(1, 1.2, 3.5).unwrap().rates, vec![3.5]);
        let w = zipf_workload(3, 1.0, 11.0).unwrap();
        for (a, b) in w.rates.iter().zip([6.0, 3.0, 2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zipf_normalized_and_monotone() {
        for (m, k) in [(20, 0.9), (1000, 1.2), (7, 0.3)] {
            let w = zipf_workload(m, k, 28.8).unwrap();
            assert!((w.total_rate() - 28.8).abs() < 1e-9);
            assert!(w.rates.windows(2).all(|p| p[0] >= p[1]));
        }
    }

    #[test]
    fn zipf_rejects_bad_parameters() {
        assert!(zipf_workload(0, 1.0, 1.0).is_err());
        assert!(zipf_workload(3, -0.1, 1.0).is_err());
        assert!(zipf_workload(3, 1.0, 0.0).is_err());
    }

    #[test]
    fn two_request_trace() {
        let t = parse_trace("timestamp,content_id\n0,7\n10,7\n".as_bytes()).unwrap();
        assert_eq!(t.workload.labels, vec![7]);
        assert!((t.workload.rates[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn trace_errors() {
        assert!(matches!(parse_trace("".as_bytes()), Err(Error::EmptyTrace)));
        assert!(matches!(
            parse_trace("# only a comment\ntimestamp,content_id\n".as_bytes()),
            Err(Error::EmptyTrace)
        ));
        let e = parse_trace("timestamp,content_id\n1.0,1\n# c\n0.5,2\n".as_bytes()).unwrap_err();
        assert!(matches!(e, Error::NonMonotonicTimestamps { line: 4 }));
    }

    #[test]
    fn malformed_lines_are_reported() {
        let t = parse_trace("timestamp,content_id\n0,1\nfoo\n1,x\n2,1,3\n4,2\n".as_bytes()).unwrap();
        assert_eq!(t.malformed_lines, vec![3, 4, 5]);
        assert_eq!(t.events.len(), 2);
    }

    #[test]
    fn poisson_round_trip() {
        let w = Workload {
            rates: vec![2.0],
            labels: vec![0],
            source: WorkloadSource::Trace,
        };
        let ev = generate_poisson_trace(&w, 1e4, &mut rng::stream(5)).unwrap();
        let mut buf = Vec::new();
        write_trace(&ev, &mut buf).unwrap();
        let back = parse_trace(buf.as_slice()).unwrap();
        assert_eq!(back.events.len(), ev.len());
        assert!((back.workload.rates[0] - 2.0).abs() < 0.05, "{}", back.workload.rates[0]);
    }

    #[test]
    fn active_contents_window() {
        let ev: Vec<TraceEvent> = [(0.0, 1), (0.5, 2), (0.7, 1), (1.2, 3), (2.1, 3)]
            .iter()
            .map(|&(t, c)| TraceEvent {
                timestamp: t,
                content_id: c,
            })
            .collect();
        // windows [0,1): {1,2}, [1,2): {3}, [2,3): {3}
        assert!((average_active_contents(&ev, 1.0).unwrap() - 4.0 / 3.0).abs() < 1e-12);
    }
}
