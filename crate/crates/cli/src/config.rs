//! Run configuration: the JSON schema, defaults, flag overrides and the
//! resolved form echoed into every output header.
//!
//! Precedence is command-line flag, then config file, then built-in default.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use whittle_core::learning::{FeatureMap, FeatureSpec, QWhittleOptions, StepSizeSchedule};
use whittle_core::simulator::{ContentSpec, SystemConfig};
use whittle_core::workload::{parse_trace, zipf_workload, TraceEvent};
use whittle_core::PerContentParams;

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum Algorithm {
    #[serde(rename = "q-whittle")]
    #[value(name = "q-whittle")]
    QWhittle,
    #[serde(rename = "q+-whittle")]
    #[value(name = "q+-whittle")]
    QPlusWhittle,
    #[serde(rename = "q+-whittle-lfa")]
    #[value(name = "q+-whittle-lfa")]
    QPlusWhittleLfa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyName {
    WhittleOracle,
    WhittleLearned,
    Lru,
    Lfu,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WorkloadSpec {
    Zipf {
        m: usize,
        kappa: f64,
        /// Defaults to `0.8 nu B`.
        #[serde(default)]
        total_rate: Option<f64>,
    },
    /// Request log; a relative path is taken from the config file's
    /// directory.
    Trace { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningConfig {
    pub algorithm: Algorithm,
    /// Epochs per threshold sweep. The single-sweep `q-whittle` baseline
    /// gets the same total budget, `(s_max + 1)` times this.
    pub epochs_per_threshold: u64,
    pub schedule: StepSizeSchedule,
    /// Only used by `q+-whittle-lfa`.
    pub features: FeatureSpec,
    /// Only used by `q-whittle`.
    pub q_whittle: QWhittleOptions,
    /// Trace rows are written every `trace_stride` epochs and at the end
    /// of each sweep.
    pub trace_stride: u64,
}

impl Default for LearningConfig {
    fn default() -> Self {
        LearningConfig {
            algorithm: Algorithm::QPlusWhittle,
            epochs_per_threshold: 20_000,
            schedule: StepSizeSchedule::default(),
            features: FeatureSpec::GaussianRbf { d: 20, bandwidth: None },
            q_whittle: QWhittleOptions::default(),
            trace_stride: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub policies: Vec<PolicyName>,
    /// Episodes per policy; episode `k` uses seed `master_seed + k`.
    pub seeds: u64,
    pub horizon: f64,
    /// Final-index CSV from `learn`, required by `whittle-learned`. Taken
    /// relative to the config file; a `--index-file` flag is taken as given.
    pub index_file: Option<PathBuf>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            policies: vec![
                PolicyName::WhittleOracle,
                PolicyName::Lru,
                PolicyName::Lfu,
                PolicyName::Random,
            ],
            seeds: 10,
            horizon: 1e4,
            index_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceGenConfig {
    /// Length of a synthetic trace written by `workload --mode trace`.
    pub horizon: f64,
}

impl Default for TraceGenConfig {
    fn default() -> Self {
        TraceGenConfig { horizon: 1e4 }
    }
}

/// The file as written. Exactly one of `contents` and `workload` must be set.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_s_max")]
    pub s_max: usize,
    /// Cache size `B`; defaults to a tenth of the contents, at least 1.
    #[serde(default)]
    pub capacity: Option<usize>,
    /// Service rate for workload-derived contents; defaults to 18.
    #[serde(default)]
    pub nu: Option<f64>,
    #[serde(default)]
    pub contents: Option<Vec<ContentSpec>>,
    #[serde(default)]
    pub workload: Option<WorkloadSpec>,
    #[serde(default)]
    pub learning: LearningConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub trace: TraceGenConfig,
}

fn default_alpha() -> f64 {
    0.98
}

fn default_s_max() -> usize {
    20
}

const DEFAULT_NU: f64 = 18.0;

/// Fully resolved configuration. Serializes to the `# config:` header line.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub version: &'static str,
    pub command: &'static str,
    pub master_seed: u64,
    pub alpha: f64,
    pub s_max: usize,
    pub capacity: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workload: Option<WorkloadSpec>,
    /// Only echoed when given explicitly.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contents: Option<Vec<ContentSpec>>,
    pub learning: LearningConfig,
    pub simulation: SimulationConfig,
    pub trace: TraceGenConfig,
    #[serde(skip)]
    pub system: SystemConfig,
    /// External content id of each content, in simulator order.
    #[serde(skip)]
    pub labels: Vec<u64>,
    /// Trace requests with ids remapped to simulator positions.
    #[serde(skip)]
    pub replay: Option<Vec<TraceEvent>>,
}

/// Flag values that override the file.
#[derive(Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub algorithm: Option<Algorithm>,
    pub epochs: Option<u64>,
    pub policies: Vec<PolicyName>,
    pub seeds: Option<u64>,
    pub horizon: Option<f64>,
    pub index_file: Option<PathBuf>,
}

pub fn load(path: &Path, command: &'static str, overrides: Overrides) -> Result<Resolved, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut raw: RunConfig = serde_json::from_slice(&bytes)
        .map_err(|e| Failure::usage(format!("invalid config {}: {e}", path.display())))?;

    let base = path.parent().unwrap_or(Path::new("."));
    if let Some(p) = raw.simulation.index_file.take() {
        raw.simulation.index_file = Some(base.join(p));
    }
    if let Some(seed) = overrides.seed {
        raw.master_seed = seed;
    }
    if let Some(a) = overrides.algorithm {
        raw.learning.algorithm = a;
    }
    if let Some(t) = overrides.epochs {
        raw.learning.epochs_per_threshold = t;
    }
    if !overrides.policies.is_empty() {
        raw.simulation.policies = overrides.policies;
    }
    if let Some(n) = overrides.seeds {
        raw.simulation.seeds = n;
    }
    if let Some(h) = overrides.horizon {
        raw.simulation.horizon = h;
    }
    if overrides.index_file.is_some() {
        raw.simulation.index_file = overrides.index_file;
    }
    resolve(raw, command, base)
}

fn resolve(raw: RunConfig, command: &'static str, base: &Path) -> Result<Resolved, Failure> {
    let usage = |m: String| Failure::usage(m);
    let (specs, labels, workload, nu, replay) = match (&raw.contents, &raw.workload) {
        (Some(_), Some(_)) => return Err(usage("set either `contents` or `workload`, not both".into())),
        (None, None) => return Err(usage("one of `contents` or `workload` is required".into())),
        (Some(c), None) => {
            if raw.nu.is_some() {
                return Err(usage("`nu` only applies to workload-derived contents".into()));
            }
            let labels = (0..c.len() as u64).collect();
            (c.clone(), labels, None, None, None)
        }
        (None, Some(WorkloadSpec::Zipf { m, kappa, total_rate })) => {
            let nu = raw.nu.unwrap_or(DEFAULT_NU);
            let b = raw.capacity.unwrap_or_else(|| default_capacity(*m));
            let total = total_rate.unwrap_or(0.8 * nu * b as f64);
            let w = zipf_workload(*m, *kappa, total).map_err(|e| usage(e.to_string()))?;
            let specs = w.rates.iter().map(|&lambda| ContentSpec { lambda, nu }).collect();
            let resolved = WorkloadSpec::Zipf {
                m: *m,
                kappa: *kappa,
                total_rate: Some(total),
            };
            (specs, w.labels, Some(resolved), Some(nu), None)
        }
        (None, Some(WorkloadSpec::Trace { path })) => {
            let nu = raw.nu.unwrap_or(DEFAULT_NU);
            let full = base.join(path);
            let file =
                File::open(&full).map_err(|e| usage(format!("cannot open trace {}: {e}", full.display())))?;
            let parsed = parse_trace(BufReader::new(file)).map_err(|e| usage(format!("trace {}: {e}", full.display())))?;
            if !parsed.malformed_lines.is_empty() {
                eprintln!(
                    "warning: skipped {} malformed line(s) in {} (first at line {})",
                    parsed.malformed_lines.len(),
                    full.display(),
                    parsed.malformed_lines[0]
                );
            }
            let labels = parsed.workload.labels.clone();
            let position = |id: u64| labels.binary_search(&id).expect("trace ids come from the trace");
            let replay = parsed
                .events
                .iter()
                .map(|e| TraceEvent {
                    timestamp: e.timestamp,
                    content_id: position(e.content_id) as u64,
                })
                .collect();
            let specs = parsed.workload.rates.iter().map(|&lambda| ContentSpec { lambda, nu }).collect();
            (specs, labels, raw.workload.clone(), Some(nu), Some(replay))
        }
    };

    let capacity = raw.capacity.unwrap_or_else(|| default_capacity(specs.len()));
    let system = SystemConfig {
        contents: specs,
        s_max: raw.s_max,
        capacity,
        alpha: raw.alpha,
        initial_queues: None,
    };
    system.validate().map_err(|e| usage(e.to_string()))?;
    for c in &system.contents {
        // queue models need positive arrival rates even where the simulator would not
        PerContentParams::new(c.lambda, c.nu, raw.s_max, raw.alpha).map_err(|e| usage(e.to_string()))?;
    }

    let l = &raw.learning;
    l.schedule.validate().map_err(|e| usage(e.to_string()))?;
    if l.algorithm == Algorithm::QPlusWhittleLfa {
        FeatureMap::new(l.features, raw.s_max).map_err(|e| usage(e.to_string()))?;
    }
    if l.algorithm == Algorithm::QWhittle {
        l.q_whittle.validate(raw.s_max).map_err(|e| usage(e.to_string()))?;
    }
    if l.trace_stride == 0 {
        return Err(usage("learning.trace_stride must be at least 1".into()));
    }
    let s = &raw.simulation;
    if !(s.horizon > 0.0 && s.horizon.is_finite()) {
        return Err(usage("simulation.horizon must be positive".into()));
    }
    if s.seeds == 0 {
        return Err(usage("simulation.seeds must be at least 1".into()));
    }
    if s.policies.is_empty() {
        return Err(usage("simulation.policies is empty".into()));
    }
    if !(raw.trace.horizon > 0.0 && raw.trace.horizon.is_finite()) {
        return Err(usage("trace.horizon must be positive".into()));
    }

    Ok(Resolved {
        version: env!("CARGO_PKG_VERSION"),
        command,
        master_seed: raw.master_seed,
        alpha: raw.alpha,
        s_max: raw.s_max,
        capacity,
        nu,
        workload,
        contents: raw.contents,
        learning: raw.learning,
        simulation: raw.simulation,
        trace: raw.trace,
        system,
        labels,
        replay,
    })
}

fn default_capacity(contents: usize) -> usize {
    (contents / 10).max(1)
}

impl Resolved {
    pub fn params(&self) -> Vec<PerContentParams> {
        self.system
            .per_content_params()
            .expect("validated while resolving")
    }

    /// `#` comment block naming the tool and echoing this configuration.
    pub fn header(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        format!(
            "# whittle-cache {}\n# command: {}\n# config: {json}\n",
            self.version, self.command
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Resolved, Failure> {
        let raw: RunConfig = serde_json::from_str(text).map_err(|e| Failure::usage(e.to_string()))?;
        resolve(raw, "index", Path::new("."))
    }

    #[test]
    fn zipf_defaults_fill_in() {
        let r = parse(r#"{"workload": {"kind": "zipf", "m": 20, "kappa": 0.9}}"#).unwrap();
        assert_eq!(r.capacity, 2);
        assert_eq!(r.nu, Some(18.0));
        match r.workload {
            Some(WorkloadSpec::Zipf { total_rate, .. }) => assert!((total_rate.unwrap() - 28.8).abs() < 1e-12),
            _ => panic!(),
        }
        let total: f64 = r.system.contents.iter().map(|c| c.lambda).sum();
        assert!((total - 28.8).abs() < 1e-9);
    }

    #[test]
    fn rejects_unknown_fields_and_ambiguous_sources() {
        assert!(parse(r#"{"contents": [{"lambda": 1, "nu": 1}], "bogus": 1}"#).is_err());
        assert!(parse(r#"{"contents": [{"lambda": 1, "nu": 1}], "workload": {"kind": "zipf", "m": 2, "kappa": 0}}"#).is_err());
        assert!(parse("{}").is_err());
    }

    #[test]
    fn header_echoes_defaults() {
        let r = parse(r#"{"contents": [{"lambda": 1, "nu": 1}], "s_max": 2}"#).unwrap();
        let h = r.header();
        assert!(h.starts_with("# whittle-cache "));
        assert!(h.contains("\"alpha\":0.98"));
        assert!(h.contains("\"capacity\":1"));
        assert!(h.contains("\"algorithm\":\"q+-whittle\""));
        assert!(h.lines().all(|l| l.starts_with('#')));
    }
}
