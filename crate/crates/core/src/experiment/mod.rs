//! Run orchestration: unit enumeration, a bounded worker pool, the run
//! manifest with resume support, and report emission.

mod config;
mod units;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

pub use config::{
    eval_label, strategy_label, FlowPlan, Pipeline, Preset, RunConfig, SweepConfig, Temp, EVAL_SAMPLES, FMA_ROW_LABELS, RQ1_TEMPERATURES,
    RQ2_TEMPERATURE,
};
pub use units::{evaluate_code, EvalSettings, GroupedRecord, UnitResult};

use crate::gateway::{Gateway, GatewayError};
use crate::metrics::{
    cbs, render_csv, render_json, render_table, Corpus, MetricsReport, ReportHeader, ReportSet, Significance, BLS_DENOMINATOR_NOTE,
};
use crate::roles::AgentRole;
use crate::sandbox::{Executor, SandboxError};
use crate::task::{TaskError, TaskSet};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Sandbox(#[from] SandboxError),
    #[error("{0}")]
    Config(String),
    #[error("run {run_id} was started with a different configuration (digest {stored}, now {current}); use a new run id")]
    DigestMismatch { run_id: String, stored: String, current: String },
    #[error("unknown run `{0}`")]
    UnknownRun(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitState {
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitStatus {
    pub state: UnitState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub config_digest: String,
    pub config: RunConfig,
    pub units: BTreeMap<String, UnitStatus>,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<RunManifest, ExperimentError> {
        let path = dir.join("manifest.json");
        let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
        serde_json::from_str(&text).map_err(|source| ExperimentError::Json { path: path.display().to_string(), source })
    }

    fn save(&self, dir: &Path) -> Result<(), ExperimentError> {
        write_atomic(&dir.join("manifest.json"), &(serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"))
    }

    pub fn failed(&self) -> Vec<(&str, &str)> {
        self.units
            .iter()
            .filter(|(_, s)| s.state == UnitState::Failed)
            .map(|(k, s)| (k.as_str(), s.error.as_deref().unwrap_or("")))
            .collect()
    }
}

pub(crate) fn write_atomic(path: &Path, text: &str) -> Result<(), ExperimentError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    std::fs::write(&tmp, text).map_err(io_err(&tmp))?;
    std::fs::rename(&tmp, path).map_err(io_err(path))
}

/// Live resources a run needs besides its configuration.
#[derive(Clone)]
pub struct Resources {
    pub tasks: TaskSet,
    pub gateway: Arc<Gateway>,
    pub role_gateways: BTreeMap<AgentRole, Arc<Gateway>>,
    pub executor: Arc<dyn Executor>,
}

pub struct Experiment {
    pub run_id: String,
    pub config: RunConfig,
    pub runs_root: PathBuf,
    pub jobs: usize,
    /// Stops after this many newly completed units, leaving the run
    /// resumable.
    pub stop_after: Option<usize>,
    resources: Resources,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub run_id: String,
    pub dir: PathBuf,
    pub executed: usize,
    pub skipped: usize,
    pub failed: Vec<(String, String)>,
    pub stopped: bool,
    pub live_calls: u64,
    pub reports: Option<ReportSet>,
}

impl RunOutcome {
    /// 0 on success, 3 when any unit failed.
    pub fn exit_code(&self) -> i32 {
        if self.failed.is_empty() {
            0
        } else {
            3
        }
    }
}

impl Experiment {
    pub fn new(config: RunConfig, resources: Resources, runs_root: impl Into<PathBuf>, run_id: Option<String>) -> Self {
        let run_id = run_id.unwrap_or_else(|| format!("{}-{}", config.pipeline.name(), &config.digest()[..12]));
        Experiment { run_id, config, runs_root: runs_root.into(), jobs: 1, stop_after: None, resources }
    }

    pub fn dir(&self) -> PathBuf {
        self.runs_root.join(&self.run_id)
    }

    pub fn unit_ids(&self) -> Vec<String> {
        units::enumerate(&self.config)
    }

    pub fn run(&self) -> Result<RunOutcome, ExperimentError> {
        let dir = self.dir();
        let digest = self.config.digest();
        let manifest = if dir.join("manifest.json").exists() {
            let m = RunManifest::load(&dir)?;
            if m.config_digest != digest {
                return Err(ExperimentError::DigestMismatch { run_id: self.run_id.clone(), stored: m.config_digest, current: digest });
            }
            m
        } else {
            RunManifest { run_id: self.run_id.clone(), config_digest: digest, config: self.config.clone(), units: BTreeMap::new() }
        };
        manifest.save(&dir)?;

        let all = self.unit_ids();
        let pending: Vec<&String> = all.iter().filter(|u| manifest.units.get(*u).is_none_or(|s| s.state != UnitState::Done)).collect();
        let skipped = all.len() - pending.len();
        let manifest = Mutex::new(manifest);
        let next = AtomicUsize::new(0);
        let claimed = AtomicUsize::new(0);
        let limit = self.stop_after.unwrap_or(usize::MAX);
        let calls_before = self.live_calls();
        let first_error: Mutex<Option<ExperimentError>> = Mutex::new(None);

        std::thread::scope(|scope| {
            for _ in 0..self.jobs.max(1) {
                scope.spawn(|| loop {
                    if first_error.lock().expect("lock").is_some() {
                        return;
                    }
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(unit) = pending.get(i) else { return };
                    if claimed.fetch_add(1, Ordering::SeqCst) >= limit {
                        return;
                    }
                    let status = match units::run_unit(unit, &self.config, &self.resources, &dir) {
                        Ok(result) => {
                            let text = serde_json::to_string_pretty(&result).expect("unit serializes") + "\n";
                            if let Err(e) = write_atomic(&units::unit_path(&dir, unit), &text) {
                                first_error.lock().expect("lock").get_or_insert(e);
                                return;
                            }
                            UnitStatus { state: UnitState::Done, result_digest: Some(crate::prompt::text_digest(&text)), error: None }
                        }
                        Err(e) => UnitStatus { state: UnitState::Failed, result_digest: None, error: Some(e) },
                    };
                    let mut m = manifest.lock().expect("lock");
                    m.units.insert(unit.to_string(), status);
                    if let Err(e) = m.save(&dir) {
                        first_error.lock().expect("lock").get_or_insert(e);
                    }
                });
            }
        });
        if let Some(e) = first_error.into_inner().expect("lock") {
            return Err(e);
        }

        let manifest = manifest.into_inner().expect("lock");
        let executed = claimed.load(Ordering::SeqCst).min(pending.len()).min(limit);
        let stopped = executed < pending.len();
        let failed: Vec<(String, String)> = manifest.failed().into_iter().map(|(u, e)| (u.to_string(), e.to_string())).collect();
        let reports = if stopped { None } else { Some(emit_reports(&dir)?) };
        Ok(RunOutcome {
            run_id: self.run_id.clone(),
            dir,
            executed,
            skipped,
            failed,
            stopped,
            live_calls: self.live_calls() - calls_before,
            reports,
        })
    }

    fn live_calls(&self) -> u64 {
        self.resources.gateway.live_calls() + self.resources.role_gateways.values().map(|g| g.live_calls()).sum::<u64>()
    }
}

/// Loads every completed unit of a run.
pub fn load_results(dir: &Path, manifest: &RunManifest) -> Result<Vec<UnitResult>, ExperimentError> {
    let mut out = Vec::new();
    for (unit, status) in &manifest.units {
        if status.state != UnitState::Done {
            continue;
        }
        let path = units::unit_path(dir, unit);
        let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
        out.push(serde_json::from_str(&text).map_err(|source| ExperimentError::Json { path: path.display().to_string(), source })?);
    }
    Ok(out)
}

/// Per-sample CBS values of a group; samples without executable snippets
/// are left out.
fn sample_cbs(records: &[&GroupedRecord]) -> Vec<f64> {
    let mut by_sample: BTreeMap<u32, Vec<_>> = BTreeMap::new();
    for r in records {
        by_sample.entry(r.sample).or_default().push(r.record.clone());
    }
    by_sample.into_values().filter_map(|recs| cbs(&Corpus::new("", recs), None).ok()).collect()
}

/// Builds the report set of a run from its stored unit results.
pub fn build_reports(manifest: &RunManifest, results: &[UnitResult]) -> ReportSet {
    let config = &manifest.config;
    let mut by_label: BTreeMap<&str, Vec<&GroupedRecord>> = BTreeMap::new();
    for r in results.iter().flat_map(|u| &u.records) {
        by_label.entry(r.label.as_str()).or_default().push(r);
    }
    let labels = config.report_labels();
    let reference = config.reference_label();
    let reference_samples = reference.as_deref().and_then(|l| by_label.get(l)).map(|rs| sample_cbs(rs));
    let reports = labels
        .iter()
        .map(|label| {
            let recs = by_label.get(label.as_str()).cloned().unwrap_or_default();
            let mut corpus = Corpus::new(label.clone(), recs.iter().map(|r| r.record.clone()).collect());
            if let Some(first) = recs.first() {
                corpus.groups = first.groups.iter().filter(|(k, _)| *k != "sample").map(|(k, v)| (k.clone(), v.clone())).collect();
            }
            let mut report = MetricsReport::from_corpus(&corpus);
            if let (Some(reference), Some(base)) = (&reference, &reference_samples) {
                if reference != label {
                    report.significance = Significance::against(reference, &sample_cbs(&recs), base).ok();
                }
            }
            report
        })
        .collect();
    ReportSet {
        header: ReportHeader {
            command: config.pipeline.name().into(),
            config_digest: manifest.config_digest.clone(),
            bls_denominator: BLS_DENOMINATOR_NOTE.into(),
            review_mode: config.review_mode(),
        },
        reports,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Table,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Table];

    pub fn render(self, set: &ReportSet) -> String {
        match self {
            ReportFormat::Json => render_json(set),
            ReportFormat::Csv => render_csv(set),
            ReportFormat::Table => render_table(set),
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            ReportFormat::Json => "report.json",
            ReportFormat::Csv => "report.csv",
            ReportFormat::Table => "report.txt",
        }
    }
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "table" => Ok(ReportFormat::Table),
            other => Err(format!("unknown format `{other}` (expected json, csv or table)")),
        }
    }
}

/// Rebuilds the reports of the run in `dir` and writes `reports/report.*`.
pub fn emit_reports(dir: &Path) -> Result<ReportSet, ExperimentError> {
    let manifest = RunManifest::load(dir)?;
    let results = load_results(dir, &manifest)?;
    let set = build_reports(&manifest, &results);
    for f in ReportFormat::ALL {
        write_atomic(&dir.join("reports").join(f.file_name()), &f.render(&set))?;
    }
    Ok(set)
}

/// Opens `runs_root/run_id`, failing with [`ExperimentError::UnknownRun`]
/// when it has no manifest.
pub fn run_dir(runs_root: &Path, run_id: &str) -> Result<PathBuf, ExperimentError> {
    let dir = runs_root.join(run_id);
    if dir.join("manifest.json").is_file() {
        Ok(dir)
    } else {
        Err(ExperimentError::UnknownRun(run_id.to_string()))
    }
}
