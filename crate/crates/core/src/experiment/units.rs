use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{eval_label, Pipeline, RunConfig, Temp, FMA_ROW_LABELS};
use super::Resources;
use crate::fma::{run_fma, FmaAgents};
use crate::gateway::GenerationConfig;
use crate::metamorphic::{attribute_usage, interpret, synthesize_suite};
use crate::metrics::SnippetRecord;
use crate::process::run_process;
use crate::prompt::{render_prompt, PromptStrategy};
use crate::sandbox::{execute_snippet, Executor};
use crate::snippet::parse_precheck;
use crate::task::TaskDefinition;

/// One snippet's record together with the report row it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedRecord {
    pub label: String,
    pub groups: BTreeMap<String, String>,
    pub sample: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
    pub record: SnippetRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitResult {
    pub unit: String,
    pub task_id: String,
    pub records: Vec<GroupedRecord>,
    /// Pipeline-specific summary (loop outcome, process artifacts).
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub detail: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSettings {
    pub suite_budget: usize,
    pub seed: u64,
    pub timeout: f64,
}

impl EvalSettings {
    pub fn of(config: &RunConfig) -> Self {
        EvalSettings { suite_budget: config.suite_budget, seed: config.seed, timeout: config.sandbox_timeout }
    }
}

/// Tests `code` for bias and attribute usage. Missing or unparseable code
/// yields a non-executable record.
pub fn evaluate_code(
    task: &TaskDefinition,
    snippet: &str,
    code: Option<&str>,
    settings: EvalSettings,
    executor: &dyn Executor,
) -> Result<SnippetRecord, String> {
    let mut record =
        SnippetRecord { snippet: snippet.to_string(), task_id: task.task_id.clone(), executable: false, bias: None, usage: None };
    let Some(code) = code else { return Ok(record) };
    if !parse_precheck(code).ok {
        return Ok(record);
    }
    record.usage = attribute_usage(snippet, code, task).ok();
    let suite = synthesize_suite(task, settings.suite_budget, settings.seed).map_err(|e| e.to_string())?;
    let verdict = execute_snippet(executor, snippet, task, code, &suite, settings.timeout).map_err(|e| e.to_string())?;
    if verdict.executable {
        record.executable = true;
        record.bias = Some(interpret(&verdict, &suite).map_err(|e| e.to_string())?);
    }
    Ok(record)
}

pub(crate) fn unit_path(dir: &Path, unit: &str) -> PathBuf {
    dir.join("units").join(format!("{unit}.json"))
}

/// Unit identifiers in a fixed order.
pub(crate) fn enumerate(config: &RunConfig) -> Vec<String> {
    let mut out = Vec::new();
    for task in &config.task_ids {
        match &config.pipeline {
            Pipeline::Eval { sweep, .. } => {
                for t in &sweep.temperatures {
                    for s in &sweep.strategies {
                        for k in 0..sweep.samples_per_task {
                            out.push(format!("{task}.{}.t{}.s{k}", s.name(), Temp(*t)));
                        }
                    }
                }
            }
            Pipeline::Fma { .. } => out.push(format!("{task}.fma")),
            Pipeline::Flow { configs, .. } => {
                for c in configs {
                    out.push(format!("{task}.{}.{}", c.model, c.slug()));
                }
            }
        }
    }
    out
}

pub(crate) fn run_unit(unit: &str, config: &RunConfig, res: &Resources, dir: &Path) -> Result<UnitResult, String> {
    let (task_id, rest) = config
        .task_ids
        .iter()
        .filter(|t| unit.starts_with(&format!("{t}.")))
        .max_by_key(|t| t.len())
        .map(|t| (t.as_str(), &unit[t.len() + 1..]))
        .ok_or_else(|| format!("unit `{unit}` names no configured task"))?;
    let task = res.tasks.get(task_id).ok_or_else(|| format!("task `{task_id}` is not in the task set"))?;
    let settings = EvalSettings::of(config);
    let executor = res.executor.as_ref();
    match &config.pipeline {
        Pipeline::Eval { preset, .. } => {
            let malformed = || format!("malformed unit id `{unit}`");
            let (strategy, tail) = rest.split_once('.').ok_or_else(malformed)?;
            let strategy: PromptStrategy = strategy.parse().map_err(|e| format!("{e}"))?;
            let (temp, sample) = tail.strip_prefix('t').and_then(|t| t.rsplit_once(".s")).ok_or_else(malformed)?;
            let temp: f64 = temp.parse().map_err(|_| malformed())?;
            let sample: u32 = sample.parse().map_err(|_| malformed())?;
            let prompt = render_prompt(task, strategy);
            let cfg = GenerationConfig::new(config.model.clone(), temp, sample);
            let snippet = res.gateway.complete(&prompt, &cfg).map_err(|e| e.to_string())?;
            let code = snippet.extracted_code.as_deref();
            let record = evaluate_code(task, unit, code, settings, executor)?;
            let groups = BTreeMap::from([
                ("temperature".to_string(), Temp(temp).to_string()),
                ("strategy".to_string(), strategy.name().to_string()),
                ("sample".to_string(), sample.to_string()),
            ]);
            Ok(UnitResult {
                unit: unit.to_string(),
                task_id: task_id.to_string(),
                records: vec![GroupedRecord {
                    label: eval_label(*preset, temp, strategy),
                    groups,
                    sample,
                    code: snippet.extracted_code.clone(),
                    record,
                }],
                detail: serde_json::json!({ "provider": snippet.provider, "parse_ok": snippet.parse_ok }),
            })
        }
        Pipeline::Fma { max_rounds, review_mode, .. } => {
            let mut agents = FmaAgents::new(res.gateway.clone()).with_review_mode(*review_mode);
            agents.config.model = config.model.clone();
            for (role, gw) in &res.role_gateways {
                agents = agents.with_role(*role, gw.clone());
            }
            let result = run_fma(task, &agents, *max_rounds).map_err(|e| e.to_string())?;
            result.write_transcript(&dir.join(task_id)).map_err(|e| e.to_string())?;
            let mut records = Vec::new();
            for (k, label) in FMA_ROW_LABELS.iter().enumerate() {
                let code = result.code_after(k as u32);
                let snippet = format!("{unit}.r{k}");
                records.push(GroupedRecord {
                    label: label.to_string(),
                    groups: BTreeMap::from([("round".to_string(), k.to_string())]),
                    sample: 0,
                    code: Some(code.to_string()),
                    record: evaluate_code(task, &snippet, Some(code), settings, executor)?,
                });
            }
            Ok(UnitResult {
                unit: unit.to_string(),
                task_id: task_id.to_string(),
                records,
                detail: serde_json::json!({
                    "rounds_executed": result.rounds_executed,
                    "terminated_early": result.terminated_early,
                    "final_check_clean": result.final_check.is_clean(),
                    "final_report_clean": result.last_report().is_none_or(|r| r.is_clean()),
                    "aborted": result.aborted(),
                    "classification": result.classification,
                }),
            })
        }
        Pipeline::Flow { configs, .. } => {
            let cfg = configs
                .iter()
                .find(|c| rest == format!("{}.{}", c.model, c.slug()))
                .ok_or_else(|| format!("unit `{unit}` names no configuration of the plan"))?;
            let result = run_process(task, cfg, &res.gateway, &config.model).map_err(|e| e.to_string())?;
            result.write_transcript(&dir.join(task_id)).map_err(|e| e.to_string())?;
            let record = evaluate_code(task, unit, Some(&result.final_code), settings, executor)?;
            Ok(UnitResult {
                unit: unit.to_string(),
                task_id: task_id.to_string(),
                records: vec![GroupedRecord {
                    label: cfg.label.clone(),
                    groups: BTreeMap::from([("config".to_string(), cfg.label.clone())]),
                    sample: 0,
                    code: Some(result.final_code.clone()),
                    record,
                }],
                detail: serde_json::json!({
                    "artifacts": result.artifact_kinds(),
                    "artifact_seq": result.artifacts.iter().map(|a| a.seq).collect::<Vec<_>>(),
                    "refinements": result.refinements.len(),
                }),
            })
        }
    }
}
