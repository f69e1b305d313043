//! The fairness monitor pipeline: requirements, attribute classification,
//! development, then up to three rounds of functional and fairness review
//! with repair. Agents only ever see the task, the requirements, the
//! classification, code and fault reports.

pub mod prompts;
mod review;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use review::{static_fairness_check, static_functional_check, FaultKind, FaultReport, ReviewFault, ReviewMode};

use crate::gateway::{extract_code, Gateway, GatewayError, GenerationConfig};
use crate::prompt::{COT_PREAMBLE, FAIRNESS_ROLE_INSTRUCTION, PERSONA_SENTENCE};
use crate::roles::AgentRole;
use crate::snippet::parse_precheck;
use crate::task::{find_dimension, TaskDefinition};

/// Upper bound on review rounds.
pub const MAX_ROUNDS: u32 = 3;
/// Extra attempts granted to an agent whose reply cannot be used.
pub const REPROMPT_LIMIT: u32 = 2;
pub const FMA_TEMPERATURE: f64 = 0.8;

#[derive(Debug, thiserror::Error)]
pub enum FmaError {
    #[error("{role}: {source}")]
    Gateway { role: AgentRole, source: GatewayError },
    #[error("requirements analyst returned an empty document")]
    EmptyPrd,
    #[error("{role}: no usable code after {attempts} attempt(s)")]
    NoCode { role: AgentRole, attempts: u32 },
    #[error("at most {MAX_ROUNDS} rounds are supported (got {0})")]
    TooManyRounds(u32),
    #[error("writing transcript: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prd {
    pub task_id: String,
    pub text: String,
    /// The boolean contract of the method under test.
    pub contract: String,
}

impl Prd {
    pub fn document(&self) -> String {
        format!("{}\n\nContract: {}", self.text.trim_end(), self.contract)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FairnessClassification {
    pub required: Vec<String>,
    pub restricted: Vec<String>,
    /// Attributes the agent marked required that map to a demographic
    /// dimension; they were moved to `restricted`.
    #[serde(default)]
    pub guarded: Vec<String>,
    /// The agent's answer was unusable and the task's own split was taken.
    #[serde(default)]
    pub fallback: bool,
}

/// One exchange with an agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub role: AgentRole,
    pub attempt: u32,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundTranscript {
    pub round: u32,
    pub input_code: String,
    pub functional: FaultReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functionally_repaired: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fairness: Option<FaultReport>,
    pub output_code: String,
    pub prompts: Vec<PromptRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub task_id: String,
    pub prd: Prd,
    pub classification: FairnessClassification,
    pub initial_code: String,
    pub final_code: String,
    pub rounds: Vec<RoundTranscript>,
    pub rounds_executed: u32,
    pub terminated_early: bool,
    /// Deterministic fairness check of the final code.
    pub final_check: FaultReport,
    pub review_mode: ReviewMode,
    pub setup_prompts: Vec<PromptRecord>,
}

impl PipelineResult {
    /// Code after round `k` (0 is the developer's version). Rounds that
    /// did not run carry the last version forward.
    pub fn code_after(&self, k: u32) -> &str {
        if k == 0 {
            return &self.initial_code;
        }
        self.rounds.iter().take_while(|r| r.round <= k).last().map(|r| r.output_code.as_str()).unwrap_or(&self.initial_code)
    }

    pub fn aborted(&self) -> Option<&str> {
        self.rounds.iter().find_map(|r| r.aborted.as_deref())
    }

    /// The most recent fairness review.
    pub fn last_report(&self) -> Option<&FaultReport> {
        self.rounds.iter().rev().find_map(|r| r.fairness.as_ref())
    }

    /// Writes `fma/` under `dir`: the requirements, classification and one
    /// directory per round.
    pub fn write_transcript(&self, dir: &Path) -> Result<(), FmaError> {
        let root = dir.join("fma");
        std::fs::create_dir_all(&root)?;
        std::fs::write(root.join("prd.txt"), self.prd.document() + "\n")?;
        std::fs::write(root.join("classification.json"), pretty(&self.classification))?;
        std::fs::write(root.join("setup_prompts.json"), pretty(&self.setup_prompts))?;
        std::fs::write(root.join("developer.py"), with_newline(&self.initial_code))?;
        for r in &self.rounds {
            let d = root.join(format!("round{}", r.round));
            std::fs::create_dir_all(&d)?;
            std::fs::write(d.join("code.py"), with_newline(&r.output_code))?;
            let faults = serde_json::json!({ "functional": r.functional, "fairness": r.fairness, "aborted": r.aborted });
            std::fs::write(d.join("faults.json"), pretty(&faults))?;
            std::fs::write(d.join("prompts.json"), pretty(&r.prompts))?;
        }
        let summary = serde_json::json!({
            "task_id": self.task_id,
            "rounds_executed": self.rounds_executed,
            "terminated_early": self.terminated_early,
            "review_mode": self.review_mode,
            "final_check": self.final_check,
        });
        std::fs::write(root.join("summary.json"), pretty(&summary))?;
        Ok(())
    }
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("transcript serializes") + "\n"
}

fn with_newline(code: &str) -> String {
    format!("{}\n", code.trim_end())
}

/// Gateways per agent role, with a default for roles not overridden.
#[derive(Clone)]
pub struct FmaAgents {
    pub default: Arc<Gateway>,
    pub overrides: BTreeMap<AgentRole, Arc<Gateway>>,
    pub config: GenerationConfig,
    pub review_mode: ReviewMode,
}

impl FmaAgents {
    pub fn new(default: Arc<Gateway>) -> Self {
        let config = GenerationConfig::new(default.default_model(), FMA_TEMPERATURE, 0);
        FmaAgents { default, overrides: BTreeMap::new(), config, review_mode: ReviewMode::default() }
    }

    pub fn with_role(mut self, role: AgentRole, gateway: Arc<Gateway>) -> Self {
        self.overrides.insert(role, gateway);
        self
    }

    pub fn with_review_mode(mut self, mode: ReviewMode) -> Self {
        self.review_mode = mode;
        self
    }

    pub fn gateway(&self, role: AgentRole) -> &Gateway {
        self.overrides.get(&role).unwrap_or(&self.default)
    }

    fn ask(&self, role: AgentRole, prompt: &str, attempt: u32, log: &mut Vec<PromptRecord>) -> Result<String, FmaError> {
        let gw = self.gateway(role);
        let mut cfg = self.config.clone();
        if self.overrides.contains_key(&role) {
            cfg.model = gw.default_model();
        }
        let text = if attempt == 0 {
            prompt.to_string()
        } else {
            format!("{prompt}\nYour previous reply (attempt {attempt}) could not be used. Follow the requested format exactly.\n")
        };
        match gw.complete_text(&text, &cfg) {
            Ok(c) => {
                log.push(PromptRecord { role, attempt, prompt: text, response: Some(c.text.clone()), error: None });
                Ok(c.text)
            }
            Err(e) => {
                log.push(PromptRecord { role, attempt, prompt: text, response: None, error: Some(e.to_string()) });
                Err(FmaError::Gateway { role, source: e })
            }
        }
    }

    /// Asks until `accept` yields a value, re-prompting up to the limit.
    /// `Ok(None)` means every reply was unusable.
    fn ask_until<T>(
        &self,
        role: AgentRole,
        prompt: &str,
        log: &mut Vec<PromptRecord>,
        mut accept: impl FnMut(&str) -> Option<T>,
    ) -> Result<Option<T>, FmaError> {
        for attempt in 0..=REPROMPT_LIMIT {
            match self.ask(role, prompt, attempt, log) {
                Ok(text) => {
                    if let Some(v) = accept(&text) {
                        return Ok(Some(v));
                    }
                }
                Err(FmaError::Gateway { source: GatewayError::EmptyCompletion, .. }) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(None)
    }
}

fn strip_instruction_texts(text: &str) -> String {
    let mut out = text.to_string();
    for s in [FAIRNESS_ROLE_INSTRUCTION, PERSONA_SENTENCE, COT_PREAMBLE] {
        out = out.replace(s, "");
    }
    out.trim().to_string()
}

pub fn analyst_prd(task: &TaskDefinition, agents: &FmaAgents, log: &mut Vec<PromptRecord>) -> Result<Prd, FmaError> {
    let raw = match agents.ask(AgentRole::RequirementsAnalyst, &prompts::analyst_prompt(task), 0, log) {
        Err(FmaError::Gateway { source: GatewayError::EmptyCompletion, .. }) => return Err(FmaError::EmptyPrd),
        other => other?,
    };
    let text = strip_instruction_texts(&raw);
    if text.is_empty() {
        return Err(FmaError::EmptyPrd);
    }
    Ok(Prd {
        task_id: task.task_id.clone(),
        text,
        contract: format!("`{}.{}` returns a boolean value.", task.class_name, task.method_name),
    })
}

fn is_dimension_attribute(task: &TaskDefinition, name: &str) -> bool {
    task.attribute(name).is_some_and(|a| a.dimension.is_some() || a.is_sensitive()) || find_dimension(name).is_some()
}

/// Applies the closed-world rule and the dimension guard to an agent's
/// required list.
pub fn finalize_classification(task: &TaskDefinition, required: &[String], fallback: bool) -> FairnessClassification {
    let mut c = FairnessClassification { fallback, ..Default::default() };
    for attr in task.field_layout() {
        let asked = required.iter().any(|r| r == &attr.name);
        if asked && is_dimension_attribute(task, &attr.name) {
            c.guarded.push(attr.name.clone());
            c.restricted.push(attr.name.clone());
        } else if asked {
            c.required.push(attr.name.clone());
        } else {
            c.restricted.push(attr.name.clone());
        }
    }
    c
}

fn parse_required(text: &str) -> Option<Vec<String>> {
    let v = review::json_object(text)?;
    let list = v.get("required")?.as_array()?;
    list.iter().map(|x| x.as_str().map(|s| s.trim().to_string())).collect()
}

pub fn classify_attributes(
    prd: &Prd,
    task: &TaskDefinition,
    agents: &FmaAgents,
    log: &mut Vec<PromptRecord>,
) -> Result<FairnessClassification, FmaError> {
    let prompt = prompts::classification_prompt(task, prd);
    match agents.ask_until(AgentRole::FairnessAnalyst, &prompt, log, parse_required)? {
        Some(required) => Ok(finalize_classification(task, &required, false)),
        None => {
            let related: Vec<String> = task.related.iter().map(|a| a.name.clone()).collect();
            Ok(finalize_classification(task, &related, true))
        }
    }
}

fn ask_for_code(
    role: AgentRole,
    prompt: &str,
    agents: &FmaAgents,
    log: &mut Vec<PromptRecord>,
    must_parse: bool,
) -> Result<String, FmaError> {
    let accept = |text: &str| extract_code(text).filter(|c| !must_parse || parse_precheck(c).ok);
    agents.ask_until(role, prompt, log, accept)?.ok_or(FmaError::NoCode { role, attempts: REPROMPT_LIMIT + 1 })
}

pub fn develop(
    task: &TaskDefinition,
    prd: &Prd,
    c: &FairnessClassification,
    agents: &FmaAgents,
    log: &mut Vec<PromptRecord>,
) -> Result<String, FmaError> {
    ask_for_code(AgentRole::Developer, &prompts::developer_prompt(task, prd, c), agents, log, false)
}

pub fn functional_review(
    task: &TaskDefinition,
    prd: &Prd,
    c: &FairnessClassification,
    code: &str,
    agents: &FmaAgents,
    log: &mut Vec<PromptRecord>,
) -> Result<FaultReport, FmaError> {
    let mut report = FaultReport::default();
    for f in static_functional_check(task, code) {
        report.push(f);
    }
    if agents.review_mode.asks_agent() {
        let prompt = prompts::functional_review_prompt(task, prd, code);
        match agents.ask_until(AgentRole::FunctionalReviewer, &prompt, log, review::parse_faults)? {
            Some(faults) => {
                for f in review::filter_functional(faults, c) {
                    report.push(f);
                }
            }
            None => report.fallback = true,
        }
    }
    Ok(report)
}

pub fn functional_repair(
    task: &TaskDefinition,
    prd: &Prd,
    c: &FairnessClassification,
    code: &str,
    report: &FaultReport,
    agents: &FmaAgents,
    log: &mut Vec<PromptRecord>,
) -> Result<String, FmaError> {
    if report.is_clean() {
        return Ok(code.to_string());
    }
    let prompt = prompts::functional_repair_prompt(task, prd, c, code, report);
    ask_for_code(AgentRole::FunctionalRepairer, &prompt, agents, log, true)
}

pub fn fairness_review(
    task: &TaskDefinition,
    c: &FairnessClassification,
    code: &str,
    agents: &FmaAgents,
    log: &mut Vec<PromptRecord>,
) -> Result<FaultReport, FmaError> {
    let mode = agents.review_mode;
    let mut report = FaultReport::default();
    let mut agent_answered = false;
    if mode.asks_agent() {
        let prompt = prompts::fairness_review_prompt(task, c, code);
        if let Some(faults) = agents.ask_until(AgentRole::FairnessReviewer, &prompt, log, review::parse_faults)? {
            agent_answered = true;
            for mut f in review::filter_fairness(faults, c) {
                if f.kind == FaultKind::RestrictedReferenced && f.excerpt.is_none() {
                    f.excerpt = f.attribute.as_deref().and_then(|a| crate::snippet::field_excerpt(code, a));
                }
                report.push(f);
            }
        }
    }
    if mode.runs_static() || !agent_answered {
        for f in static_fairness_check(task, c, code).faults {
            report.push(f);
        }
    }
    report.fallback = mode.asks_agent() && !agent_answered;
    Ok(report)
}

pub fn fairness_repair(
    task: &TaskDefinition,
    prd: &Prd,
    c: &FairnessClassification,
    code: &str,
    report: &FaultReport,
    agents: &FmaAgents,
    log: &mut Vec<PromptRecord>,
) -> Result<String, FmaError> {
    if report.is_clean() {
        return Ok(code.to_string());
    }
    let prompt = prompts::fairness_repair_prompt(task, prd, c, code, report);
    ask_for_code(AgentRole::FairnessRepairer, &prompt, agents, log, true)
}

/// Runs the full pipeline for one task. Failures before the first round are
/// errors; a failing round ends the loop and is recorded in its transcript.
pub fn run_fma(task: &TaskDefinition, agents: &FmaAgents, max_rounds: u32) -> Result<PipelineResult, FmaError> {
    if max_rounds > MAX_ROUNDS {
        return Err(FmaError::TooManyRounds(max_rounds));
    }
    let mut setup = Vec::new();
    let prd = analyst_prd(task, agents, &mut setup)?;
    let classification = classify_attributes(&prd, task, agents, &mut setup)?;
    let initial_code = develop(task, &prd, &classification, agents, &mut setup)?;

    let mut code = initial_code.clone();
    let mut rounds = Vec::new();
    let mut terminated_early = false;
    for k in 1..=max_rounds {
        let mut log = Vec::new();
        let mut round = RoundTranscript {
            round: k,
            input_code: code.clone(),
            functional: FaultReport::default(),
            functionally_repaired: None,
            fairness: None,
            output_code: code.clone(),
            prompts: Vec::new(),
            aborted: None,
        };
        let outcome = (|| -> Result<bool, FmaError> {
            round.functional = functional_review(task, &prd, &classification, &code, agents, &mut log)?;
            if !round.functional.is_clean() {
                let repaired = functional_repair(task, &prd, &classification, &code, &round.functional, agents, &mut log)?;
                round.functionally_repaired = Some(repaired.clone());
                round.output_code = repaired;
            }
            let report = fairness_review(task, &classification, &round.output_code, agents, &mut log)?;
            let clean = report.is_clean();
            if !clean {
                round.output_code = fairness_repair(task, &prd, &classification, &round.output_code, &report, agents, &mut log)?;
            }
            round.fairness = Some(report);
            Ok(clean)
        })();
        round.prompts = log;
        match outcome {
            Ok(clean) => {
                code = round.output_code.clone();
                rounds.push(round);
                if clean {
                    terminated_early = true;
                    break;
                }
            }
            Err(e) => {
                round.aborted = Some(e.to_string());
                code = round.output_code.clone();
                rounds.push(round);
                break;
            }
        }
    }
    let final_check = static_fairness_check(task, &classification, &code);
    Ok(PipelineResult {
        task_id: task.task_id.clone(),
        prd,
        classification,
        initial_code,
        final_code: code,
        rounds_executed: rounds.len() as u32,
        rounds,
        terminated_early,
        final_check,
        review_mode: agents.review_mode,
        setup_prompts: setup,
    })
}
