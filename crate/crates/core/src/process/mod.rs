//! Waterfall and Scrum multi-agent process models with per-role fairness
//! instructions and role ablation.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::fma::PromptRecord;
use crate::gateway::{extract_code, Gateway, GatewayError, GenerationConfig};
use crate::prompt::{class_skeleton, inject_fairness_instruction, FAIRNESS_ROLE_INSTRUCTION};
use crate::roles::AgentRole;
use crate::task::TaskDefinition;

pub const DEFAULT_TEMPERATURE: f64 = 0.8;
pub const MAX_REFINEMENT_ROUNDS: u32 = 3;
const CODE_ATTEMPTS: u32 = 3;

/// Development roles in pipeline order.
pub const DEVELOPMENT_ROLES: [AgentRole; 4] =
    [AgentRole::RequirementEngineer, AgentRole::Architect, AgentRole::Developer, AgentRole::Tester];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessModel {
    Waterfall,
    Scrum,
}

impl ProcessModel {
    pub fn name(self) -> &'static str {
        match self {
            ProcessModel::Waterfall => "waterfall",
            ProcessModel::Scrum => "scrum",
        }
    }
}

impl fmt::Display for ProcessModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProcessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{role}: {source}")]
    Gateway { role: AgentRole, source: GatewayError },
    #[error("{role}: no extractable code in reply")]
    Extraction { role: AgentRole },
    #[error("scrum_master: nothing to consolidate")]
    NothingToConsolidate,
    #[error("writing transcript: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessConfig {
    pub label: String,
    pub model: ProcessModel,
    pub roles: Vec<AgentRole>,
    pub fairness_instructed: BTreeSet<AgentRole>,
    /// Rounds of tester feedback returned to the developer.
    pub refinement_rounds: u32,
    pub temperature: f64,
}

impl ProcessConfig {
    pub fn waterfall(label: &str) -> Self {
        ProcessConfig {
            label: label.into(),
            model: ProcessModel::Waterfall,
            roles: DEVELOPMENT_ROLES.to_vec(),
            fairness_instructed: BTreeSet::new(),
            refinement_rounds: 1,
            temperature: DEFAULT_TEMPERATURE,
        }
    }

    pub fn scrum(label: &str) -> Self {
        let mut roles = DEVELOPMENT_ROLES.to_vec();
        roles.push(AgentRole::ScrumMaster);
        ProcessConfig { model: ProcessModel::Scrum, roles, ..ProcessConfig::waterfall(label) }
    }

    pub fn without(mut self, removed: &[AgentRole]) -> Self {
        self.roles.retain(|r| !removed.contains(r));
        self
    }

    pub fn instructing(mut self, roles: &[AgentRole]) -> Self {
        self.fairness_instructed.extend(roles.iter().copied());
        self
    }

    pub fn has(&self, role: AgentRole) -> bool {
        self.roles.contains(&role)
    }

    pub fn validate(&self) -> Result<(), ProcessError> {
        let err = |m: String| Err(ProcessError::Config(m));
        if !self.has(AgentRole::Developer) {
            return err("the developer role is always required".into());
        }
        for r in &self.roles {
            let allowed = DEVELOPMENT_ROLES.contains(r) || (*r == AgentRole::ScrumMaster && self.model == ProcessModel::Scrum);
            if !allowed {
                return err(format!("role {r} cannot take part in a {} pipeline", self.model));
            }
        }
        if self.model == ProcessModel::Scrum && !self.has(AgentRole::ScrumMaster) {
            return err("a scrum pipeline needs the scrum_master role".into());
        }
        if let Some(r) = self.fairness_instructed.iter().find(|r| !self.has(**r)) {
            return err(format!("fairness instruction targets inactive role {r}"));
        }
        if self.refinement_rounds > MAX_REFINEMENT_ROUNDS {
            return err(format!("at most {MAX_REFINEMENT_ROUNDS} refinement rounds (got {})", self.refinement_rounds));
        }
        Ok(())
    }

    pub fn slug(&self) -> String {
        let mut out = String::new();
        for c in self.label.to_lowercase().chars() {
            if c.is_ascii_alphanumeric() {
                out.push(c);
            } else if !out.ends_with('-') {
                out.push('-');
            }
        }
        out.trim_matches('-').to_string()
    }
}

/// Waterfall and Scrum with every role active.
pub fn workflows_plan() -> Vec<ProcessConfig> {
    vec![ProcessConfig::waterfall("Waterfall"), ProcessConfig::scrum("Scrum")]
}

/// Waterfall with the fairness instruction on no role, every role, or one
/// role at a time. Product manager maps to the requirement engineer and QA
/// to the tester.
pub fn fairness_roles_plan() -> Vec<ProcessConfig> {
    use AgentRole::*;
    vec![
        ProcessConfig::waterfall("None (Baseline)"),
        ProcessConfig::waterfall("All Roles").instructing(&DEVELOPMENT_ROLES),
        ProcessConfig::waterfall("Product Manager").instructing(&[RequirementEngineer]),
        ProcessConfig::waterfall("Architect").instructing(&[Architect]),
        ProcessConfig::waterfall("Developer").instructing(&[Developer]),
        ProcessConfig::waterfall("QA").instructing(&[Tester]),
    ]
}

pub fn ablation_plan() -> Vec<ProcessConfig> {
    use AgentRole::*;
    vec![
        ProcessConfig::waterfall("All Roles (Baseline)"),
        ProcessConfig::waterfall("No Tester").without(&[Tester]),
        ProcessConfig::waterfall("No Architect + Tester").without(&[Architect, Tester]),
        ProcessConfig::waterfall("No Req. Eng. + Tester").without(&[RequirementEngineer, Tester]),
        ProcessConfig::waterfall("Developer Only").without(&[RequirementEngineer, Architect, Tester]),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Requirements,
    Design,
    Code,
    TestDesign,
    Discussion,
    UserStories,
}

impl ArtifactKind {
    fn title(self) -> &'static str {
        match self {
            ArtifactKind::Requirements => "Requirements document",
            ArtifactKind::Design => "Design document",
            ArtifactKind::Code => "Code",
            ArtifactKind::TestDesign => "Test design",
            ArtifactKind::Discussion => "Sprint discussion",
            ArtifactKind::UserStories => "User stories",
        }
    }

    fn file_name(self) -> &'static str {
        match self {
            ArtifactKind::Requirements => "requirements.md",
            ArtifactKind::Design => "design.md",
            ArtifactKind::Code => "code.py",
            ArtifactKind::TestDesign => "test_design.md",
            ArtifactKind::Discussion => "discussion.md",
            ArtifactKind::UserStories => "user_stories.md",
        }
    }

    /// What a waterfall role produces.
    pub fn of_role(role: AgentRole) -> Option<ArtifactKind> {
        match role {
            AgentRole::RequirementEngineer => Some(ArtifactKind::Requirements),
            AgentRole::Architect => Some(ArtifactKind::Design),
            AgentRole::Developer => Some(ArtifactKind::Code),
            AgentRole::Tester => Some(ArtifactKind::TestDesign),
            AgentRole::ScrumMaster => Some(ArtifactKind::UserStories),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub kind: ArtifactKind,
    pub role: AgentRole,
    /// Position in the run's sequence of produced artifacts.
    pub seq: u64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BufferEntry {
    pub role: AgentRole,
    pub seq: u64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessResult {
    pub task_id: String,
    pub config: ProcessConfig,
    pub artifacts: Vec<Artifact>,
    /// Developer revisions made from tester feedback.
    pub refinements: Vec<Artifact>,
    pub buffer: Vec<BufferEntry>,
    pub final_code: String,
    pub transcript: Vec<PromptRecord>,
}

impl ProcessResult {
    pub fn artifact(&self, kind: ArtifactKind) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.kind == kind)
    }

    pub fn artifact_kinds(&self) -> Vec<ArtifactKind> {
        self.artifacts.iter().map(|a| a.kind).collect()
    }

    /// Writes the run under `dir/<model>/<config slug>/`.
    pub fn write_transcript(&self, dir: &Path) -> Result<(), ProcessError> {
        let root = dir.join(self.config.model.name()).join(self.config.slug());
        std::fs::create_dir_all(&root)?;
        std::fs::write(root.join("config.json"), pretty(&self.config))?;
        for a in &self.artifacts {
            std::fs::write(root.join(a.kind.file_name()), format!("{}\n", a.text.trim_end()))?;
        }
        for (i, a) in self.refinements.iter().enumerate() {
            std::fs::write(root.join(format!("code.refined{}.py", i + 1)), format!("{}\n", a.text.trim_end()))?;
        }
        if !self.buffer.is_empty() {
            std::fs::write(root.join("buffer.json"), pretty(&self.buffer))?;
        }
        std::fs::write(root.join("final_code.py"), format!("{}\n", self.final_code.trim_end()))?;
        std::fs::write(root.join("prompts.json"), pretty(&self.transcript))?;
        Ok(())
    }
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("transcript serializes") + "\n"
}

fn role_brief(role: AgentRole) -> (&'static str, &'static [&'static str]) {
    match role {
        AgentRole::RequirementEngineer => (
            "You turn the task description into a requirements document for the development team.",
            &[
                "Read the class definition and the docstring.",
                "List the inputs the decision depends on and what each one means.",
                "State the expected output of the method.",
            ],
        ),
        AgentRole::Architect => (
            "You design the implementation that the developer will follow.",
            &[
                "Read the requirements in the context.",
                "Describe the structure of the method and the conditions it evaluates.",
                "Keep the design minimal and consistent with the class definition.",
            ],
        ),
        AgentRole::Developer => (
            "You implement the method.",
            &[
                "Read every artifact in the context.",
                "Write the complete class with the method body.",
                "Return the code in one Python code block.",
            ],
        ),
        AgentRole::Tester => (
            "You design tests for the implementation and report problems back to the developer.",
            &[
                "Read the code and the artifacts in the context.",
                "Describe test cases covering the decision conditions.",
                "List any defects the developer should fix.",
            ],
        ),
        AgentRole::ScrumMaster => (
            "You run the sprint planning meeting and turn the discussion into user stories.",
            &[
                "Read the sprint discussion in the context.",
                "Consolidate it into user stories for the developer.",
                "Start your answer with \"User stories:\".",
            ],
        ),
        _ => ("", &[]),
    }
}

/// Role prompt: description, numbered steps, the class skeleton and a
/// context field with prior artifacts. Instructed roles get the fairness
/// sentence appended.
pub fn role_prompt(task: &TaskDefinition, role: AgentRole, step: &str, context: &[(String, String)], instructed: bool) -> String {
    let (description, steps) = role_brief(role);
    let mut out = format!("{}\n{description}\n", role.header());
    if !step.is_empty() {
        out.push_str(step);
        out.push('\n');
    }
    for (i, s) in steps.iter().enumerate() {
        out.push_str(&format!("{}. {s}\n", i + 1));
    }
    out.push('\n');
    out.push_str(&class_skeleton(task));
    out.push_str("\nContext:\n");
    if context.is_empty() {
        out.push_str("(none)\n");
    }
    for (title, text) in context {
        let clean = text.replace(FAIRNESS_ROLE_INSTRUCTION, "");
        out.push_str(&format!("--- {title} ---\n{}\n", clean.trim_end()));
    }
    if instructed {
        match inject_fairness_instruction(&out) {
            Ok(p) => p,
            Err(_) => out,
        }
    } else {
        out
    }
}

struct Runner<'a> {
    task: &'a TaskDefinition,
    cfg: &'a ProcessConfig,
    gateway: &'a Gateway,
    model: String,
    transcript: Vec<PromptRecord>,
    seq: u64,
}

impl Runner<'_> {
    fn ask(&mut self, role: AgentRole, prompt: String, attempt: u32) -> Result<String, ProcessError> {
        let gen = GenerationConfig::new(self.model.clone(), self.cfg.temperature, 0);
        let prompt = if attempt == 0 {
            prompt
        } else {
            format!("{prompt}Your previous reply (attempt {attempt}) had no code block. Return the code in one Python code block.\n")
        };
        match self.gateway.complete_text(&prompt, &gen) {
            Ok(c) => {
                self.transcript.push(PromptRecord { role, attempt, prompt, response: Some(c.text.clone()), error: None });
                Ok(c.text)
            }
            Err(e) => {
                self.transcript.push(PromptRecord { role, attempt, prompt, response: None, error: Some(e.to_string()) });
                Err(ProcessError::Gateway { role, source: e })
            }
        }
    }

    fn prompt(&self, role: AgentRole, step: &str, context: &[(String, String)]) -> String {
        role_prompt(self.task, role, step, context, self.cfg.fairness_instructed.contains(&role))
    }

    fn text(&mut self, role: AgentRole, step: &str, context: &[(String, String)]) -> Result<String, ProcessError> {
        let p = self.prompt(role, step, context);
        Ok(self.ask(role, p, 0)?.trim().to_string())
    }

    fn code(&mut self, step: &str, context: &[(String, String)]) -> Result<String, ProcessError> {
        let role = AgentRole::Developer;
        let p = self.prompt(role, step, context);
        for attempt in 0..CODE_ATTEMPTS {
            if let Some(code) = extract_code(&self.ask(role, p.clone(), attempt)?) {
                return Ok(code);
            }
        }
        Err(ProcessError::Extraction { role })
    }

    fn artifact(&mut self, kind: ArtifactKind, role: AgentRole, text: String) -> Artifact {
        self.seq += 1;
        Artifact { kind, role, seq: self.seq, text }
    }

    /// Tester review followed by developer revisions.
    fn test_loop(
        &mut self,
        context: &mut Vec<(String, String)>,
        artifacts: &mut Vec<Artifact>,
        code: &mut String,
    ) -> Result<Vec<Artifact>, ProcessError> {
        let mut refinements = Vec::new();
        if !self.cfg.has(AgentRole::Tester) {
            return Ok(refinements);
        }
        let feedback = self.text(AgentRole::Tester, "", context)?;
        let test = self.artifact(ArtifactKind::TestDesign, AgentRole::Tester, feedback);
        context.push((ArtifactKind::TestDesign.title().into(), test.text.clone()));
        artifacts.push(test);
        for round in 1..=self.cfg.refinement_rounds {
            let step = format!("Revise the code using the test design in the context (refinement round {round}).");
            let revised = self.code(&step, context)?;
            context.retain(|(t, _)| t != ArtifactKind::Code.title());
            context.push((ArtifactKind::Code.title().into(), revised.clone()));
            *code = revised.clone();
            refinements.push(self.artifact(ArtifactKind::Code, AgentRole::Developer, revised));
        }
        Ok(refinements)
    }
}

fn run(
    task: &TaskDefinition,
    cfg: &ProcessConfig,
    gateway: &Gateway,
    model: String,
    expected: ProcessModel,
) -> Result<ProcessResult, ProcessError> {
    if cfg.model != expected {
        return Err(ProcessError::Config(format!("expected a {expected} configuration, got {}", cfg.model)));
    }
    cfg.validate()?;
    let mut r = Runner { task, cfg, gateway, model, transcript: Vec::new(), seq: 0 };
    let mut artifacts = Vec::new();
    let mut buffer = Vec::new();
    let mut context: Vec<(String, String)> = Vec::new();

    match cfg.model {
        ProcessModel::Waterfall => {
            for role in [AgentRole::RequirementEngineer, AgentRole::Architect] {
                if cfg.has(role) {
                    let kind = ArtifactKind::of_role(role).expect("development role");
                    let text = r.text(role, "", &context)?;
                    context.push((kind.title().into(), text.clone()));
                    artifacts.push(r.artifact(kind, role, text));
                }
            }
        }
        ProcessModel::Scrum => {
            let order = DEVELOPMENT_ROLES.iter().chain([AgentRole::ScrumMaster].iter());
            for &role in order.filter(|r| cfg.has(**r)) {
                let discussion: Vec<(String, String)> =
                    buffer.iter().map(|e: &BufferEntry| (format!("{} said", e.role.title()), e.text.clone())).collect();
                let p = r.prompt(role, "Sprint planning: contribute your view of the task to the discussion.", &discussion);
                match r.ask(role, p, 0) {
                    Ok(text) => {
                        r.seq += 1;
                        buffer.push(BufferEntry { role, seq: r.seq, text: text.trim().to_string() });
                    }
                    Err(ProcessError::Gateway { source: GatewayError::EmptyCompletion, .. }) => {}
                    Err(e) => return Err(e),
                }
            }
            if buffer.is_empty() {
                return Err(ProcessError::NothingToConsolidate);
            }
            let discussion: String = buffer.iter().map(|e| format!("{}: {}", e.role.title(), e.text)).collect::<Vec<_>>().join("\n\n");
            artifacts.push(r.artifact(ArtifactKind::Discussion, AgentRole::ScrumMaster, discussion.clone()));
            let stories = match r.text(AgentRole::ScrumMaster, "", &[(ArtifactKind::Discussion.title().into(), discussion)]) {
                Err(ProcessError::Gateway { source: GatewayError::EmptyCompletion, .. }) => return Err(ProcessError::NothingToConsolidate),
                other => other?,
            };
            context.push((ArtifactKind::UserStories.title().into(), stories.clone()));
            artifacts.push(r.artifact(ArtifactKind::UserStories, AgentRole::ScrumMaster, stories));
        }
    }

    let mut code = r.code("", &context)?;
    context.push((ArtifactKind::Code.title().into(), code.clone()));
    artifacts.push(r.artifact(ArtifactKind::Code, AgentRole::Developer, code.clone()));
    let refinements = r.test_loop(&mut context, &mut artifacts, &mut code)?;
    Ok(ProcessResult {
        task_id: task.task_id.clone(),
        config: cfg.clone(),
        artifacts,
        refinements,
        buffer,
        final_code: code,
        transcript: r.transcript,
    })
}

pub fn run_waterfall(task: &TaskDefinition, cfg: &ProcessConfig, gateway: &Gateway) -> Result<ProcessResult, ProcessError> {
    run(task, cfg, gateway, gateway.default_model(), ProcessModel::Waterfall)
}

pub fn run_scrum(task: &TaskDefinition, cfg: &ProcessConfig, gateway: &Gateway) -> Result<ProcessResult, ProcessError> {
    run(task, cfg, gateway, gateway.default_model(), ProcessModel::Scrum)
}

/// Dispatches on the configured process model, querying `model`.
pub fn run_process(task: &TaskDefinition, cfg: &ProcessConfig, gateway: &Gateway, model: &str) -> Result<ProcessResult, ProcessError> {
    run(task, cfg, gateway, model.to_string(), cfg.model)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::gateway::{MockPersona, MockProvider};
    use crate::task::parse_task_file;

    fn journalist() -> TaskDefinition {
        parse_task_file(include_str!("../../data/tasks/occupation_journalist.task.json")).unwrap()
    }

    fn gw(p: MockPersona) -> Gateway {
        Gateway::new(Arc::new(MockProvider::new(p)))
    }

    #[test]
    fn plans_have_expected_shapes() {
        assert_eq!(workflows_plan().len(), 2);
        assert_eq!(fairness_roles_plan().len(), 6);
        assert_eq!(ablation_plan().len(), 5);
        for c in workflows_plan().iter().chain(&fairness_roles_plan()).chain(&ablation_plan()) {
            c.validate().unwrap();
            assert!(c.has(AgentRole::Developer));
        }
        assert!(ProcessConfig::waterfall("x").without(&[AgentRole::Developer]).validate().is_err());
        let mut w = ProcessConfig::waterfall("x");
        w.roles.push(AgentRole::ScrumMaster);
        assert!(w.validate().is_err());
        assert_eq!(ProcessConfig::waterfall("No Req. Eng. + Tester").slug(), "no-req-eng-tester");
    }

    #[test]
    fn waterfall_artifacts_follow_roles() {
        let task = journalist();
        let g = gw(MockPersona::Fair);
        let full = run_waterfall(&task, &ProcessConfig::waterfall("all"), &g).unwrap();
        use ArtifactKind::*;
        assert_eq!(full.artifact_kinds(), [Requirements, Design, Code, TestDesign]);
        assert!(full.artifacts.windows(2).all(|w| w[0].seq < w[1].seq));
        assert_eq!(full.refinements.len(), 1);

        let dev = run_waterfall(&task, &ablation_plan()[4], &g).unwrap();
        assert_eq!(dev.artifact_kinds(), [Code]);
        let two = run_waterfall(&task, &ablation_plan()[3], &g).unwrap();
        assert_eq!(two.artifact_kinds(), [Design, Code]);
    }

    #[test]
    fn instruction_once_per_instructed_prompt() {
        let task = journalist();
        let cfg = ProcessConfig::scrum("all").instructing(&[
            AgentRole::RequirementEngineer,
            AgentRole::Architect,
            AgentRole::Developer,
            AgentRole::Tester,
            AgentRole::ScrumMaster,
        ]);
        let r = run_scrum(&task, &cfg, &gw(MockPersona::Fair)).unwrap();
        for p in &r.transcript {
            assert_eq!(p.prompt.matches(FAIRNESS_ROLE_INSTRUCTION).count(), 1, "{}", p.role);
            assert!(p.prompt.trim_end().ends_with(FAIRNESS_ROLE_INSTRUCTION));
        }
        assert_eq!(r.buffer.len(), 5);
        assert!(r.artifact(ArtifactKind::UserStories).unwrap().text.starts_with("User stories:"));
    }

    #[test]
    fn silent_scrum_has_nothing_to_consolidate() {
        let err = run_scrum(&journalist(), &ProcessConfig::scrum("s"), &gw(MockPersona::Silent)).unwrap_err();
        assert_eq!(err.to_string(), "scrum_master: nothing to consolidate");
        let err = run_waterfall(&journalist(), &ProcessConfig::scrum("s"), &gw(MockPersona::Fair)).unwrap_err();
        assert!(matches!(err, ProcessError::Config(_)));
    }
}
