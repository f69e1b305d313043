//! Deterministic providers for tests and offline runs.
//!
//! The always-fair and always-biased personae read the class skeleton out of
//! the prompt, so they answer any task without configuration. Sensitive
//! fields are recognised by their domain annotation matching a registry
//! dimension.

use std::collections::BTreeSet;

use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::LazyLock;

use super::{Provider, ProviderError, ProviderRequest};
use crate::prompt::text_digest;
use crate::roles::{AgentRole, CLASSIFICATION_BEGIN, CLASSIFICATION_END};
use crate::snippet::{parse_precheck, receiver_fields};
use crate::task::registry;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaylistEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub match_digest: Option<String>,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockPersona {
    Fair,
    Biased,
    Silent,
    Playlist(Vec<PlaylistEntry>),
}

#[derive(Debug, Clone)]
pub struct MockProvider {
    persona: MockPersona,
}

impl MockProvider {
    pub fn new(persona: MockPersona) -> Self {
        MockProvider { persona }
    }

    /// Playlist answering every prompt with `response`.
    pub fn constant(response: impl Into<String>) -> Self {
        MockProvider::new(MockPersona::Playlist(vec![PlaylistEntry { match_digest: None, response: response.into() }]))
    }
}

impl Provider for MockProvider {
    fn id(&self) -> String {
        match &self.persona {
            MockPersona::Fair => "mock-fair".into(),
            MockPersona::Biased => "mock-biased".into(),
            MockPersona::Silent => "mock-silent".into(),
            MockPersona::Playlist(entries) => {
                let digest = text_digest(&serde_json::to_string(entries).expect("playlist serializes"));
                format!("mock-playlist-{}", &digest[..12])
            }
        }
    }

    fn default_model(&self) -> String {
        "mock".into()
    }

    fn generate(&self, request: &ProviderRequest<'_>) -> Result<String, ProviderError> {
        match &self.persona {
            MockPersona::Silent => Ok(String::new()),
            MockPersona::Playlist(entries) => {
                let digest = text_digest(request.prompt);
                let matching: Vec<&PlaylistEntry> =
                    entries.iter().filter(|e| e.match_digest.as_ref().is_none_or(|d| *d == digest)).collect();
                if matching.is_empty() {
                    return Err(ProviderError::Rejected(format!("no playlist entry for prompt {digest}")));
                }
                Ok(matching[request.sample_index as usize % matching.len()].response.clone())
            }
            MockPersona::Fair => Ok(respond(request.prompt, false)),
            MockPersona::Biased => Ok(respond(request.prompt, true)),
        }
    }
}

/// One field declaration of the prompt's class skeleton.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonField {
    pub name: String,
    pub sensitive: bool,
    /// Python literal of the first domain value (the lower bound for ranges).
    pub first_literal: String,
    pub is_range: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonInfo {
    pub class_name: String,
    pub method_name: String,
    pub docstring: String,
    pub fields: Vec<SkeletonField>,
}

static CLASS_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?m)^class (\w+)\s*:").unwrap());
static FIELD_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?m)^    (\w+): \w+ # (.+)$").unwrap());
static METHOD_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?m)^    def (\w+)\(self\)").unwrap());
static DOC_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r#"(?s)"""\s*(.*?)\s*""""#).unwrap());
static STR_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"'((?:[^'\\]|\\.)*)'").unwrap());
static FENCE_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)```[A-Za-z0-9_+-]*[ \t]*\r?\n(.*?)```").unwrap());

impl SkeletonInfo {
    /// Reads the first class skeleton found in `prompt`.
    pub fn from_prompt(prompt: &str) -> Option<SkeletonInfo> {
        let class_name = CLASS_RE.captures(prompt)?[1].to_string();
        let method_name = METHOD_RE.captures(prompt)?[1].to_string();
        let docstring = DOC_RE.captures(prompt).map(|c| c[1].to_string()).unwrap_or_default();
        let dims: Vec<BTreeSet<String>> = registry().iter().map(|d| d.literals().into_iter().collect()).collect();
        let fields = FIELD_RE
            .captures_iter(prompt)
            .map(|c| {
                let name = c[1].to_string();
                let annotation = c[2].trim();
                let (first_literal, is_range, values) = if let Some(rest) = annotation.strip_prefix("range [") {
                    let lo = rest.split(',').next().unwrap_or("0").trim().to_string();
                    (lo, true, BTreeSet::new())
                } else {
                    let inner = annotation.trim_start_matches('[').trim_end_matches(']');
                    let first = inner.split(", ").next().unwrap_or_default().to_string();
                    let values: BTreeSet<String> = STR_RE.captures_iter(inner).map(|m| m[1].to_lowercase()).collect();
                    (first, false, values)
                };
                let sensitive = !values.is_empty() && dims.contains(&values);
                SkeletonField { name, sensitive, first_literal, is_range }
            })
            .collect();
        Some(SkeletonInfo { class_name, method_name, docstring, fields })
    }

    pub fn related(&self) -> impl Iterator<Item = &SkeletonField> {
        self.fields.iter().filter(|f| !f.sensitive)
    }

    pub fn sensitive(&self) -> impl Iterator<Item = &SkeletonField> {
        self.fields.iter().filter(|f| f.sensitive)
    }

    fn method(&self, condition: &str) -> String {
        format!(
            "class {}:\n    def {}(self) -> bool:\n        \"\"\"{}\"\"\"\n        if {condition}:\n            return True\n        return False\n",
            self.class_name, self.method_name, self.docstring
        )
    }

    fn test_of(f: &SkeletonField) -> String {
        if f.is_range {
            format!("self.{} >= {}", f.name, f.first_literal)
        } else {
            format!("self.{} == {}", f.name, f.first_literal)
        }
    }

    /// A method conditioning on every related field and no sensitive one.
    pub fn fair_code(&self) -> String {
        let tests: Vec<String> = self.related().map(Self::test_of).collect();
        self.method(&if tests.is_empty() { "True".to_string() } else { tests.join(" and ") })
    }

    /// A method excluding the first value of the first sensitive field,
    /// combined with a test on the first related field.
    pub fn biased_code(&self) -> String {
        let Some(s) = self.sensitive().next() else { return self.fair_code() };
        let mut cond = format!("self.{} != {}", s.name, s.first_literal);
        if let Some(r) = self.related().next() {
            cond.push_str(&format!(" and self.{} == {}", r.name, r.first_literal));
        }
        self.method(&cond)
    }
}

fn fenced(code: &str) -> String {
    format!("```python\n{code}```\n")
}

fn names(fields: impl Iterator<Item = impl AsRef<str>>) -> Vec<String> {
    fields.map(|f| f.as_ref().to_string()).collect()
}

/// Parses `REQUIRED:` and `RESTRICTED:` lines inside the classification block.
pub(crate) fn classification_block(prompt: &str) -> Option<(Vec<String>, Vec<String>)> {
    let start = prompt.find(CLASSIFICATION_BEGIN)?;
    let end = prompt[start..].find(CLASSIFICATION_END).map(|e| start + e).unwrap_or(prompt.len());
    let block = &prompt[start..end];
    let list = |label: &str| -> Vec<String> {
        block
            .lines()
            .find_map(|l| l.trim().strip_prefix(label))
            .map(|rest| rest.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty() && s != "(none)").collect())
            .unwrap_or_default()
    };
    Some((list("REQUIRED:"), list("RESTRICTED:")))
}

fn respond(prompt: &str, biased: bool) -> String {
    let role = AgentRole::from_prompt(prompt);
    let Some(info) = SkeletonInfo::from_prompt(prompt) else {
        return "I need the class definition to proceed.".into();
    };
    let related = names(info.related().map(|f| &f.name));
    let sensitive = names(info.sensitive().map(|f| &f.name));
    let code = if biased { info.biased_code() } else { info.fair_code() };
    match role {
        None | Some(AgentRole::Developer | AgentRole::FunctionalRepairer | AgentRole::FairnessRepairer) => {
            format!("Here is the implementation.\n\n{}", fenced(&code))
        }
        Some(AgentRole::RequirementsAnalyst) => format!(
            "# Product Requirements: {}.{}\n\nInputs: {}\nDecision inputs: {}\nDecision criteria: {}\nOutput contract: the method returns a boolean value.\n",
            info.class_name,
            info.method_name,
            names(info.fields.iter().map(|f| &f.name)).join(", "),
            related.join(", "),
            info.docstring
        ),
        Some(AgentRole::FairnessAnalyst) => serde_json::json!({ "required": related, "restricted": sensitive }).to_string(),
        Some(AgentRole::FunctionalReviewer) => {
            let faults = match FENCE_RE.captures(prompt) {
                Some(c) if !parse_precheck(&c[1]).ok => {
                    vec![serde_json::json!({ "kind": "syntax", "attribute": null, "hint": "the code does not parse" })]
                }
                _ => Vec::new(),
            };
            serde_json::json!({ "faults": faults }).to_string()
        }
        Some(AgentRole::FairnessReviewer) => {
            if biased {
                return r#"{"faults": []}"#.into();
            }
            let (required, restricted) = classification_block(prompt).unwrap_or((related, sensitive));
            let used: BTreeSet<String> = FENCE_RE
                .captures(prompt)
                .and_then(|c| receiver_fields(&c[1], &info.class_name, &info.method_name).ok())
                .unwrap_or_default();
            let mut faults = Vec::new();
            for r in restricted.iter().filter(|r| used.contains(*r)) {
                faults.push(serde_json::json!({
                    "kind": "restricted-referenced",
                    "attribute": r,
                    "hint": format!("remove every condition on {r}"),
                }));
            }
            for r in required.iter().filter(|r| !used.contains(*r)) {
                faults.push(serde_json::json!({
                    "kind": "required-missing",
                    "attribute": r,
                    "hint": format!("add a condition on {r}"),
                }));
            }
            serde_json::json!({ "faults": faults }).to_string()
        }
        Some(AgentRole::RequirementEngineer) => format!(
            "Requirements for {}.{}:\n1. The method decides using {}.\n2. The method returns a boolean value.\n",
            info.class_name,
            info.method_name,
            related.join(", ")
        ),
        Some(AgentRole::Architect) => format!(
            "Design: a single method `{}` on `{}` evaluating one boolean condition over the attributes {}.\n",
            info.method_name,
            info.class_name,
            related.join(", ")
        ),
        Some(AgentRole::Tester) => format!(
            "Test design: exercise `{}` with each value of {} and check the boolean result.\n",
            info.method_name,
            related.join(", ")
        ),
        Some(AgentRole::ScrumMaster) => format!(
            "User stories:\n- As a reviewer, I want `{}` to decide using {} so that the result follows the task description.\n",
            info.method_name,
            related.join(", ")
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::{render_prompt, PromptStrategy};
    use crate::task::parse_task_file;

    fn journalist_prompt() -> String {
        let task = parse_task_file(include_str!("../../data/tasks/occupation_journalist.task.json")).unwrap();
        render_prompt(&task, PromptStrategy::Cot).rendered_text
    }

    #[test]
    fn skeleton_is_recovered() {
        let info = SkeletonInfo::from_prompt(&journalist_prompt()).unwrap();
        assert_eq!(info.class_name, "Person");
        assert_eq!(info.method_name, "suitable_for_journalist");
        assert_eq!(names(info.related().map(|f| &f.name)), ["major", "communication_skills"]);
        assert_eq!(names(info.sensitive().map(|f| &f.name)), ["gender", "religion"]);
    }

    #[test]
    fn biased_code_matches_figure() {
        let info = SkeletonInfo::from_prompt(&journalist_prompt()).unwrap();
        assert!(info.biased_code().contains("if self.gender != 'transgender' and self.major == 'journalism':"));
        assert!(info.fair_code().contains("self.major == 'journalism' and self.communication_skills == 'high'"));
    }

    #[test]
    fn playlist_selects_by_digest_and_index() {
        let p = MockProvider::new(MockPersona::Playlist(vec![
            PlaylistEntry { match_digest: Some(text_digest("a")), response: "A".into() },
            PlaylistEntry { match_digest: None, response: "any".into() },
        ]));
        let req = |prompt, sample_index| ProviderRequest {
            prompt,
            model: "m",
            temperature: 1.0,
            sample_index,
            max_tokens: 10,
            timeout: std::time::Duration::from_secs(1),
        };
        assert_eq!(p.generate(&req("a", 0)).unwrap(), "A");
        assert_eq!(p.generate(&req("a", 1)).unwrap(), "any");
        assert_eq!(p.generate(&req("b", 0)).unwrap(), "any");
        assert_eq!(p.generate(&req("b", 7)).unwrap(), "any");
    }
}
