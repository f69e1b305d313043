use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::snippet::{field_excerpt, parse_precheck, receiver_fields};
use crate::task::TaskDefinition;

use super::FairnessClassification;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultKind {
    RestrictedReferenced,
    RequiredMissing,
    Syntax,
    Structure,
    Logic,
}

impl FaultKind {
    fn parse(s: &str) -> Option<FaultKind> {
        serde_json::from_value(Value::String(s.trim().to_lowercase().replace('_', "-"))).ok()
    }

    pub fn is_fairness(self) -> bool {
        matches!(self, FaultKind::RestrictedReferenced | FaultKind::RequiredMissing)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewFault {
    pub kind: FaultKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excerpt: Option<String>,
    pub hint: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultReport {
    pub faults: Vec<ReviewFault>,
    /// The agent's answer could not be used; only the static check is reflected.
    #[serde(default)]
    pub fallback: bool,
}

impl FaultReport {
    pub fn is_clean(&self) -> bool {
        self.faults.is_empty()
    }

    /// Adds `fault` unless one with the same kind and attribute is present.
    pub fn push(&mut self, fault: ReviewFault) -> bool {
        if self.faults.iter().any(|f| f.kind == fault.kind && f.attribute == fault.attribute) {
            return false;
        }
        self.faults.push(fault);
        true
    }

    pub fn restricted_referenced(&self) -> BTreeSet<&str> {
        self.faults.iter().filter(|f| f.kind == FaultKind::RestrictedReferenced).filter_map(|f| f.attribute.as_deref()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ReviewMode {
    #[serde(rename = "llm")]
    Llm,
    #[default]
    #[serde(rename = "llm+static")]
    LlmStatic,
    #[serde(rename = "static")]
    Static,
}

impl ReviewMode {
    pub fn name(self) -> &'static str {
        match self {
            ReviewMode::Llm => "llm",
            ReviewMode::LlmStatic => "llm+static",
            ReviewMode::Static => "static",
        }
    }

    pub fn asks_agent(self) -> bool {
        self != ReviewMode::Static
    }

    pub fn runs_static(self) -> bool {
        self != ReviewMode::Llm
    }
}

impl fmt::Display for ReviewMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReviewMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [ReviewMode::Llm, ReviewMode::LlmStatic, ReviewMode::Static]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown review mode `{s}` (expected llm, llm+static or static)"))
    }
}

/// First JSON object in an agent reply, tolerating prose and code fences
/// around it.
pub(crate) fn json_object(text: &str) -> Option<Value> {
    let start = text.find('{')?;
    let mut de = serde_json::Deserializer::from_str(&text[start..]).into_iter::<Value>();
    match de.next() {
        Some(Ok(v @ Value::Object(_))) => Some(v),
        _ => {
            let end = text.rfind('}')?;
            serde_json::from_str(&text[start..=end]).ok().filter(Value::is_object)
        }
    }
}

/// Reads `{"faults": [...]}` (or a bare list) from an agent reply.
pub(crate) fn parse_faults(text: &str) -> Option<Vec<ReviewFault>> {
    let list = match json_object(text) {
        Some(v) => v.get("faults")?.as_array()?.clone(),
        None => {
            let start = text.find('[')?;
            let end = text.rfind(']')?;
            serde_json::from_str::<Vec<Value>>(text.get(start..=end)?).ok()?
        }
    };
    let mut out = Vec::new();
    for item in list {
        let Some(kind) = item.get("kind").and_then(Value::as_str).and_then(FaultKind::parse) else {
            out.push(ReviewFault {
                kind: FaultKind::Logic,
                attribute: None,
                excerpt: None,
                hint: item.get("hint").and_then(Value::as_str).unwrap_or_default().to_string(),
            });
            continue;
        };
        out.push(ReviewFault {
            kind,
            attribute: item.get("attribute").and_then(Value::as_str).map(str::to_string),
            excerpt: item.get("excerpt").and_then(Value::as_str).map(str::to_string),
            hint: item.get("hint").and_then(Value::as_str).unwrap_or_default().to_string(),
        });
    }
    Some(out)
}

fn mentions(text: &str, word: &str) -> bool {
    regex::Regex::new(&format!(r"\b{}\b", regex::escape(word))).map(|re| re.is_match(text)).unwrap_or(false)
}

/// Drops functional faults that talk about restricted attributes.
pub(crate) fn filter_functional(faults: Vec<ReviewFault>, c: &FairnessClassification) -> Vec<ReviewFault> {
    faults
        .into_iter()
        .filter(|f| f.kind != FaultKind::RestrictedReferenced)
        .filter(|f| {
            c.restricted.iter().all(|r| {
                f.attribute.as_deref() != Some(r.as_str()) && !mentions(&f.hint, r) && !f.excerpt.as_deref().is_some_and(|e| mentions(e, r))
            })
        })
        .collect()
}

/// Keeps fairness faults whose attribute matches the classification.
pub(crate) fn filter_fairness(faults: Vec<ReviewFault>, c: &FairnessClassification) -> Vec<ReviewFault> {
    faults
        .into_iter()
        .filter(|f| match (f.kind, f.attribute.as_deref()) {
            (FaultKind::RestrictedReferenced, Some(a)) => c.restricted.iter().any(|r| r == a),
            (FaultKind::RequiredMissing, Some(a)) => c.required.iter().any(|r| r == a),
            _ => false,
        })
        .collect()
}

/// Faults every reviewer must see: code that does not parse or lacks the
/// method under test.
pub fn static_functional_check(task: &TaskDefinition, code: &str) -> Vec<ReviewFault> {
    let pre = parse_precheck(code);
    if let Some(err) = pre.error {
        return vec![ReviewFault {
            kind: FaultKind::Syntax,
            attribute: None,
            excerpt: code.lines().nth(err.line.saturating_sub(1)).map(|l| l.trim().to_string()),
            hint: format!("line {}: {}", err.line, err.message),
        }];
    }
    match receiver_fields(code, &task.class_name, &task.method_name) {
        Ok(_) => Vec::new(),
        Err(e) => vec![ReviewFault {
            kind: FaultKind::Structure,
            attribute: None,
            excerpt: None,
            hint: format!("{}; define `{}` on `{}`", e.message, task.method_name, task.class_name),
        }],
    }
}

/// Receiver-field scan of the method under test against the classification.
pub fn static_fairness_check(task: &TaskDefinition, c: &FairnessClassification, code: &str) -> FaultReport {
    let mut report = FaultReport::default();
    let Ok(used) = receiver_fields(code, &task.class_name, &task.method_name) else {
        return report;
    };
    for r in c.restricted.iter().filter(|r| used.contains(*r)) {
        report.push(ReviewFault {
            kind: FaultKind::RestrictedReferenced,
            attribute: Some(r.clone()),
            excerpt: field_excerpt(code, r),
            hint: format!("remove every condition on `{r}`"),
        });
    }
    for r in c.required.iter().filter(|r| !used.contains(*r)) {
        report.push(ReviewFault {
            kind: FaultKind::RequiredMissing,
            attribute: Some(r.clone()),
            excerpt: None,
            hint: format!("base the decision on `{r}` as the requirements describe"),
        });
    }
    report
}
