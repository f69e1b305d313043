use serde::{Deserialize, Serialize};

use super::MetamorphicError;
use crate::snippet::receiver_fields;
use crate::task::{AttributeKind, TaskDefinition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    TP,
    TN,
    FP,
    FN,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageEntry {
    pub attribute: String,
    pub kind: AttributeKind,
    pub classification: Classification,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn add(&mut self, other: Confusion) {
        self.tp += other.tp;
        self.tn += other.tn;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeUsage {
    pub snippet: String,
    pub entries: Vec<UsageEntry>,
}

impl AttributeUsage {
    pub fn get(&self, attribute: &str) -> Option<Classification> {
        self.entries.iter().find(|e| e.attribute == attribute).map(|e| e.classification)
    }

    pub fn counts(&self) -> Confusion {
        let mut c = Confusion::default();
        for e in &self.entries {
            match e.classification {
                Classification::TP => c.tp += 1,
                Classification::TN => c.tn += 1,
                Classification::FP => c.fp += 1,
                Classification::FN => c.fn_ += 1,
            }
        }
        c
    }
}

/// Classifies every task attribute by whether the method reads it from the
/// receiver.
pub fn attribute_usage(snippet: &str, code: &str, task: &TaskDefinition) -> Result<AttributeUsage, MetamorphicError> {
    let used = receiver_fields(code, &task.class_name, &task.method_name).map_err(MetamorphicError::Syntax)?;
    let entries = task
        .attributes()
        .map(|a| {
            let hit = used.contains(&a.name);
            let classification = match (a.kind, hit) {
                (AttributeKind::Related, true) => Classification::TP,
                (AttributeKind::Related, false) => Classification::FN,
                (AttributeKind::Sensitive, true) => Classification::FP,
                (AttributeKind::Sensitive, false) => Classification::TN,
            };
            UsageEntry { attribute: a.name.clone(), kind: a.kind, classification }
        })
        .collect();
    Ok(AttributeUsage { snippet: snippet.to_string(), entries })
}
