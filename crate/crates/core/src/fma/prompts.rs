//! Prompt builders for the repair pipeline agents.
//!
//! Builders take nothing but the task, the requirements document, the
//! attribute classification, code and fault reports.

use crate::prompt::class_skeleton;
use crate::roles::{AgentRole, CLASSIFICATION_BEGIN, CLASSIFICATION_END};
use crate::task::TaskDefinition;

use super::{FairnessClassification, FaultReport, Prd};

const FAULT_FORMAT: &str = "Reply with a JSON object of the form {\"faults\": [{\"kind\": ..., \"attribute\": ..., \"hint\": ...}]}. \
Use an empty list when there is nothing to report.";

fn fenced(code: &str) -> String {
    format!("```python\n{}\n```", code.trim_end())
}

fn frame(role: AgentRole, instruction: &str, task: &TaskDefinition, sections: &[String]) -> String {
    let mut out = format!("{}\n{instruction}\n\n{}", role.header(), class_skeleton(task));
    for s in sections {
        out.push('\n');
        out.push_str(s.trim_end());
        out.push('\n');
    }
    out
}

/// The delimited required/restricted block appended to the requirements.
pub fn classification_block(c: &FairnessClassification) -> String {
    let list = |v: &[String]| if v.is_empty() { "(none)".to_string() } else { v.join(", ") };
    format!("{CLASSIFICATION_BEGIN}\nREQUIRED: {}\nRESTRICTED: {}\n{CLASSIFICATION_END}", list(&c.required), list(&c.restricted))
}

/// Requirements text followed by the classification block.
pub fn fairness_aware_prd(prd: &Prd, c: &FairnessClassification) -> String {
    format!("Requirements:\n{}\n\n{}", prd.document(), classification_block(c))
}

fn faults_section(report: &FaultReport) -> String {
    let body = serde_json::to_string_pretty(&report.faults).expect("faults serialize");
    format!("Fault report:\n{body}")
}

pub fn analyst_prompt(task: &TaskDefinition) -> String {
    frame(
        AgentRole::RequirementsAnalyst,
        "Write a structured product requirements document for the method below. Describe its inputs, \
the decision criteria and the output contract. Do not write code.",
        task,
        &[],
    )
}

pub fn classification_prompt(task: &TaskDefinition, prd: &Prd) -> String {
    let attrs: Vec<&str> = task.field_layout().iter().map(|a| a.name.as_str()).collect();
    frame(
        AgentRole::FairnessAnalyst,
        "Decide which attributes the method needs for correct decision logic. An attribute that the task \
description does not explicitly require is restricted. Reply with a JSON object \
{\"required\": [...], \"restricted\": [...]} covering every attribute.",
        task,
        &[format!("Requirements:\n{}", prd.document()), format!("Attributes: {}", attrs.join(", "))],
    )
}

pub fn developer_prompt(task: &TaskDefinition, prd: &Prd, c: &FairnessClassification) -> String {
    frame(
        AgentRole::Developer,
        "Implement the method according to the requirements. Use the attributes listed as REQUIRED and \
never reference an attribute listed as RESTRICTED. Return the complete class in one Python code block.",
        task,
        &[fairness_aware_prd(prd, c)],
    )
}

pub fn functional_review_prompt(task: &TaskDefinition, prd: &Prd, code: &str) -> String {
    frame(
        AgentRole::FunctionalReviewer,
        &format!(
            "Review the code for functional correctness only: syntax, structure and whether the decision \
logic implements the requirements. Fault kinds: syntax, structure, logic. {FAULT_FORMAT}"
        ),
        task,
        &[format!("Requirements:\n{}", prd.document()), format!("Code:\n{}", fenced(code))],
    )
}

pub fn functional_repair_prompt(task: &TaskDefinition, prd: &Prd, c: &FairnessClassification, code: &str, report: &FaultReport) -> String {
    frame(
        AgentRole::FunctionalRepairer,
        "Fix every fault in the report and return the complete corrected class in one Python code block.",
        task,
        &[fairness_aware_prd(prd, c), faults_section(report), format!("Code:\n{}", fenced(code))],
    )
}

pub fn fairness_review_prompt(task: &TaskDefinition, c: &FairnessClassification, code: &str) -> String {
    frame(
        AgentRole::FairnessReviewer,
        &format!(
            "Inspect the conditions in the code. Report every condition that references a RESTRICTED \
attribute (kind restricted-referenced) and every REQUIRED attribute the conditions omit (kind \
required-missing). Do not edit the code. {FAULT_FORMAT}"
        ),
        task,
        &[classification_block(c), format!("Code:\n{}", fenced(code))],
    )
}

pub fn fairness_repair_prompt(task: &TaskDefinition, prd: &Prd, c: &FairnessClassification, code: &str, report: &FaultReport) -> String {
    frame(
        AgentRole::FairnessRepairer,
        "Rewrite the whole method so that it addresses every fault in the report while keeping the \
required decision logic. Return the complete class in one Python code block.",
        task,
        &[fairness_aware_prd(prd, c), faults_section(report), format!("Code:\n{}", fenced(code))],
    )
}
