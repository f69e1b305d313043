//! Agent roles shared by the repair pipeline and the process models.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    RequirementsAnalyst,
    FairnessAnalyst,
    Developer,
    FunctionalReviewer,
    FunctionalRepairer,
    FairnessReviewer,
    FairnessRepairer,
    RequirementEngineer,
    Architect,
    Tester,
    ScrumMaster,
}

impl AgentRole {
    pub const ALL: [AgentRole; 11] = [
        AgentRole::RequirementsAnalyst,
        AgentRole::FairnessAnalyst,
        AgentRole::Developer,
        AgentRole::FunctionalReviewer,
        AgentRole::FunctionalRepairer,
        AgentRole::FairnessReviewer,
        AgentRole::FairnessRepairer,
        AgentRole::RequirementEngineer,
        AgentRole::Architect,
        AgentRole::Tester,
        AgentRole::ScrumMaster,
    ];

    pub fn title(self) -> &'static str {
        match self {
            AgentRole::RequirementsAnalyst => "Requirements Analyst",
            AgentRole::FairnessAnalyst => "Fairness Requirements Analyst",
            AgentRole::Developer => "Developer",
            AgentRole::FunctionalReviewer => "Functional Reviewer",
            AgentRole::FunctionalRepairer => "Functional Repairer",
            AgentRole::FairnessReviewer => "Fairness Reviewer",
            AgentRole::FairnessRepairer => "Fairness Repairer",
            AgentRole::RequirementEngineer => "Requirement Engineer",
            AgentRole::Architect => "Architect",
            AgentRole::Tester => "Tester",
            AgentRole::ScrumMaster => "Scrum Master",
        }
    }

    /// First line of every prompt addressed to this role.
    pub fn header(self) -> String {
        format!("You are the {}.", self.title())
    }

    /// Reads the role back from a prompt's first line.
    pub fn from_prompt(prompt: &str) -> Option<AgentRole> {
        let first = prompt.lines().next()?.trim();
        AgentRole::ALL.into_iter().find(|r| first == r.header())
    }

    pub fn id(self) -> &'static str {
        match self {
            AgentRole::RequirementsAnalyst => "requirements_analyst",
            AgentRole::FairnessAnalyst => "fairness_analyst",
            AgentRole::Developer => "developer",
            AgentRole::FunctionalReviewer => "functional_reviewer",
            AgentRole::FunctionalRepairer => "functional_repairer",
            AgentRole::FairnessReviewer => "fairness_reviewer",
            AgentRole::FairnessRepairer => "fairness_repairer",
            AgentRole::RequirementEngineer => "requirement_engineer",
            AgentRole::Architect => "architect",
            AgentRole::Tester => "tester",
            AgentRole::ScrumMaster => "scrum_master",
        }
    }
}

impl fmt::Display for AgentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Delimiters of the required/restricted block appended to requirement
/// documents.
pub const CLASSIFICATION_BEGIN: &str = "=== FAIRNESS CLASSIFICATION ===";
pub const CLASSIFICATION_END: &str = "=== END CLASSIFICATION ===";
