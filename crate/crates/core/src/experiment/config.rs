use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::fma::ReviewMode;
use crate::process::{ablation_plan, fairness_roles_plan, workflows_plan, ProcessConfig};
use crate::prompt::{text_digest, PromptStrategy};

pub const RQ1_TEMPERATURES: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];
pub const RQ2_TEMPERATURE: f64 = 1.0;
pub const EVAL_SAMPLES: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Rq1,
    Rq2,
    Custom,
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rq1" => Ok(Preset::Rq1),
            "rq2" => Ok(Preset::Rq2),
            "custom" => Ok(Preset::Custom),
            other => Err(format!("unknown preset `{other}` (expected rq1, rq2 or custom)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub temperatures: Vec<f64>,
    pub strategies: Vec<PromptStrategy>,
    pub samples_per_task: u32,
}

impl SweepConfig {
    /// Five temperatures, default prompting, five samples.
    pub fn rq1() -> Self {
        SweepConfig { temperatures: RQ1_TEMPERATURES.to_vec(), strategies: vec![PromptStrategy::Default], samples_per_task: EVAL_SAMPLES }
    }

    /// Temperature 1.0 with every prompting strategy, five samples.
    pub fn rq2() -> Self {
        SweepConfig { temperatures: vec![RQ2_TEMPERATURE], strategies: PromptStrategy::ALL.to_vec(), samples_per_task: EVAL_SAMPLES }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowPlan {
    Workflows,
    FairnessRoles,
    Ablation,
}

impl FlowPlan {
    pub fn configs(self) -> Vec<ProcessConfig> {
        match self {
            FlowPlan::Workflows => workflows_plan(),
            FlowPlan::FairnessRoles => fairness_roles_plan(),
            FlowPlan::Ablation => ablation_plan(),
        }
    }
}

impl FromStr for FlowPlan {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "workflows" => Ok(FlowPlan::Workflows),
            "fairness-roles" => Ok(FlowPlan::FairnessRoles),
            "ablation" => Ok(FlowPlan::Ablation),
            other => Err(format!("unknown plan `{other}` (expected workflows, fairness-roles or ablation)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Pipeline {
    Eval { preset: Preset, sweep: SweepConfig },
    Fma { max_rounds: u32, review_mode: ReviewMode, role_providers: BTreeMap<String, String> },
    Flow { plan: FlowPlan, configs: Vec<ProcessConfig> },
}

impl Pipeline {
    pub fn name(&self) -> &'static str {
        match self {
            Pipeline::Eval { .. } => "eval",
            Pipeline::Fma { .. } => "fma",
            Pipeline::Flow { .. } => "flow",
        }
    }
}

/// Everything that determines a run's results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub tasks_digest: String,
    pub task_ids: Vec<String>,
    pub provider: String,
    pub model: String,
    pub pipeline: Pipeline,
    pub suite_budget: usize,
    pub seed: u64,
    pub sandbox_timeout: f64,
    pub executor: String,
}

impl RunConfig {
    pub fn digest(&self) -> String {
        text_digest(&serde_json::to_string(self).expect("config serializes"))
    }

    /// Report row labels in emission order.
    pub fn report_labels(&self) -> Vec<String> {
        match &self.pipeline {
            Pipeline::Eval { preset, sweep } => {
                let mut out = Vec::new();
                for t in &sweep.temperatures {
                    for s in &sweep.strategies {
                        out.push(eval_label(*preset, *t, *s));
                    }
                }
                out
            }
            Pipeline::Fma { .. } => FMA_ROW_LABELS.iter().map(|s| s.to_string()).collect(),
            Pipeline::Flow { configs, .. } => configs.iter().map(|c| c.label.clone()).collect(),
        }
    }

    /// Label of the group other groups are tested against.
    pub fn reference_label(&self) -> Option<String> {
        match &self.pipeline {
            Pipeline::Eval { preset: Preset::Rq1, sweep } => {
                sweep.temperatures.contains(&RQ2_TEMPERATURE).then(|| eval_label(Preset::Rq1, RQ2_TEMPERATURE, PromptStrategy::Default))
            }
            Pipeline::Eval { preset: Preset::Rq2, sweep } => sweep
                .strategies
                .contains(&PromptStrategy::Default)
                .then(|| eval_label(Preset::Rq2, RQ2_TEMPERATURE, PromptStrategy::Default)),
            Pipeline::Eval { preset: Preset::Custom, .. } => self.report_labels().into_iter().next(),
            _ => None,
        }
    }

    pub fn review_mode(&self) -> String {
        match &self.pipeline {
            Pipeline::Fma { review_mode, .. } => review_mode.to_string(),
            _ => "n/a".into(),
        }
    }
}

pub const FMA_ROW_LABELS: [&str; 4] = ["Developer", "Repairer (R1)", "Repairer (R2)", "Repairer (R3)"];

pub fn strategy_label(s: PromptStrategy) -> &'static str {
    match s {
        PromptStrategy::Default => "Default",
        PromptStrategy::Cot => "CoT",
        PromptStrategy::Pcot => "P-CoT",
    }
}

/// Temperatures print with at least one decimal: `1.0`, `0.25`.
pub struct Temp(pub f64);

impl fmt::Display for Temp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.fract() == 0.0 {
            write!(f, "{:.1}", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

pub fn eval_label(preset: Preset, t: f64, s: PromptStrategy) -> String {
    match preset {
        Preset::Rq1 => format!("T={}", Temp(t)),
        Preset::Rq2 => strategy_label(s).to_string(),
        Preset::Custom => format!("{} T={}", strategy_label(s), Temp(t)),
    }
}
