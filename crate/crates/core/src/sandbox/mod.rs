//! Execution of candidate snippets against metamorphic suites.
//!
//! The wire protocol is one JSON [`ExecPayload`] on standard input and one
//! JSON [`VerdictDocument`] line on standard output. [`ShimExecutor`] speaks
//! it to an external interpreter process, [`BuiltinExecutor`] evaluates
//! in-process, and [`RecordedExecutor`] replays stored verdicts.

mod builtin;
mod recorded;
mod shim;

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use builtin::BuiltinExecutor;
pub use recorded::{RecordedExecutor, RecordingExecutor};
pub use shim::ShimExecutor;

use crate::metamorphic::{ExecutionVerdict, MetamorphicSuite, Outcome};
use crate::prompt::text_digest;
use crate::snippet::PrecheckError;
use crate::task::{AttributeKind, TaskDefinition};

pub const PAYLOAD_SCHEMA: &str = include_str!("../../schemas/payload.schema.json");
pub const VERDICT_SCHEMA: &str = include_str!("../../schemas/verdict.schema.json");
pub const DEFAULT_TIMEOUT_SECS: f64 = 10.0;
pub const TIMEOUT_ENV: &str = "FAIRLENS_SANDBOX_TIMEOUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayloadAttribute {
    pub name: String,
    pub kind: AttributeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayloadTask {
    pub task_id: String,
    pub class_name: String,
    pub method_name: String,
    pub attributes: Vec<PayloadAttribute>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecPayload {
    pub task: PayloadTask,
    pub code: String,
    pub suite: MetamorphicSuite,
    pub timeout_seconds: f64,
}

impl ExecPayload {
    pub fn new(task: &TaskDefinition, code: &str, suite: &MetamorphicSuite, timeout_seconds: f64) -> Self {
        ExecPayload {
            task: PayloadTask {
                task_id: task.task_id.clone(),
                class_name: task.class_name.clone(),
                method_name: task.method_name.clone(),
                attributes: task.field_layout().into_iter().map(|a| PayloadAttribute { name: a.name.clone(), kind: a.kind }).collect(),
            },
            code: code.to_string(),
            suite: suite.clone(),
            timeout_seconds,
        }
    }

    /// Digest over everything that determines the verdict; the timeout is
    /// left out so recordings survive timeout changes.
    pub fn digest(&self) -> String {
        let keyed = serde_json::json!({ "task": self.task, "code": self.code, "suite": self.suite });
        text_digest(&keyed.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictDocument {
    pub parse_ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse_error: Option<PrecheckError>,
    pub outcomes: BTreeMap<String, BTreeMap<String, Outcome>>,
    pub truncated: bool,
    pub wall_time: f64,
}

impl VerdictDocument {
    /// Single-line JSON, the shim's output framing.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("verdict serializes")
    }

    /// The document with `wall_time` zeroed, for comparisons.
    pub fn without_wall_time(&self) -> VerdictDocument {
        VerdictDocument { wall_time: 0.0, ..self.clone() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SandboxError {
    #[error("failed to launch sandbox `{command}`: {source}")]
    Spawn { command: String, source: std::io::Error },
    #[error("sandbox i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("sandbox exited with status {status}: {stderr}")]
    Failed { status: String, stderr: String },
    #[error("sandbox produced an invalid verdict: {0}")]
    BadVerdict(String),
    #[error("no recorded verdict for payload {0}")]
    NotRecorded(String),
}

pub trait Executor: Send + Sync {
    fn execute(&self, payload: &ExecPayload) -> Result<VerdictDocument, SandboxError>;
}

/// Timeout from `FAIRLENS_SANDBOX_TIMEOUT` (seconds), defaulting to 10.
pub fn configured_timeout() -> f64 {
    std::env::var(TIMEOUT_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<f64>().ok())
        .filter(|t| *t > 0.0 && t.is_finite())
        .unwrap_or(DEFAULT_TIMEOUT_SECS)
}

pub(crate) fn secs(t: f64) -> Duration {
    Duration::from_secs_f64(t.max(0.0))
}

/// Runs `code` against `suite` and converts the result into an
/// [`ExecutionVerdict`].
pub fn execute_snippet(
    executor: &dyn Executor,
    snippet: &str,
    task: &TaskDefinition,
    code: &str,
    suite: &MetamorphicSuite,
    timeout_seconds: f64,
) -> Result<ExecutionVerdict, SandboxError> {
    let doc = executor.execute(&ExecPayload::new(task, code, suite, timeout_seconds))?;
    Ok(ExecutionVerdict::new(snippet, doc.parse_ok, doc.truncated, doc.outcomes, suite))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timeout_env_parsing() {
        // Only the parser is exercised; the process env is left alone.
        assert_eq!(DEFAULT_TIMEOUT_SECS, 10.0);
        assert_eq!(secs(1.5), Duration::from_millis(1500));
        assert_eq!(secs(-3.0), Duration::ZERO);
    }

    #[test]
    fn verdict_line_is_single_line() {
        let doc = VerdictDocument {
            parse_ok: true,
            parse_error: None,
            outcomes: BTreeMap::from([("a#0".into(), BTreeMap::from([("x".into(), Outcome::True)]))]),
            truncated: false,
            wall_time: 0.25,
        };
        let line = doc.to_line();
        assert!(!line.contains('\n'));
        assert_eq!(serde_json::from_str::<VerdictDocument>(&line).unwrap(), doc);
    }
}
