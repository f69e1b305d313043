use std::collections::BTreeMap;
use std::time::Instant;

use super::{secs, ExecPayload, Executor, SandboxError, VerdictDocument};
use crate::metamorphic::Outcome;
use crate::snippet::{parse_precheck, Program, DEFAULT_STEP_LIMIT};

/// Evaluates snippets with the crate's own interpreter. Each instance gets a
/// fresh module, so state never leaks between calls.
#[derive(Debug, Clone)]
pub struct BuiltinExecutor {
    pub step_limit: u64,
}

impl Default for BuiltinExecutor {
    fn default() -> Self {
        BuiltinExecutor { step_limit: DEFAULT_STEP_LIMIT }
    }
}

impl Executor for BuiltinExecutor {
    fn execute(&self, payload: &ExecPayload) -> Result<VerdictDocument, SandboxError> {
        let start = Instant::now();
        let deadline = secs(payload.timeout_seconds);
        let check = parse_precheck(&payload.code);
        let mut doc =
            VerdictDocument { parse_ok: check.ok, parse_error: check.error, outcomes: BTreeMap::new(), truncated: false, wall_time: 0.0 };
        if !doc.parse_ok {
            doc.wall_time = start.elapsed().as_secs_f64();
            return Ok(doc);
        }
        let module = crate::snippet::parse(&payload.code).map_err(|e| SandboxError::BadVerdict(e.to_string()))?;
        let mut program = Program::new(module, &payload.task.class_name, &payload.task.method_name);
        program.step_limit = self.step_limit;
        'suite: for tuple in &payload.suite.tuples {
            let mut outcomes = BTreeMap::new();
            for variant in &tuple.variants {
                if start.elapsed() > deadline {
                    doc.truncated = true;
                    break 'suite;
                }
                let outcome = match program.call(&variant.assignment) {
                    Ok(b) => Outcome::from_bool(b),
                    Err(fault) if fault.is_timeout() => {
                        doc.truncated = true;
                        doc.outcomes.insert(tuple.id.clone(), outcomes);
                        break 'suite;
                    }
                    Err(fault) => Outcome::Exception(fault.kind),
                };
                outcomes.insert(variant.value.key(), outcome);
            }
            doc.outcomes.insert(tuple.id.clone(), outcomes);
        }
        doc.wall_time = start.elapsed().as_secs_f64();
        Ok(doc)
    }
}
