use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::Instant;

use wait_timeout::ChildExt;

use super::{secs, ExecPayload, Executor, SandboxError, VerdictDocument};
use crate::snippet::parse_precheck;

/// Runs an external shim process per snippet. The child is killed if it has
/// not exited after twice the payload timeout.
#[derive(Debug, Clone)]
pub struct ShimExecutor {
    pub program: String,
    pub args: Vec<String>,
}

impl ShimExecutor {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        ShimExecutor { program: program.into(), args }
    }

    fn command_line(&self) -> String {
        std::iter::once(self.program.as_str()).chain(self.args.iter().map(String::as_str)).collect::<Vec<_>>().join(" ")
    }
}

impl Executor for ShimExecutor {
    fn execute(&self, payload: &ExecPayload) -> Result<VerdictDocument, SandboxError> {
        let start = Instant::now();
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|source| SandboxError::Spawn { command: self.command_line(), source })?;

        let input = serde_json::to_vec(payload).expect("payload serializes");
        let mut stdin = child.stdin.take().expect("piped stdin");
        let writer = thread::spawn(move || {
            // A shim that exits early closes its end; that is not our error.
            let _ = stdin.write_all(&input);
        });
        let mut stdout = child.stdout.take().expect("piped stdout");
        let mut stderr = child.stderr.take().expect("piped stderr");
        let out_reader = thread::spawn(move || {
            let mut buf = String::new();
            let _ = stdout.read_to_string(&mut buf);
            buf
        });
        let err_reader = thread::spawn(move || {
            let mut buf = String::new();
            let _ = stderr.read_to_string(&mut buf);
            buf
        });

        let status = match child.wait_timeout(secs(2.0 * payload.timeout_seconds))? {
            Some(status) => status,
            None => {
                let _ = child.kill();
                let _ = child.wait();
                let _ = writer.join();
                let check = parse_precheck(&payload.code);
                return Ok(VerdictDocument {
                    parse_ok: check.ok,
                    parse_error: check.error,
                    outcomes: Default::default(),
                    truncated: true,
                    wall_time: start.elapsed().as_secs_f64(),
                });
            }
        };
        let _ = writer.join();
        let stdout = out_reader.join().unwrap_or_default();
        let stderr = err_reader.join().unwrap_or_default();
        if !status.success() {
            return Err(SandboxError::Failed { status: status.to_string(), stderr: stderr.trim().to_string() });
        }
        let mut lines = stdout.lines().filter(|l| !l.trim().is_empty());
        let line = lines.next().ok_or_else(|| SandboxError::BadVerdict("empty output".into()))?;
        if lines.next().is_some() {
            return Err(SandboxError::BadVerdict("more than one output line".into()));
        }
        serde_json::from_str(line).map_err(|e| SandboxError::BadVerdict(e.to_string()))
    }
}
