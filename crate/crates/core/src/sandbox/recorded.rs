use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use super::{ExecPayload, Executor, SandboxError, VerdictDocument};

/// Replays verdicts keyed by payload digest.
#[derive(Debug, Default)]
pub struct RecordedExecutor {
    verdicts: HashMap<String, VerdictDocument>,
}

impl RecordedExecutor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, payload_digest: impl Into<String>, verdict: VerdictDocument) {
        self.verdicts.insert(payload_digest.into(), verdict);
    }

    /// Loads every `<digest>.json` file in `dir`.
    pub fn load(dir: &Path) -> Result<Self, SandboxError> {
        let mut verdicts = HashMap::new();
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let digest = path.file_stem().unwrap_or_default().to_string_lossy().to_string();
                let text = fs::read_to_string(&path)?;
                let doc = serde_json::from_str(&text).map_err(|e| SandboxError::BadVerdict(format!("{}: {e}", path.display())))?;
                verdicts.insert(digest, doc);
            }
        }
        Ok(RecordedExecutor { verdicts })
    }

    pub fn len(&self) -> usize {
        self.verdicts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verdicts.is_empty()
    }
}

impl Executor for RecordedExecutor {
    fn execute(&self, payload: &ExecPayload) -> Result<VerdictDocument, SandboxError> {
        let digest = payload.digest();
        self.verdicts.get(&digest).cloned().ok_or(SandboxError::NotRecorded(digest))
    }
}

/// Wraps another executor and stores each verdict as `<digest>.json`.
pub struct RecordingExecutor<E> {
    inner: E,
    dir: PathBuf,
    lock: Mutex<()>,
}

impl<E: Executor> RecordingExecutor<E> {
    pub fn new(inner: E, dir: impl Into<PathBuf>) -> Self {
        RecordingExecutor { inner, dir: dir.into(), lock: Mutex::new(()) }
    }
}

impl<E: Executor> Executor for RecordingExecutor<E> {
    fn execute(&self, payload: &ExecPayload) -> Result<VerdictDocument, SandboxError> {
        let doc = self.inner.execute(payload)?;
        let _guard = self.lock.lock().unwrap_or_else(|p| p.into_inner());
        fs::create_dir_all(&self.dir)?;
        fs::write(self.dir.join(format!("{}.json", payload.digest())), doc.to_line() + "\n")?;
        Ok(doc)
    }
}
