use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{parse_task_file, TaskDefinition, TaskError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub task_id: String,
}

/// A validated benchmark, ordered by `task_id`.
#[derive(Debug, Clone)]
pub struct TaskSet {
    pub tasks: Vec<TaskDefinition>,
    pub manifest: Vec<ManifestEntry>,
}

impl TaskSet {
    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn get(&self, task_id: &str) -> Option<&TaskDefinition> {
        self.tasks.iter().find(|t| t.task_id == task_id)
    }

    /// Digest over every task file digest, in task order.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for e in &self.manifest {
            h.update(e.task_id.as_bytes());
            h.update([0]);
            h.update(e.sha256.as_bytes());
            h.update([0]);
        }
        hex::encode(h.finalize())
    }
}

pub const TASK_EXTENSION: &str = ".task.json";

/// Loads every `*.task.json` file directly under `root`.
pub fn load_benchmark(root: &Path) -> Result<TaskSet, TaskError> {
    let io = |source| TaskError::Io { path: root.display().to_string(), source };
    let mut files: Vec<_> = fs::read_dir(root)
        .map_err(io)?
        .collect::<Result<Vec<_>, _>>()
        .map_err(io)?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.is_file() && p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(TASK_EXTENSION)))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(TaskError::NoTasks(root.display().to_string()));
    }

    let mut by_id: BTreeMap<String, (TaskDefinition, ManifestEntry)> = BTreeMap::new();
    for path in files {
        let shown = path.display().to_string();
        let bytes = fs::read(&path).map_err(|source| TaskError::Io { path: shown.clone(), source })?;
        let text = String::from_utf8(bytes.clone()).map_err(|e| TaskError::InFile {
            path: shown.clone(),
            source: Box::new(TaskError::Syntax { line: 0, column: 0, message: e.to_string() }),
        })?;
        let task = parse_task_file(&text).map_err(|e| TaskError::InFile { path: shown.clone(), source: Box::new(e) })?;
        let rel = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or(shown.clone());
        let entry = ManifestEntry { path: rel, sha256: hex::encode(Sha256::digest(&bytes)), task_id: task.task_id.clone() };
        if let Some((_, prev)) = by_id.get(&task.task_id) {
            return Err(TaskError::DuplicateTaskId { task_id: task.task_id.clone(), first: prev.path.clone(), second: entry.path });
        }
        by_id.insert(task.task_id.clone(), (task, entry));
    }

    let (tasks, manifest) = by_id.into_values().unzip();
    Ok(TaskSet { tasks, manifest })
}
