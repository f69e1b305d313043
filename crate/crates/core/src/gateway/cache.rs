use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const CACHE_DIR_ENV: &str = "FAIRLENS_CACHE_DIR";

pub fn cache_key(provider: &str, model: &str, temperature: f64, prompt_digest: &str, sample_index: u32) -> String {
    let mut h = Sha256::new();
    for part in [provider, model, &format!("{temperature:?}"), prompt_digest, &sample_index.to_string()] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedRequest {
    pub provider: String,
    pub model: String,
    pub temperature: f64,
    pub prompt_digest: String,
    pub sample_index: u32,
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheMetadata {
    pub created_at: u64,
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub request: CachedRequest,
    pub raw_response: String,
    pub metadata: CacheMetadata,
}

/// Append-only content-addressed store at `<root>/<2 hex>/<digest>.json`.
#[derive(Debug)]
pub struct ResponseCache {
    root: PathBuf,
    write_lock: Mutex<()>,
}

impl ResponseCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        ResponseCache { root: root.into(), write_lock: Mutex::new(()) }
    }

    /// Cache rooted at `FAIRLENS_CACHE_DIR`, or `cache` in the working directory.
    pub fn from_env() -> Self {
        Self::new(std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("cache")))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.root.join(&key[..2]).join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<CacheEntry> {
        let text = fs::read_to_string(self.path_for(key)).ok()?;
        serde_json::from_str(&text).ok()
    }

    pub fn put(&self, key: &str, entry: &CacheEntry) -> std::io::Result<()> {
        let path = self.path_for(key);
        let _guard = self.write_lock.lock().unwrap_or_else(|p| p.into_inner());
        if path.exists() {
            return Ok(());
        }
        let dir = path.parent().expect("cache path has a parent");
        fs::create_dir_all(dir)?;
        let mut tmp = tempfile_in(dir, key)?;
        tmp.1.write_all(serde_json::to_string_pretty(entry).expect("entry serializes").as_bytes())?;
        tmp.1.write_all(b"\n")?;
        tmp.1.sync_all()?;
        drop(tmp.1);
        fs::rename(&tmp.0, &path)
    }
}

fn tempfile_in(dir: &Path, key: &str) -> std::io::Result<(PathBuf, fs::File)> {
    let path = dir.join(format!(".{key}.{}.tmp", std::process::id()));
    let file = fs::File::create(&path)?;
    Ok((path, file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_properties() {
        let k = cache_key("mock", "m", 0.2, "abc", 0);
        assert_eq!(k, cache_key("mock", "m", 0.2, "abc", 0));
        assert_ne!(k, cache_key("mock", "m", 0.2, "abc", 1));
        assert_ne!(k, cache_key("mock", "m", 0.4, "abc", 0));
        assert_ne!(cache_key("ab", "c", 1.0, "d", 0), cache_key("a", "bc", 1.0, "d", 0));
        assert_eq!(k.len(), 64);
    }
}
