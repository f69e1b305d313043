//! Access to code-generation providers with retries, a content-addressed
//! response cache and code extraction.

mod cache;
mod extract;
mod http;
mod mock;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

pub use cache::{cache_key, CacheEntry, CacheMetadata, CachedRequest, ResponseCache, CACHE_DIR_ENV};
pub use extract::extract_code;
pub use http::{AnthropicProvider, OpenAiProvider};
pub use mock::{MockPersona, MockProvider, PlaylistEntry, SkeletonInfo};

use crate::prompt::{text_digest, CodePrompt};
use crate::snippet::parse_precheck;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub model: String,
    pub temperature: f64,
    pub sample_index: u32,
    pub max_tokens: u32,
    pub timeout_secs: f64,
}

impl GenerationConfig {
    pub fn new(model: impl Into<String>, temperature: f64, sample_index: u32) -> Self {
        GenerationConfig { model: model.into(), temperature, sample_index, max_tokens: 1024, timeout_secs: 60.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedSnippet {
    pub task_id: String,
    pub strategy: String,
    pub provider: String,
    pub config: GenerationConfig,
    pub raw_response: String,
    pub extracted_code: Option<String>,
    pub parse_ok: bool,
    pub cache_hit: bool,
    pub timestamp: u64,
}

pub struct ProviderRequest<'a> {
    pub prompt: &'a str,
    pub model: &'a str,
    pub temperature: f64,
    pub sample_index: u32,
    pub max_tokens: u32,
    pub timeout: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProviderError {
    /// Network failure, timeout or server-side error; worth retrying.
    #[error("transport error: {0}")]
    Transport(String),
    #[error("provider quota exhausted: {0}")]
    Quota(String),
    #[error("provider rejected the request: {0}")]
    Rejected(String),
    #[error("missing credentials: set {0}")]
    MissingKey(String),
}

pub trait Provider: Send + Sync {
    /// Identifier used in cache keys; distinct behaviours need distinct ids.
    fn id(&self) -> String;
    fn default_model(&self) -> String;
    fn generate(&self, request: &ProviderRequest<'_>) -> Result<String, ProviderError>;
}

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("{error} (after {attempts} attempt(s))")]
    Provider { error: ProviderError, attempts: u32 },
    #[error("empty completion")]
    EmptyCompletion,
    #[error("no extractable code in completion")]
    NoCode,
    #[error("cache write failed: {0}")]
    Cache(#[from] std::io::Error),
    #[error("unknown provider `{0}`")]
    UnknownProvider(String),
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { attempts: 3, base_delay: Duration::from_millis(500) }
    }
}

/// Raw text completion with its cache provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub cache_hit: bool,
    pub created_at: u64,
}

pub struct Gateway {
    provider: Arc<dyn Provider>,
    cache: Option<Arc<ResponseCache>>,
    retry: RetryPolicy,
    min_interval: Option<Duration>,
    last_call: Mutex<Option<Instant>>,
    live_calls: AtomicU64,
}

impl Gateway {
    pub fn new(provider: Arc<dyn Provider>) -> Self {
        Gateway {
            provider,
            cache: None,
            retry: RetryPolicy::default(),
            min_interval: None,
            last_call: Mutex::new(None),
            live_calls: AtomicU64::new(0),
        }
    }

    pub fn with_cache(mut self, cache: Arc<ResponseCache>) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// Spaces live calls at least `interval` apart.
    pub fn with_rate_limit(mut self, interval: Duration) -> Self {
        self.min_interval = Some(interval);
        self
    }

    pub fn provider_id(&self) -> String {
        self.provider.id()
    }

    pub fn default_model(&self) -> String {
        self.provider.default_model()
    }

    /// Number of requests that reached the provider (cache hits excluded).
    pub fn live_calls(&self) -> u64 {
        self.live_calls.load(Ordering::SeqCst)
    }

    pub fn complete_text(&self, prompt: &str, cfg: &GenerationConfig) -> Result<Completion, GatewayError> {
        let provider = self.provider.id();
        let digest = text_digest(prompt);
        let key = cache_key(&provider, &cfg.model, cfg.temperature, &digest, cfg.sample_index);
        if let Some(entry) = self.cache.as_ref().and_then(|c| c.get(&key)) {
            return Ok(Completion { text: entry.raw_response, cache_hit: true, created_at: entry.metadata.created_at });
        }
        let request = ProviderRequest {
            prompt,
            model: &cfg.model,
            temperature: cfg.temperature,
            sample_index: cfg.sample_index,
            max_tokens: cfg.max_tokens,
            timeout: Duration::from_secs_f64(cfg.timeout_secs.max(0.001)),
        };
        let mut attempt = 0;
        let text = loop {
            attempt += 1;
            self.pace();
            self.live_calls.fetch_add(1, Ordering::SeqCst);
            match self.provider.generate(&request) {
                Ok(text) => break text,
                Err(ProviderError::Transport(_)) if attempt < self.retry.attempts => {
                    std::thread::sleep(self.retry.base_delay * 2u32.pow(attempt - 1));
                }
                Err(error) => return Err(GatewayError::Provider { error, attempts: attempt }),
            }
        };
        if text.trim().is_empty() {
            return Err(GatewayError::EmptyCompletion);
        }
        let created_at = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        if let Some(cache) = &self.cache {
            let entry = CacheEntry {
                request: CachedRequest {
                    provider,
                    model: cfg.model.clone(),
                    temperature: cfg.temperature,
                    prompt_digest: digest,
                    sample_index: cfg.sample_index,
                    prompt: prompt.to_string(),
                },
                raw_response: text.clone(),
                metadata: CacheMetadata { created_at, attempts: attempt },
            };
            cache.put(&key, &entry)?;
            // Another writer may have won the race; serve what is stored.
            if let Some(stored) = cache.get(&key) {
                return Ok(Completion { text: stored.raw_response, cache_hit: false, created_at: stored.metadata.created_at });
            }
        }
        Ok(Completion { text, cache_hit: false, created_at })
    }

    pub fn complete(&self, prompt: &CodePrompt, cfg: &GenerationConfig) -> Result<GeneratedSnippet, GatewayError> {
        let completion = self.complete_text(&prompt.rendered_text, cfg)?;
        let extracted_code = extract_code(&completion.text);
        let parse_ok = extracted_code.as_deref().is_some_and(|c| parse_precheck(c).ok);
        Ok(GeneratedSnippet {
            task_id: prompt.task_id.clone(),
            strategy: prompt.strategy.name().to_string(),
            provider: self.provider.id(),
            config: cfg.clone(),
            raw_response: completion.text,
            extracted_code,
            parse_ok,
            cache_hit: completion.cache_hit,
            timestamp: completion.created_at,
        })
    }

    fn pace(&self) {
        let Some(interval) = self.min_interval else { return };
        let mut last = self.last_call.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(prev) = *last {
            let elapsed = prev.elapsed();
            if elapsed < interval {
                std::thread::sleep(interval - elapsed);
            }
        }
        *last = Some(Instant::now());
    }
}

/// Builds a provider from its command-line id: `mock-fair`, `mock-biased`,
/// `mock-silent`, `playlist:<file>`, `openai` or `anthropic`.
pub fn provider_from_id(id: &str) -> Result<Arc<dyn Provider>, GatewayError> {
    Ok(match id {
        "mock-fair" => Arc::new(MockProvider::new(MockPersona::Fair)),
        "mock-biased" => Arc::new(MockProvider::new(MockPersona::Biased)),
        "mock-silent" => Arc::new(MockProvider::new(MockPersona::Silent)),
        "openai" => Arc::new(OpenAiProvider::from_env()),
        "anthropic" => Arc::new(AnthropicProvider::from_env()),
        other => match other.strip_prefix("playlist:") {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                let entries: Vec<PlaylistEntry> =
                    serde_json::from_str(&text).map_err(|e| GatewayError::UnknownProvider(format!("{other}: {e}")))?;
                Arc::new(MockProvider::new(MockPersona::Playlist(entries)))
            }
            None => return Err(GatewayError::UnknownProvider(other.to_string())),
        },
    })
}

#[cfg(test)]
mod tests {
    use std::sync::atomic::AtomicU32;

    use super::*;
    use crate::prompt::{render_prompt, PromptStrategy};
    use crate::task::parse_task_file;

    struct Flaky {
        failures: u32,
        calls: AtomicU32,
        error: ProviderError,
    }

    impl Provider for Flaky {
        fn id(&self) -> String {
            "flaky".into()
        }
        fn default_model(&self) -> String {
            "m".into()
        }
        fn generate(&self, _: &ProviderRequest<'_>) -> Result<String, ProviderError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.failures {
                Err(self.error.clone())
            } else {
                Ok("def m(self):\n    return True\n".into())
            }
        }
    }

    fn fast() -> RetryPolicy {
        RetryPolicy { attempts: 3, base_delay: Duration::from_millis(1) }
    }

    #[test]
    fn transport_errors_are_retried() {
        let p = Arc::new(Flaky { failures: 2, calls: AtomicU32::new(0), error: ProviderError::Transport("reset".into()) });
        let gw = Gateway::new(p.clone()).with_retry(fast());
        assert!(gw.complete_text("x", &GenerationConfig::new("m", 1.0, 0)).is_ok());
        assert_eq!(p.calls.load(Ordering::SeqCst), 3);

        let p = Arc::new(Flaky { failures: 5, calls: AtomicU32::new(0), error: ProviderError::Transport("reset".into()) });
        let gw = Gateway::new(p.clone()).with_retry(fast());
        let err = gw.complete_text("x", &GenerationConfig::new("m", 1.0, 0)).unwrap_err();
        assert!(matches!(err, GatewayError::Provider { attempts: 3, .. }));
    }

    #[test]
    fn quota_is_not_retried() {
        let p = Arc::new(Flaky { failures: 5, calls: AtomicU32::new(0), error: ProviderError::Quota("429".into()) });
        let gw = Gateway::new(p.clone()).with_retry(fast());
        assert!(gw.complete_text("x", &GenerationConfig::new("m", 1.0, 0)).is_err());
        assert_eq!(p.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Arc::new(ResponseCache::new(dir.path()));
        let task = parse_task_file(include_str!("../../data/tasks/occupation_journalist.task.json")).unwrap();
        let prompt = render_prompt(&task, PromptStrategy::Default);
        let gw = Gateway::new(Arc::new(MockProvider::new(MockPersona::Biased))).with_cache(cache.clone());
        let cfg = GenerationConfig::new("mock", 0.8, 0);
        let first = gw.complete(&prompt, &cfg).unwrap();
        let second = gw.complete(&prompt, &cfg).unwrap();
        assert!(!first.cache_hit);
        assert!(second.cache_hit);
        assert_eq!(first.raw_response, second.raw_response);
        assert_eq!(first.timestamp, second.timestamp);
        assert_eq!(gw.live_calls(), 1);
        let key = cache_key(&gw.provider_id(), "mock", 0.8, &prompt.digest, 0);
        let path = cache.path_for(&key);
        assert!(path.starts_with(dir.path().join(&key[..2])));
        let entry: CacheEntry = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(entry.request.prompt_digest, prompt.digest);
    }

    #[test]
    fn empty_completion_is_an_error() {
        let gw = Gateway::new(Arc::new(MockProvider::new(MockPersona::Silent)));
        let err = gw.complete_text("anything", &GenerationConfig::new("m", 1.0, 0)).unwrap_err();
        assert_eq!(err.to_string(), "empty completion");
    }
}
