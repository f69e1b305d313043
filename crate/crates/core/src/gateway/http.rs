//! Live HTTP providers. Each sends the rendered prompt as a single user
//! message.

use serde_json::{json, Value};

use super::{Provider, ProviderError, ProviderRequest};

fn key_var(provider: &str) -> String {
    format!("FAIRLENS_{}_KEY", provider.to_uppercase())
}

fn post(url: &str, headers: &[(&str, String)], body: &Value, req: &ProviderRequest<'_>) -> Result<Value, ProviderError> {
    let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).timeout_global(Some(req.timeout)).build().into();
    let mut call = agent.post(url);
    for (k, v) in headers {
        call = call.header(*k, v.as_str());
    }
    let mut resp = call.send_json(body).map_err(|e| ProviderError::Transport(e.to_string()))?;
    let status = resp.status().as_u16();
    let text = resp.body_mut().read_to_string().map_err(|e| ProviderError::Transport(e.to_string()))?;
    match status {
        200..=299 => serde_json::from_str(&text).map_err(|e| ProviderError::Rejected(format!("malformed response body: {e}"))),
        429 => Err(ProviderError::Quota(text)),
        500..=599 => Err(ProviderError::Transport(format!("http status {status}"))),
        _ => Err(ProviderError::Rejected(format!("http status {status}: {text}"))),
    }
}

/// Chat-completions compatible endpoint.
#[derive(Debug, Clone)]
pub struct OpenAiProvider {
    pub base_url: String,
    pub api_key: Option<String>,
    pub model: String,
}

impl OpenAiProvider {
    pub fn from_env() -> Self {
        OpenAiProvider {
            base_url: std::env::var("FAIRLENS_OPENAI_BASE_URL").unwrap_or_else(|_| "https://api.openai.com/v1".into()),
            api_key: std::env::var(key_var("openai")).ok(),
            model: std::env::var("FAIRLENS_OPENAI_MODEL").unwrap_or_else(|_| "gpt-4o-mini".into()),
        }
    }
}

impl Provider for OpenAiProvider {
    fn id(&self) -> String {
        "openai".into()
    }

    fn default_model(&self) -> String {
        self.model.clone()
    }

    fn generate(&self, req: &ProviderRequest<'_>) -> Result<String, ProviderError> {
        let key = self.api_key.clone().ok_or_else(|| ProviderError::MissingKey(key_var("openai")))?;
        let body = json!({
            "model": req.model,
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
            "messages": [{ "role": "user", "content": req.prompt }],
        });
        let url = format!("{}/chat/completions", self.base_url.trim_end_matches('/'));
        let v = post(&url, &[("Authorization", format!("Bearer {key}"))], &body, req)?;
        v["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| ProviderError::Rejected("response has no message content".into()))
    }
}

#[derive(Debug, Clone)]
pub struct AnthropicProvider {
    pub base_url: String,
    pub api_key: Option<String>,
    pub model: String,
}

impl AnthropicProvider {
    pub fn from_env() -> Self {
        AnthropicProvider {
            base_url: std::env::var("FAIRLENS_ANTHROPIC_BASE_URL").unwrap_or_else(|_| "https://api.anthropic.com/v1".into()),
            api_key: std::env::var(key_var("anthropic")).ok(),
            model: std::env::var("FAIRLENS_ANTHROPIC_MODEL").unwrap_or_else(|_| "claude-3-5-haiku-latest".into()),
        }
    }
}

impl Provider for AnthropicProvider {
    fn id(&self) -> String {
        "anthropic".into()
    }

    fn default_model(&self) -> String {
        self.model.clone()
    }

    fn generate(&self, req: &ProviderRequest<'_>) -> Result<String, ProviderError> {
        let key = self.api_key.clone().ok_or_else(|| ProviderError::MissingKey(key_var("anthropic")))?;
        let body = json!({
            "model": req.model,
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
            "messages": [{ "role": "user", "content": req.prompt }],
        });
        let url = format!("{}/messages", self.base_url.trim_end_matches('/'));
        let v = post(&url, &[("x-api-key", key), ("anthropic-version", "2023-06-01".into())], &body, req)?;
        let parts: Vec<&str> = v["content"].as_array().map(|a| a.iter().filter_map(|c| c["text"].as_str()).collect()).unwrap_or_default();
        if parts.is_empty() && v["content"].is_null() {
            return Err(ProviderError::Rejected("response has no content".into()));
        }
        Ok(parts.concat())
    }
}
