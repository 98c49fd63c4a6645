//! HTTP backend for OpenAI / Azure OpenAI style chat-completions endpoints.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{ChatBackend, ChatMessage, Conversation, GatewayError, GenerationParams};

pub const ENV_ENDPOINT: &str = "ORDEX_LLM_ENDPOINT";
pub const ENV_API_KEY: &str = "ORDEX_LLM_API_KEY";
pub const ENV_API_VERSION: &str = "ORDEX_LLM_API_VERSION";

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveConfig {
    /// Full chat-completions URL, e.g.
    /// `https://host/openai/deployments/gpt-4/chat/completions`.
    pub endpoint: String,
    #[serde(skip_serializing, default)]
    pub api_key: String,
    /// When set, sent as the `api-version` query parameter and the key is
    /// passed in an `api-key` header (Azure). Otherwise a bearer token is used.
    pub api_version: Option<String>,
    pub timeout_secs: u64,
}

impl std::fmt::Debug for LiveConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiveConfig")
            .field("endpoint", &self.endpoint)
            .field("api_key", &"<redacted>")
            .field("api_version", &self.api_version)
            .field("timeout_secs", &self.timeout_secs)
            .finish()
    }
}

impl LiveConfig {
    pub fn from_env() -> Result<Self, GatewayError> {
        let var = |name: &str| std::env::var(name).ok().filter(|v| !v.trim().is_empty());
        Ok(Self {
            endpoint: var(ENV_ENDPOINT)
                .ok_or_else(|| GatewayError::Config(format!("{ENV_ENDPOINT} is not set")))?,
            api_key: var(ENV_API_KEY)
                .ok_or_else(|| GatewayError::Config(format!("{ENV_API_KEY} is not set")))?,
            api_version: var(ENV_API_VERSION),
            timeout_secs: 120,
        })
    }

    fn url(&self) -> String {
        match &self.api_version {
            Some(v) => {
                let sep = if self.endpoint.contains('?') {
                    '&'
                } else {
                    '?'
                };
                format!("{}{sep}api-version={v}", self.endpoint)
            }
            None => self.endpoint.clone(),
        }
    }
}

pub struct LiveBackend {
    config: LiveConfig,
    client: reqwest::blocking::Client,
}

impl LiveBackend {
    pub fn new(config: LiveConfig) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(Self { config, client })
    }

    pub fn request_body(conv: &Conversation, params: &GenerationParams) -> serde_json::Value {
        let messages: Vec<_> = conv
            .messages
            .iter()
            .map(|m| json!({"role": m.role.as_str(), "content": m.content}))
            .collect();
        json!({
            "model": params.model_id,
            "messages": messages,
            "temperature": params.temperature,
            "max_tokens": params.max_output_tokens,
        })
    }

    /// Pull `choices[0].message.content` out of a response body.
    pub fn parse_reply(body: &str) -> Result<ChatMessage, GatewayError> {
        let value: serde_json::Value = serde_json::from_str(body)
            .map_err(|e| GatewayError::MalformedResponse(format!("invalid json: {e}")))?;
        value
            .pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .map(ChatMessage::assistant)
            .ok_or_else(|| {
                GatewayError::MalformedResponse("missing choices[0].message.content".into())
            })
    }
}

impl ChatBackend for LiveBackend {
    fn complete(
        &self,
        conv: &Conversation,
        params: &GenerationParams,
    ) -> Result<ChatMessage, GatewayError> {
        let mut req = self
            .client
            .post(self.config.url())
            .json(&Self::request_body(conv, params));
        req = match self.config.api_version {
            Some(_) => req.header("api-key", &self.config.api_key),
            None => req.bearer_auth(&self.config.api_key),
        };
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                GatewayError::Timeout(e.to_string())
            } else {
                GatewayError::Transport(e.to_string())
            }
        })?;
        let status = resp.status().as_u16();
        let body = resp
            .text()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(GatewayError::Http { status, body });
        }
        Self::parse_reply(&body)
    }
}
