//! Blocking wire client for OpenAI-compatible chat-completion endpoints.

use std::time::Duration;

use serde::Deserialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use super::{CallContext, CallMeta, ChatClient, Completion, GatewayError};
use crate::model::LlmSettings;

pub const API_KEY_ENV: &str = "MEMCLUSTER_API_KEY";
const API_KEY_ENV_FALLBACK: &str = "OPENAI_API_KEY";

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Debug, Deserialize)]
struct Message {
    content: String,
}

#[derive(Debug, Deserialize)]
struct Usage {
    #[serde(default)]
    prompt_tokens: Option<u64>,
    #[serde(default)]
    completion_tokens: Option<u64>,
}

pub struct HttpChatClient {
    settings: LlmSettings,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

fn digest(data: &str) -> String {
    let hash = Sha256::digest(data.as_bytes());
    hex_prefix(&hash)
}

fn hex_prefix(bytes: &[u8]) -> String {
    bytes.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

impl HttpChatClient {
    pub fn new(settings: LlmSettings) -> Result<Self, GatewayError> {
        let api_key = std::env::var(API_KEY_ENV)
            .or_else(|_| std::env::var(API_KEY_ENV_FALLBACK))
            .ok();
        Self::with_api_key(settings, api_key)
    }

    pub fn with_api_key(
        settings: LlmSettings,
        api_key: Option<String>,
    ) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(settings.timeout_secs))
            .build()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        Ok(Self { settings, api_key, client })
    }

    /// One chat completion, with bounded exponential backoff on transport
    /// failures and rate limits. Returns the assistant message text.
    pub fn complete(
        &self,
        system_text: &str,
        user_text: &str,
    ) -> Result<(String, CallMeta), GatewayError> {
        let url = format!(
            "{}/v1/chat/completions",
            self.settings.base_url.trim_end_matches('/')
        );
        let body = json!({
            "model": self.settings.model,
            "messages": [
                {"role": "system", "content": system_text},
                {"role": "user", "content": user_text},
            ],
            "temperature": self.settings.temperature,
        });
        let body_text = body.to_string();
        let request_digest = digest(&body_text);

        let mut last_err = None;
        for attempt in 0..=self.settings.max_transport_retries {
            if attempt > 0 {
                let backoff = self.settings.backoff_ms.saturating_mul(1 << (attempt - 1));
                std::thread::sleep(Duration::from_millis(backoff));
            }
            let mut request = self
                .client
                .post(&url)
                .header("Content-Type", "application/json")
                .body(body_text.clone());
            if let Some(key) = &self.api_key {
                request = request.bearer_auth(key);
            }
            match request.send() {
                Err(e) => {
                    log::warn!("transport error on attempt {attempt}: {e}");
                    last_err = Some(GatewayError::Transport(e.to_string()));
                }
                Ok(resp) => {
                    let status = resp.status();
                    if status.as_u16() == 401 || status.as_u16() == 403 {
                        return Err(GatewayError::Auth);
                    }
                    let text = resp.text().map_err(|e| GatewayError::Transport(e.to_string()))?;
                    if status.as_u16() == 429 || status.is_server_error() {
                        log::warn!("retryable provider status {status} on attempt {attempt}");
                        last_err = Some(GatewayError::Provider {
                            status: status.as_u16(),
                            body: excerpt(&text),
                        });
                        continue;
                    }
                    if !status.is_success() {
                        return Err(GatewayError::Provider {
                            status: status.as_u16(),
                            body: excerpt(&text),
                        });
                    }
                    let parsed: ChatResponse = serde_json::from_str(&text).map_err(|e| {
                        GatewayError::Provider {
                            status: status.as_u16(),
                            body: format!("unparseable body: {e}"),
                        }
                    })?;
                    let content = parsed
                        .choices
                        .first()
                        .map(|c| c.message.content.clone())
                        .ok_or_else(|| GatewayError::Provider {
                            status: status.as_u16(),
                            body: "no choices in response".into(),
                        })?;
                    let meta = CallMeta {
                        request_digest,
                        response_digest: digest(&text),
                        prompt_tokens: parsed.usage.as_ref().and_then(|u| u.prompt_tokens),
                        completion_tokens: parsed.usage.as_ref().and_then(|u| u.completion_tokens),
                        transport_retries: attempt,
                    };
                    return Ok((content, meta));
                }
            }
        }
        Err(last_err.unwrap_or_else(|| GatewayError::Transport("retries exhausted".into())))
    }
}

fn excerpt(body: &str) -> String {
    body.chars().take(200).collect()
}

impl ChatClient for HttpChatClient {
    fn complete(
        &mut self,
        system_text: &str,
        user_text: &str,
        _ctx: &CallContext,
    ) -> Result<Completion, GatewayError> {
        let (text, meta) = HttpChatClient::complete(self, system_text, user_text)?;
        Ok(Completion { text, meta: Some(meta) })
    }
}
