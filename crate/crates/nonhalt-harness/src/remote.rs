//! Client for OpenAI-compatible chat-completions endpoints with SSE
//! streaming.
//!
//! The request carries `model`, `messages`, `temperature`, `top_p`,
//! `max_tokens`, `stream = true`, and optionally `logprobs`. `top_k` has no
//! wire field on this surface; it still participates in local determinism
//! classification. The API key comes from `NONHALT_API_KEY`, the base URL
//! from `NONHALT_BASE_URL`, unless set explicitly.

use std::io::Read;
use std::time::Duration;

use nonhalt_core::sampler::SamplerConfig;
use nonhalt_core::segment::SegmentMode;

use crate::client::{ClientKind, FinishReason, ModelClient, OutputUnit};
use crate::error::ClientError;
use crate::protocol::{ChatChunk, ChatMessage, ChatRequest, SseParser};

pub const API_KEY_ENV: &str = "NONHALT_API_KEY";
pub const BASE_URL_ENV: &str = "NONHALT_BASE_URL";

pub struct RemoteClient {
    model: String,
    base_url: String,
    api_key: Option<String>,
    declared_w: Option<usize>,
    request_logprobs: bool,
    timeout: Duration,
    http: reqwest::blocking::Client,
}

impl RemoteClient {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Result<Self, ClientError> {
        let base_url = base_url.into().trim_end_matches('/').to_string();
        let http = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        Ok(Self {
            model: model.into(),
            base_url,
            api_key: std::env::var(API_KEY_ENV).ok(),
            declared_w: None,
            request_logprobs: true,
            timeout: Duration::from_secs(300),
            http,
        })
    }

    /// Base URL from `NONHALT_BASE_URL`.
    pub fn from_env(model: impl Into<String>) -> Result<Self, ClientError> {
        let base = std::env::var(BASE_URL_ENV)
            .map_err(|_| ClientError::Transport(format!("{BASE_URL_ENV} is not set")))?;
        Self::new(base, model)
    }

    pub fn with_api_key(mut self, key: impl Into<String>) -> Self {
        self.api_key = Some(key.into());
        self
    }

    /// Declare the endpoint's context size (enables certification).
    pub fn with_context_size(mut self, w: usize) -> Self {
        self.declared_w = Some(w);
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_logprobs(mut self, request: bool) -> Self {
        self.request_logprobs = request;
        self
    }
}

fn map_finish(reason: &str) -> FinishReason {
    match reason {
        "length" => FinishReason::Length,
        // Anything that is not a length cap ended generation on the server's
        // terms; treat it as a stop.
        _ => FinishReason::Stop,
    }
}

impl ModelClient for RemoteClient {
    fn id(&self) -> &str {
        &self.model
    }

    fn kind(&self) -> ClientKind {
        ClientKind::Remote
    }

    fn context_size(&self) -> Option<usize> {
        self.declared_w
    }

    fn default_segment_mode(&self) -> SegmentMode {
        SegmentMode::Word
    }

    fn complete(
        &self,
        prompt: &str,
        config: &SamplerConfig<f64>,
        max_units: usize,
        on_unit: &mut dyn FnMut(OutputUnit) -> bool,
    ) -> Result<FinishReason, ClientError> {
        let body = ChatRequest {
            model: self.model.clone(),
            messages: vec![ChatMessage {
                role: "user".into(),
                content: prompt.to_string(),
            }],
            temperature: Some(config.tau),
            top_p: Some(config.top_p),
            max_tokens: Some(max_units as u64),
            stream: true,
            logprobs: if self.request_logprobs { Some(true) } else { None },
        };
        let url = format!("{}/v1/chat/completions", self.base_url);
        let mut request = self.http.post(&url).timeout(self.timeout).json(&body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().map_err(|e| {
            if e.is_timeout() {
                ClientError::Timeout
            } else {
                ClientError::Transport(e.to_string())
            }
        })?;
        if !response.status().is_success() {
            return Err(ClientError::Transport(format!(
                "{url} -> HTTP {}",
                response.status()
            )));
        }

        let mut response = response;
        let mut parser = SseParser::new();
        let mut buf = [0u8; 4096];
        let mut pending = Vec::new();
        let mut finish: Option<FinishReason> = None;
        'read: loop {
            let n = match response.read(&mut buf) {
                Ok(0) => break,
                Ok(n) => n,
                Err(e) if e.kind() == std::io::ErrorKind::TimedOut => {
                    return Err(ClientError::Timeout)
                }
                Err(e) => return Err(ClientError::Transport(e.to_string())),
            };
            pending.extend_from_slice(&buf[..n]);
            // Decode complete UTF-8; keep any trailing partial sequence.
            let valid_up_to = match std::str::from_utf8(&pending) {
                Ok(_) => pending.len(),
                Err(e) => e.valid_up_to(),
            };
            let text = String::from_utf8_lossy(&pending[..valid_up_to]).into_owned();
            pending.drain(..valid_up_to);

            for payload in parser.push(&text) {
                if payload == "[DONE]" {
                    break 'read;
                }
                let chunk: ChatChunk = serde_json::from_str(&payload)
                    .map_err(|e| ClientError::Protocol(format!("bad chunk: {e}")))?;
                let Some(choice) = chunk.choices.first() else {
                    continue;
                };
                if let Some(reason) = &choice.finish_reason {
                    finish = Some(map_finish(reason));
                }
                if let Some(content) = &choice.delta.content {
                    if !content.is_empty() {
                        let logprob = choice
                            .logprobs
                            .as_ref()
                            .and_then(|lp| lp.content.first())
                            .map(|t| t.logprob);
                        if !on_unit(OutputUnit {
                            text: content.clone(),
                            logprob,
                        }) {
                            // Budget reached: abort the stream.
                            return Ok(FinishReason::Length);
                        }
                    }
                }
            }
        }
        finish.ok_or_else(|| ClientError::Protocol("stream ended without finish_reason".into()))
    }
}
