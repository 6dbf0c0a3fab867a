use std::time::{Duration, Instant};

use base64::Engine as _;
use serde_json::{json, Value};

use super::backend::{GenerationParams, VlmBackend, VlmReply, VlmRequest};
use crate::error::BackendError;

pub const DEFAULT_CHAT_ENDPOINT: &str = "http://localhost:11434/api/chat";
pub const DEFAULT_MODEL: &str = "qwen3.5:4b";

/// Chat-completion client for an Ollama-compatible model server.
#[derive(Debug, Clone)]
pub struct HttpChatBackend {
    pub endpoint: String,
    pub model: String,
    pub params: GenerationParams,
    pub timeout: Duration,
}

impl HttpChatBackend {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            params: GenerationParams::default(),
            timeout: Duration::from_secs(120),
        }
    }

    pub fn request_body(&self, request: &VlmRequest) -> Value {
        let mut message = json!({ "role": "user", "content": request.prompt });
        if let Some(image) = &request.image {
            message["images"] = json!([base64::engine::general_purpose::STANDARD.encode(image)]);
        }
        json!({
            "model": self.model,
            "messages": [message],
            "stream": false,
            "think": self.params.think,
            "options": {
                "temperature": self.params.temperature,
                "num_predict": self.params.num_predict,
                "num_ctx": self.params.num_ctx,
            },
        })
    }
}

impl VlmBackend for HttpChatBackend {
    fn complete(&self, request: &VlmRequest) -> Result<VlmReply, BackendError> {
        let started = Instant::now();
        let response = ureq::post(&self.endpoint)
            .timeout(self.timeout)
            .send_json(self.request_body(request));
        let response = match response {
            Ok(r) => r,
            Err(ureq::Error::Status(status, r)) => {
                return Err(BackendError::Status {
                    status,
                    body: r.into_string().unwrap_or_default(),
                })
            }
            Err(e) => return Err(BackendError::Transport(e.to_string())),
        };
        let body: Value = response
            .into_json()
            .map_err(|e| BackendError::Protocol(e.to_string()))?;
        let inference_ms = started.elapsed().as_secs_f64() * 1000.0;
        // Ollama chat shape first, then the OpenAI-compatible shape.
        let text = body
            .pointer("/message/content")
            .or_else(|| body.pointer("/choices/0/message/content"))
            .and_then(Value::as_str)
            .ok_or_else(|| BackendError::Protocol("reply has no message content".into()))?;
        Ok(VlmReply {
            text: text.to_owned(),
            inference_ms,
        })
    }

    fn model_name(&self) -> String {
        self.model.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vlm::backend::VlmTask;

    #[test]
    fn body_carries_generation_parameters_and_image() {
        let backend = HttpChatBackend::new(DEFAULT_CHAT_ENDPOINT, DEFAULT_MODEL);
        let req = VlmRequest {
            task: VlmTask::Decision {
                instruction: "x".into(),
            },
            prompt: "hello".into(),
            image: Some(vec![1, 2, 3]),
        };
        let body = backend.request_body(&req);
        assert_eq!(body["model"], "qwen3.5:4b");
        assert_eq!(body["think"], false);
        assert_eq!(body["stream"], false);
        assert_eq!(body["options"]["temperature"], 0.3);
        assert_eq!(body["options"]["num_predict"], 500);
        assert_eq!(body["options"]["num_ctx"], 16384);
        assert_eq!(body["messages"][0]["images"][0], "AQID");
    }
}
