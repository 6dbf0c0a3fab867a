//! Model backends and the serialized shared handle.

use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::prompt::{ConfirmationPrompt, DecisionPrompt};
use crate::error::BackendError;
use crate::world::NodeId;

/// What the backend is being asked. The scripted oracle keys off this; the
/// HTTP backend only sends the prompt text.
#[derive(Debug, Clone, PartialEq)]
pub enum VlmTask {
    Decision { instruction: String },
    /// `viewpoint` is the node the camera actually faces, when known; in
    /// simulation it differs from `node_id` after a missed navigation.
    Confirmation {
        node_id: NodeId,
        expected: Vec<String>,
        viewpoint: Option<NodeId>,
    },
}

#[derive(Debug, Clone)]
pub struct VlmRequest {
    pub task: VlmTask,
    pub prompt: String,
    pub image: Option<Vec<u8>>,
}

impl VlmRequest {
    pub fn decision(prompt: &DecisionPrompt) -> Self {
        Self {
            task: VlmTask::Decision {
                instruction: prompt.instruction.clone(),
            },
            prompt: prompt.text.clone(),
            image: prompt.image.clone(),
        }
    }

    pub fn confirmation(prompt: &ConfirmationPrompt, viewpoint: Option<NodeId>) -> Self {
        Self {
            task: VlmTask::Confirmation {
                node_id: prompt.node_id,
                expected: prompt.expected.clone(),
                viewpoint,
            },
            prompt: prompt.text.clone(),
            image: prompt.image.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VlmReply {
    pub text: String,
    pub inference_ms: f64,
}

pub trait VlmBackend: Send + Sync {
    fn complete(&self, request: &VlmRequest) -> Result<VlmReply, BackendError>;

    /// Model label recorded in startup events.
    fn model_name(&self) -> String;
}

/// Generation parameters sent with every chat request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub temperature: f64,
    pub num_predict: u32,
    pub num_ctx: u32,
    pub think: bool,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            temperature: 0.3,
            num_predict: 500,
            num_ctx: 16384,
            think: false,
        }
    }
}

#[derive(Debug, Default, Clone, Copy, PartialEq)]
pub struct BackendStats {
    pub calls: u64,
    /// Summed time the backend was held, wall clock.
    pub busy: Duration,
    /// Summed reported inference time, milliseconds.
    pub reported_ms: f64,
}

/// One backend instance shared by every session. Calls are serialized: a
/// second caller waits until the first reply is back.
pub struct SharedBackend {
    inner: Box<dyn VlmBackend>,
    gate: Mutex<BackendStats>,
}

impl SharedBackend {
    pub fn new(inner: impl VlmBackend + 'static) -> Arc<Self> {
        Arc::new(Self {
            inner: Box::new(inner),
            gate: Mutex::new(BackendStats::default()),
        })
    }

    pub fn query(&self, request: &VlmRequest) -> Result<VlmReply, BackendError> {
        let mut stats = self.gate.lock().unwrap_or_else(|p| p.into_inner());
        let started = Instant::now();
        let reply = self.inner.complete(request);
        stats.calls += 1;
        stats.busy += started.elapsed();
        if let Ok(r) = &reply {
            stats.reported_ms += r.inference_ms;
        }
        reply
    }

    pub fn stats(&self) -> BackendStats {
        *self.gate.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn model_name(&self) -> String {
        self.inner.model_name()
    }
}

/// Sends a decision prompt and returns `(raw text, inference ms)`.
pub fn query_backend(backend: &SharedBackend, prompt: &DecisionPrompt) -> Result<(String, f64), BackendError> {
    let reply = backend.query(&VlmRequest::decision(prompt))?;
    Ok((reply.text, reply.inference_ms))
}
