use thiserror::Error;

use crate::world::NodeId;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: parse failure: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: feature {index}: {message}")]
    Invalid {
        path: String,
        index: usize,
        message: String,
    },
    #[error("{path}: feature {index}: edge references missing node {node}")]
    DanglingEdge {
        path: String,
        index: usize,
        node: NodeId,
    },
    #[error("{path}: feature {index}: unknown visual_signature_type `{value}`")]
    UnknownSignature {
        path: String,
        index: usize,
        value: String,
    },
    #[error("{path}: navigation graph has no nodes")]
    EmptyGraph { path: String },
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("policy parse failure: {0}")]
    Parse(String),
    #[error("policy value out of range: {0}")]
    OutOfRange(String),
}

/// Backend failures. All are retryable from the caller's point of view.
#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend transport error: {0}")]
    Transport(String),
    #[error("backend returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("backend reply malformed: {0}")]
    Protocol(String),
}

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("audit I/O failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("audit serialization failure: {0}")]
    Serialize(#[from] serde_json::Error),
    #[error("{path}:{line}: {message}")]
    Schema {
        path: String,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Error)]
pub enum MemoryError {
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error("memory I/O failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("digest parse failure: {0}")]
    Digest(String),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario script {path}: {message}")]
    Script { path: String, message: String },
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("I/O failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("context bridge: {0}")]
    Bridge(String),
    #[error("session worker panicked: {0}")]
    Worker(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("invalid argument: {0}")]
    Domain(String),
    #[error("statistic undefined: {0}")]
    Undefined(String),
}
