//! Escalation path: prompt construction, backend access and reply parsing.

mod backend;
mod http;
mod oracle;
mod parse;
mod prompt;

pub use backend::{
    query_backend, BackendStats, GenerationParams, SharedBackend, VlmBackend, VlmReply, VlmRequest, VlmTask,
};
pub use http::{HttpChatBackend, DEFAULT_CHAT_ENDPOINT, DEFAULT_MODEL};
pub use oracle::{
    DecisionEntry, DrawMode, MatchMode, OracleBackend, OracleScript, SceneScript, ScriptedResponse, Wrap,
};
pub use parse::{
    extract_json_payload, parse_confirmation_response, parse_decision_response, render_decision, Confidence,
    ConfirmationReport, IdentifiedObject, ParseAnomaly, VlmDecision,
};
pub use prompt::{
    build_confirmation_prompt, build_decision_prompt, build_memory_prefix, ConfirmationPrompt, DecisionPrompt,
    PromptSection, DECISION_RULES,
};
