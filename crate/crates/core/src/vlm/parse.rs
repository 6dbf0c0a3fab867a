//! Lenient parsing of model replies.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::world::NodeId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VlmDecision {
    pub node_id: Option<NodeId>,
    pub reason: String,
    pub raw_text: String,
    pub inference_ms: f64,
    pub parse_anomaly: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Confidence {
    High,
    Medium,
    Low,
}

impl Confidence {
    /// Numeric weight used when averaging confirmations.
    pub fn score(&self) -> f64 {
        match self {
            Self::High => 1.0,
            Self::Medium => 0.6,
            Self::Low => 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifiedObject {
    pub label: String,
    pub position: String,
    pub salience: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfirmationReport {
    pub at_target: bool,
    pub confidence: Confidence,
    pub scene_description: String,
    pub reasoning: String,
    pub identified_objects: Vec<IdentifiedObject>,
}

/// Drops a leading chain-of-thought block and markdown fences, then returns
/// the outermost `{...}` span.
pub fn extract_json_payload(raw: &str) -> Option<&str> {
    let mut body = raw;
    if let Some(end) = body.rfind("</think>") {
        body = &body[end + "</think>".len()..];
    }
    let body = body.trim();
    let body = match body.strip_prefix("```") {
        Some(rest) => {
            let rest = rest.trim_start_matches(|c: char| c.is_ascii_alphanumeric());
            rest.rfind("```").map_or(rest, |end| &rest[..end])
        }
        None => body,
    };
    let start = body.find('{')?;
    let end = body.rfind('}')?;
    (end > start).then(|| &body[start..=end])
}

fn as_node_id(v: &Value) -> Option<NodeId> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .or_else(|| n.as_f64().filter(|f| f.fract() == 0.0).map(|f| f as NodeId)),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

/// Never fails: an unparseable reply yields `node_id: None` with
/// `parse_anomaly` set.
pub fn parse_decision_response(raw: &str) -> VlmDecision {
    let parsed = extract_json_payload(raw)
        .and_then(|json| serde_json::from_str::<Value>(json).ok())
        .and_then(|v| {
            let node = as_node_id(v.get("node_id")?)?;
            let reason = v.get("reason").and_then(Value::as_str).unwrap_or("").to_owned();
            Some((node, reason))
        });
    match parsed {
        Some((node, reason)) => VlmDecision {
            node_id: Some(node),
            reason,
            raw_text: raw.to_owned(),
            inference_ms: 0.0,
            parse_anomaly: false,
        },
        None => VlmDecision {
            node_id: None,
            reason: String::new(),
            raw_text: raw.to_owned(),
            inference_ms: 0.0,
            parse_anomaly: true,
        },
    }
}

/// Canonical reply body for a decision.
pub fn render_decision(node_id: NodeId, reason: &str) -> String {
    serde_json::json!({ "node_id": node_id, "reason": reason }).to_string()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseAnomaly(pub String);

pub fn parse_confirmation_response(raw: &str) -> Result<ConfirmationReport, ParseAnomaly> {
    let json = extract_json_payload(raw).ok_or_else(|| ParseAnomaly("no JSON object in reply".into()))?;
    serde_json::from_str(json).map_err(|e| ParseAnomaly(e.to_string()))
}
