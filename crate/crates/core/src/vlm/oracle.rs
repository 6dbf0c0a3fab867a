//! Scripted stand-in for the vision-language model.
//!
//! Decision replies come from per-instruction entries, either replayed in
//! order (`sequence`) or drawn from weights with a seeded generator
//! (`weighted`). Confirmation replies are derived from a scripted scene per
//! node: the target is confirmed when every expected class is visible.
//!
//! Latencies are stamped into the reply. With `real_time` set the oracle
//! also sleeps for them.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::backend::{VlmBackend, VlmReply, VlmRequest, VlmTask};
use super::parse::render_decision;
use crate::error::BackendError;
use crate::world::{normalize_text, NodeId};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    #[default]
    Contains,
    Exact,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DrawMode {
    #[default]
    Sequence,
    Weighted,
}

/// How the reply body is wrapped, to exercise the parser.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wrap {
    #[default]
    None,
    Fence,
    Think,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedResponse {
    #[serde(default)]
    pub node_id: Option<NodeId>,
    #[serde(default)]
    pub reason: String,
    #[serde(default = "one")]
    pub weight: f64,
    /// Verbatim reply text; overrides `node_id`/`reason`.
    #[serde(default)]
    pub raw: Option<String>,
    #[serde(default)]
    pub wrap: Wrap,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionEntry {
    pub pattern: String,
    #[serde(default, rename = "match")]
    pub match_mode: MatchMode,
    #[serde(default)]
    pub mode: DrawMode,
    pub responses: Vec<ScriptedResponse>,
    #[serde(default)]
    pub latencies_ms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SceneScript {
    pub description: String,
    #[serde(default)]
    pub visible: Vec<String>,
    #[serde(default)]
    pub latency_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleScript {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub real_time: bool,
    #[serde(default = "default_latency")]
    pub default_latency_ms: f64,
    #[serde(default)]
    pub decisions: Vec<DecisionEntry>,
    /// Keyed by node id (as a string, JSON object keys).
    #[serde(default)]
    pub scenes: BTreeMap<String, SceneScript>,
    #[serde(default)]
    pub default_scene: Option<SceneScript>,
    #[serde(default = "default_model")]
    pub model: String,
}

fn default_latency() -> f64 {
    5000.0
}

fn default_model() -> String {
    "scripted-oracle".into()
}

impl Default for OracleScript {
    fn default() -> Self {
        Self {
            seed: 0,
            real_time: false,
            default_latency_ms: default_latency(),
            decisions: Vec::new(),
            scenes: BTreeMap::new(),
            default_scene: None,
            model: default_model(),
        }
    }
}

impl OracleScript {
    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Transport(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| BackendError::Protocol(format!("{}: {e}", path.display())))
    }

    /// Degenerate script answering every decision with the same node.
    pub fn constant(node_id: NodeId, reason: &str, latency_ms: f64) -> Self {
        Self {
            default_latency_ms: latency_ms,
            decisions: vec![DecisionEntry {
                pattern: String::new(),
                match_mode: MatchMode::Contains,
                mode: DrawMode::Sequence,
                responses: vec![ScriptedResponse {
                    node_id: Some(node_id),
                    reason: reason.into(),
                    weight: 1.0,
                    raw: None,
                    wrap: Wrap::None,
                }],
                latencies_ms: vec![latency_ms],
            }],
            ..Self::default()
        }
    }
}

struct EntryState {
    cursor: usize,
    latency_cursor: usize,
    rng: ChaCha8Rng,
}

pub struct OracleBackend {
    script: OracleScript,
    patterns: Vec<String>,
    state: Mutex<Vec<EntryState>>,
}

impl OracleBackend {
    pub fn new(script: OracleScript) -> Self {
        let state = (0..script.decisions.len())
            .map(|i| EntryState {
                cursor: 0,
                latency_cursor: 0,
                rng: ChaCha8Rng::seed_from_u64(script.seed.wrapping_add(i as u64)),
            })
            .collect();
        let patterns = script.decisions.iter().map(|d| normalize_text(&d.pattern)).collect();
        Self {
            script,
            patterns,
            state: Mutex::new(state),
        }
    }

    pub fn with_real_time(mut self, on: bool) -> Self {
        self.script.real_time = on;
        self
    }

    fn find_entry(&self, instruction: &str) -> Option<usize> {
        let normalized = normalize_text(instruction);
        self.script
            .decisions
            .iter()
            .zip(&self.patterns)
            .position(|(entry, pattern)| match entry.match_mode {
                MatchMode::Exact => normalized == *pattern,
                MatchMode::Contains => normalized.contains(pattern.as_str()),
            })
    }

    fn decide(&self, instruction: &str) -> (String, f64) {
        let Some(i) = self.find_entry(instruction) else {
            let text = r#"{"node_id": null, "reason": "no scripted answer"}"#.to_owned();
            return (text, self.script.default_latency_ms);
        };
        let entry = &self.script.decisions[i];
        let mut states = self.state.lock().unwrap_or_else(|p| p.into_inner());
        let st = &mut states[i];
        let pick = match entry.mode {
            DrawMode::Sequence => {
                let k = st.cursor % entry.responses.len().max(1);
                st.cursor += 1;
                k
            }
            DrawMode::Weighted => {
                let weights: Vec<f64> = entry.responses.iter().map(|r| r.weight.max(0.0)).collect();
                match WeightedIndex::new(&weights) {
                    Ok(dist) => dist.sample(&mut st.rng),
                    Err(_) => 0,
                }
            }
        };
        let latency = if entry.latencies_ms.is_empty() {
            self.script.default_latency_ms
        } else {
            let l = entry.latencies_ms[st.latency_cursor % entry.latencies_ms.len()];
            st.latency_cursor += 1;
            l
        };
        let text = match entry.responses.get(pick) {
            Some(resp) => render_scripted(resp),
            None => r#"{"node_id": null, "reason": "empty script entry"}"#.to_owned(),
        };
        (text, latency)
    }

    fn confirm(&self, node_id: NodeId, expected: &[String]) -> (String, f64) {
        let scene = self
            .script
            .scenes
            .get(&node_id.to_string())
            .or(self.script.default_scene.as_ref())
            .cloned()
            .unwrap_or_default();
        let visible: Vec<String> = scene.visible.iter().map(|v| normalize_text(v)).collect();
        let wanted: Vec<String> = expected.iter().map(|e| normalize_text(e)).collect();
        let seen = wanted.iter().filter(|w| visible.contains(w)).count();
        let (at_target, confidence) = if !wanted.is_empty() && seen == wanted.len() {
            (true, "HIGH")
        } else if seen > 0 {
            (false, "MEDIUM")
        } else {
            (false, "LOW")
        };
        let missing: Vec<&str> = wanted
            .iter()
            .filter(|w| !visible.contains(w))
            .map(String::as_str)
            .collect();
        let reasoning = if missing.is_empty() {
            "all expected objects are visible".to_owned()
        } else {
            format!("not visible: {}", missing.join(", "))
        };
        let objects: Vec<serde_json::Value> = scene
            .visible
            .iter()
            .enumerate()
            .map(|(k, label)| {
                serde_json::json!({
                    "label": label,
                    "position": (["center", "left", "right"][k % 3]),
                    "salience": if k == 0 { "high" } else { "medium" },
                })
            })
            .collect();
        let body = serde_json::json!({
            "at_target": at_target,
            "confidence": confidence,
            "scene_description": scene.description,
            "reasoning": reasoning,
            "identified_objects": objects,
        });
        let latency = scene.latency_ms.unwrap_or(self.script.default_latency_ms);
        (body.to_string(), latency)
    }
}

fn render_scripted(resp: &ScriptedResponse) -> String {
    let body = match (&resp.raw, resp.node_id) {
        (Some(raw), _) => raw.clone(),
        (None, Some(node)) => render_decision(node, &resp.reason),
        (None, None) => serde_json::json!({ "node_id": null, "reason": resp.reason }).to_string(),
    };
    match resp.wrap {
        Wrap::None => body,
        Wrap::Fence => format!("```json\n{body}\n```"),
        Wrap::Think => format!("<think>\nweighing the candidate nodes\n</think>\n{body}"),
    }
}

impl VlmBackend for OracleBackend {
    fn complete(&self, request: &VlmRequest) -> Result<VlmReply, BackendError> {
        let (text, inference_ms) = match &request.task {
            VlmTask::Decision { instruction } => self.decide(instruction),
            VlmTask::Confirmation {
                node_id,
                expected,
                viewpoint,
            } => self.confirm(viewpoint.unwrap_or(*node_id), expected),
        };
        if self.script.real_time && inference_ms > 0.0 {
            std::thread::sleep(Duration::from_secs_f64(inference_ms / 1000.0));
        }
        Ok(VlmReply { text, inference_ms })
    }

    fn model_name(&self) -> String {
        self.script.model.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vlm::parse::{parse_confirmation_response, parse_decision_response, Confidence};

    fn decision(instruction: &str) -> VlmRequest {
        VlmRequest {
            task: VlmTask::Decision {
                instruction: instruction.into(),
            },
            prompt: String::new(),
            image: None,
        }
    }

    #[test]
    fn constant_oracle_repeats() {
        let oracle = OracleBackend::new(OracleScript::constant(9, "seat", 100.0));
        for _ in 0..5 {
            let r = oracle.complete(&decision("anything")).unwrap();
            assert_eq!(parse_decision_response(&r.text).node_id, Some(9));
            assert_eq!(r.inference_ms, 100.0);
        }
    }

    #[test]
    fn weighted_draws_replay_with_same_seed() {
        let script = OracleScript {
            seed: 42,
            decisions: vec![DecisionEntry {
                pattern: "relax".into(),
                match_mode: MatchMode::Contains,
                mode: DrawMode::Weighted,
                responses: vec![
                    ScriptedResponse { node_id: Some(9), reason: "a".into(), weight: 6.0, raw: None, wrap: Wrap::None },
                    ScriptedResponse { node_id: Some(15), reason: "b".into(), weight: 1.0, raw: None, wrap: Wrap::Fence },
                ],
                latencies_ms: vec![],
            }],
            ..OracleScript::default()
        };
        let run = |s: &OracleScript| {
            let o = OracleBackend::new(s.clone());
            (0..50)
                .map(|_| parse_decision_response(&o.complete(&decision("sit and relax")).unwrap().text).node_id)
                .collect::<Vec<_>>()
        };
        let a = run(&script);
        assert_eq!(a, run(&script));
        assert!(a.contains(&Some(9)) && a.contains(&Some(15)));
    }

    #[test]
    fn unmatched_instruction_yields_unparseable_reply() {
        let oracle = OracleBackend::new(OracleScript::default());
        let r = oracle.complete(&decision("hello")).unwrap();
        assert!(parse_decision_response(&r.text).parse_anomaly);
    }

    #[test]
    fn confirmation_depends_on_visible_classes() {
        let mut script = OracleScript::default();
        script.scenes.insert(
            "8".into(),
            SceneScript {
                description: "fire extinguisher on the floor".into(),
                visible: vec!["fire extinguisher".into(), "laboratory".into()],
                latency_ms: Some(3000.0),
            },
        );
        let oracle = OracleBackend::new(script);
        let req = VlmRequest {
            task: VlmTask::Confirmation {
                node_id: 8,
                expected: vec!["laboratory".into(), "fire hydrant".into()],
                viewpoint: None,
            },
            prompt: String::new(),
            image: None,
        };
        let reply = oracle.complete(&req).unwrap();
        let report = parse_confirmation_response(&reply.text).unwrap();
        assert!(!report.at_target);
        assert_eq!(report.confidence, Confidence::Medium);
        assert_eq!(reply.inference_ms, 3000.0);
    }
}
