//! Offline semantic memory: M1 entities, M2 scene patterns, M3 operator
//! preferences, M4 platform capabilities and M5 task history, plus the
//! compiled digest and the refresh workflow.

mod digest;
mod extract;
mod refresh;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::executive::NavOutcome;
use crate::resolver::ResolutionMethod;
use crate::world::NodeId;

pub use digest::{
    compile_digest, load_digest, md5_hex, write_digest_atomic, CompiledDigest, Digest, DigestEntity,
    DigestPattern, GlobalStats, LoadedDigest, Promotion, ENTITY_LIMIT, ENTITY_TRIMMED, PATTERN_LIMIT,
    PATTERN_TRIMMED,
};
pub use extract::{
    cluster_observations, extract_from_records, extract_memory, group_preferences, SceneObservation,
};
pub use refresh::{diff_digests, refresh_workflow, RefreshOptions, RefreshReport};

pub const DIGEST_FILE: &str = "digest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M1EntityRecord {
    pub poi_id: String,
    pub node_id: NodeId,
    pub signature_type: String,
    pub visit_count: u32,
    pub success_rate: f64,
    pub mean_nav_time_s: f64,
    /// Mean mapped confidence over VLM confirmations; absent for nodes only
    /// ever confirmed by pose.
    pub mean_confidence: Option<f64>,
    pub visit_count_by_platform: BTreeMap<String, u32>,
    pub success_rate_by_platform: BTreeMap<String, f64>,
    pub unreliable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M2Pattern {
    pub node_id: NodeId,
    pub keywords: Vec<String>,
    pub observation_count: usize,
    pub confidence: f64,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M3Preference {
    pub key: String,
    pub examples: Vec<String>,
    pub frequency: u32,
    pub dominant_node: NodeId,
    pub consistency: f64,
    pub node_counts: BTreeMap<NodeId, u32>,
    pub method_counts: BTreeMap<String, u32>,
    pub ready_for_l3a_promotion: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M4Platform {
    pub platform_id: String,
    pub version: String,
    pub model: String,
    pub policy_path: String,
    pub signature_counts: Value,
    pub architecture: String,
    pub memory_digest_hash: String,
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M5TaskSummary {
    pub timestamp: String,
    pub platform_id: String,
    pub session_id: String,
    pub instruction: String,
    pub return_command: bool,
    pub method: ResolutionMethod,
    pub node_id: Option<NodeId>,
    pub allowed: bool,
    pub nav_outcome: NavOutcome,
    pub confirmed: bool,
    pub resolve_ms: f64,
    pub vlm_ms: f64,
    pub nav_total_s: f64,
    pub scenario: Option<String>,
    pub anomalies: Vec<String>,
}

/// Everything the extractor produces in one pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MemoryStore {
    pub m1: Vec<M1EntityRecord>,
    pub m2: Vec<M2Pattern>,
    pub m3: Vec<M3Preference>,
    pub m4: Vec<M4Platform>,
    pub m5: Vec<M5TaskSummary>,
    /// Platforms requested for demultiplexing.
    pub platforms: Vec<String>,
    /// Platforms seen in the logs but not requested.
    pub unknown_platforms: Vec<String>,
}

impl MemoryStore {
    pub fn m4_for<'a>(&'a self, platform: &'a str) -> impl Iterator<Item = &'a M4Platform> + 'a {
        self.m4.iter().filter(move |r| r.platform_id == platform)
    }

    pub fn m5_for<'a>(&'a self, platform: &'a str) -> impl Iterator<Item = &'a M5TaskSummary> + 'a {
        self.m5.iter().filter(move |r| r.platform_id == platform)
    }

    pub fn promotions(&self) -> impl Iterator<Item = &M3Preference> {
        self.m3.iter().filter(|p| p.ready_for_l3a_promotion)
    }

    /// File name to JSONL contents, in a stable order.
    pub fn render_files(&self) -> Vec<(String, String)> {
        let mut files = vec![
            ("M1.jsonl".to_owned(), jsonl(&self.m1)),
            ("M2.jsonl".to_owned(), jsonl(&self.m2)),
            ("M3.jsonl".to_owned(), jsonl(&self.m3)),
            ("M4.jsonl".to_owned(), jsonl(&self.m4)),
            ("M5.jsonl".to_owned(), jsonl(&self.m5)),
        ];
        for p in &self.platforms {
            let m4: Vec<_> = self.m4_for(p).collect();
            let m5: Vec<_> = self.m5_for(p).collect();
            files.push((format!("M4_{p}.jsonl"), jsonl(&m4)));
            files.push((format!("M5_{p}.jsonl"), jsonl(&m5)));
        }
        files
    }

    /// Reads back the global category files written by [`Self::write_to`].
    /// Missing files count as empty categories.
    pub fn load_dir(dir: &std::path::Path) -> Result<Self, crate::error::MemoryError> {
        Ok(Self {
            m1: read_jsonl(&dir.join("M1.jsonl"))?,
            m2: read_jsonl(&dir.join("M2.jsonl"))?,
            m3: read_jsonl(&dir.join("M3.jsonl"))?,
            m4: read_jsonl(&dir.join("M4.jsonl"))?,
            m5: read_jsonl(&dir.join("M5.jsonl"))?,
            ..Self::default()
        })
    }

    /// Writes all category files and the compiled digest into `dir`.
    pub fn write_to(&self, dir: &std::path::Path, compiled: &CompiledDigest) -> Result<(), crate::error::MemoryError> {
        let io = |path: &std::path::Path| {
            let path = path.display().to_string();
            move |source| crate::error::MemoryError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        for (name, text) in self.render_files() {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(io(&path))?;
        }
        write_digest_atomic(&dir.join(DIGEST_FILE), &compiled.text)
    }
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<Vec<T>, crate::error::MemoryError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = std::fs::read_to_string(path).map_err(|source| crate::error::MemoryError::Io {
        path: path.display().to_string(),
        source,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| crate::error::MemoryError::Digest(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

fn jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("memory records serialize"));
        out.push('\n');
    }
    out
}
