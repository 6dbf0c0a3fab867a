//! The compiled digest: the only memory artifact a navigator reads at
//! startup.

use std::path::Path;

use md5::{Digest as _, Md5};
use serde::{Deserialize, Serialize};

use super::{M1EntityRecord, M2Pattern, M3Preference, MemoryStore};
use crate::error::MemoryError;
use crate::world::{NodeId, Policy};

pub const ENTITY_LIMIT: usize = 5;
pub const ENTITY_TRIMMED: usize = 3;
pub const PATTERN_LIMIT: usize = 3;
pub const PATTERN_TRIMMED: usize = 2;
const MAX_PROMOTION_EXAMPLES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigestEntity {
    pub id: String,
    pub node_id: NodeId,
    pub visits: u32,
    pub success_rate: f64,
    pub signature: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigestPattern {
    pub node_id: NodeId,
    pub description: String,
    pub count: usize,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Promotion {
    pub key: String,
    pub examples: Vec<String>,
    pub node_id: NodeId,
    pub frequency: u32,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GlobalStats {
    pub task_count: usize,
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Digest {
    pub top_entities: Vec<DigestEntity>,
    pub top_patterns: Vec<DigestPattern>,
    pub l3a_promotions_ready: Vec<Promotion>,
    pub global_stats: GlobalStats,
}

/// Result of [`compile_digest`].
#[derive(Debug, Clone)]
pub struct CompiledDigest {
    pub digest: Digest,
    pub text: String,
    pub md5: String,
    pub trimmed: bool,
    /// Set when the promotions alone exceed the character limit.
    pub over_limit: bool,
}

pub fn md5_hex(bytes: &[u8]) -> String {
    hex::encode(Md5::digest(bytes))
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

impl Digest {
    /// Canonical form: sorted keys, no insignificant whitespace.
    pub fn to_canonical_string(&self) -> String {
        // serde_json::Value keeps object keys in a BTreeMap, which sorts them.
        let value = serde_json::to_value(self).expect("digest is always representable");
        serde_json::to_string(&value).expect("value serialization cannot fail")
    }

    pub fn md5(&self) -> String {
        md5_hex(self.to_canonical_string().as_bytes())
    }

    pub fn parse(text: &str) -> Result<Self, MemoryError> {
        serde_json::from_str(text).map_err(|e| MemoryError::Digest(e.to_string()))
    }

    pub fn is_empty(&self) -> bool {
        self.top_entities.is_empty()
            && self.top_patterns.is_empty()
            && self.l3a_promotions_ready.is_empty()
            && self.global_stats.task_count == 0
    }
}

/// A digest read at session start together with the hash of its bytes.
#[derive(Debug, Clone)]
pub struct LoadedDigest {
    pub digest: Option<Digest>,
    /// MD5 of the file bytes, or `"none"` when no usable file exists.
    pub hash: String,
}

impl LoadedDigest {
    pub fn absent() -> Self {
        Self {
            digest: None,
            hash: "none".into(),
        }
    }
}

/// Fault-tolerant load: a missing, empty or corrupt file degrades to "no
/// digest" with a warning.
pub fn load_digest(path: Option<&Path>) -> LoadedDigest {
    let Some(path) = path else {
        return LoadedDigest::absent();
    };
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) => {
            tracing::warn!(path = %path.display(), error = %e, "digest unavailable, continuing without memory");
            return LoadedDigest::absent();
        }
    };
    if bytes.iter().all(u8::is_ascii_whitespace) {
        tracing::warn!(path = %path.display(), "digest file is empty, continuing without memory");
        return LoadedDigest::absent();
    }
    match std::str::from_utf8(&bytes).ok().map(Digest::parse) {
        Some(Ok(digest)) => LoadedDigest {
            hash: md5_hex(&bytes),
            digest: Some(digest),
        },
        _ => {
            tracing::warn!(path = %path.display(), "digest is corrupt, continuing without memory");
            LoadedDigest::absent()
        }
    }
}

/// Writes via a temporary sibling and a rename so readers never observe a
/// torn file.
pub fn write_digest_atomic(path: &Path, text: &str) -> Result<(), MemoryError> {
    let tmp = path.with_extension("json.tmp");
    let io = |source| MemoryError::Io {
        path: path.display().to_string(),
        source,
    };
    std::fs::write(&tmp, text).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

fn entity_of(r: &M1EntityRecord) -> DigestEntity {
    DigestEntity {
        id: r.poi_id.clone(),
        node_id: r.node_id,
        visits: r.visit_count,
        success_rate: round3(r.success_rate),
        signature: r.signature_type.clone(),
    }
}

fn pattern_of(p: &M2Pattern) -> DigestPattern {
    DigestPattern {
        node_id: p.node_id,
        description: p.description.clone(),
        count: p.observation_count,
        confidence: round3(p.confidence),
    }
}

fn promotion_of(p: &M3Preference) -> Promotion {
    Promotion {
        key: p.key.clone(),
        examples: p.examples.iter().take(MAX_PROMOTION_EXAMPLES).cloned().collect(),
        node_id: p.dominant_node,
        frequency: p.frequency,
    }
}

/// Selects top entities/patterns, all promoted preferences and global stats,
/// trimming entities to 3 and patterns to 2 when over the limit.
pub fn compile_digest(store: &MemoryStore, policy: &Policy) -> CompiledDigest {
    let mut entities: Vec<&M1EntityRecord> = store.m1.iter().filter(|e| e.visit_count > 0).collect();
    entities.sort_by(|a, b| b.visit_count.cmp(&a.visit_count).then_with(|| a.poi_id.cmp(&b.poi_id)));

    let mut patterns: Vec<&M2Pattern> = store.m2.iter().collect();
    patterns.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then_with(|| b.observation_count.cmp(&a.observation_count))
            .then_with(|| a.node_id.cmp(&b.node_id))
            .then_with(|| a.description.cmp(&b.description))
    });

    let promotions: Vec<Promotion> = store
        .m3
        .iter()
        .filter(|p| p.ready_for_l3a_promotion)
        .map(promotion_of)
        .collect();

    let completed = store.m5.iter().filter(|r| r.nav_outcome.is_complete()).count();
    let global_stats = GlobalStats {
        task_count: store.m5.len(),
        success_rate: if store.m5.is_empty() {
            0.0
        } else {
            round3(completed as f64 / store.m5.len() as f64)
        },
    };

    let build = |n_entities: usize, n_patterns: usize| Digest {
        top_entities: entities.iter().take(n_entities).map(|e| entity_of(e)).collect(),
        top_patterns: patterns.iter().take(n_patterns).map(|p| pattern_of(p)).collect(),
        l3a_promotions_ready: promotions.clone(),
        global_stats: global_stats.clone(),
    };

    let limit = policy.digest_char_limit;
    let mut digest = build(ENTITY_LIMIT, PATTERN_LIMIT);
    let mut text = digest.to_canonical_string();
    let mut trimmed = false;
    if text.chars().count() > limit {
        digest = build(ENTITY_TRIMMED, PATTERN_TRIMMED);
        text = digest.to_canonical_string();
        trimmed = true;
    }
    let over_limit = text.chars().count() > limit;
    if over_limit {
        tracing::warn!(
            chars = text.chars().count(),
            limit,
            "digest exceeds the character limit after trimming; promotions are kept intact"
        );
    }
    CompiledDigest {
        md5: md5_hex(text.as_bytes()),
        digest,
        text,
        trimmed,
        over_limit,
    }
}
