//! Deterministic instruction resolution.
//!
//! Seven steps are tried in a fixed order and the first unambiguous match
//! wins:
//!
//! | step | test                                                        |
//! |------|-------------------------------------------------------------|
//! | 0    | learned operator preference (Jaccard over stored examples)  |
//! | 1    | explicit `node <N>` / `nodul <N>` reference                 |
//! | 2    | node name containment (either direction)                    |
//! | 3    | static object id containment                                |
//! | 4    | lexical attribute-value scoring                             |
//! | 5    | single mentioned class with a single static instance        |
//! | 6    | proximity keyword + single class with several instances     |
//!
//! When nothing matches the caller receives an [`EscalationSignal`] rather
//! than a best guess.

use std::fmt;
use std::time::Instant;

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::memory::Digest;
use crate::world::text::{jaccard_similarity, normalize_text, tokenize, TokenSet};
use crate::world::{NodeId, Policy, Pose, World};

static NODE_REF: Lazy<Regex> = Lazy::new(|| Regex::new(r"\b(?:node|nodul)\s+(\d+)\b").unwrap());

/// Closed list of proximity cues, already normalized.
pub const PROXIMITY_KEYWORDS: [&str; 3] = ["closest", "nearest", "cel mai apropiat"];

const SCORE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ResolutionMethod {
    #[serde(rename = "L3a_m3_preference")]
    L3aM3Preference,
    #[serde(rename = "L3a_deterministic")]
    L3aDeterministic,
    #[serde(rename = "L3b_vlm")]
    L3bVlm,
}

impl ResolutionMethod {
    pub const ALL: [ResolutionMethod; 3] = [Self::L3aM3Preference, Self::L3aDeterministic, Self::L3bVlm];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::L3aM3Preference => "L3a_m3_preference",
            Self::L3aDeterministic => "L3a_deterministic",
            Self::L3bVlm => "L3b_vlm",
        }
    }

    pub fn is_fast_path(&self) -> bool {
        !matches!(self, Self::L3bVlm)
    }
}

impl fmt::Display for ResolutionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Details of a Step 0 hit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M3Match {
    pub jaccard: f64,
    pub preference_key: String,
    pub frequency: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub method: ResolutionMethod,
    pub node_id: NodeId,
    pub step: Option<u8>,
    pub m3_match: Option<M3Match>,
    /// Wall time spent in the cascade, microseconds.
    pub resolve_time_us: f64,
}

impl Resolution {
    pub fn resolve_ms(&self) -> f64 {
        self.resolve_time_us / 1000.0
    }

    /// Same decision, ignoring the timing measurement.
    pub fn same_decision(&self, other: &Resolution) -> bool {
        self.method == other.method
            && self.node_id == other.node_id
            && self.step == other.step
            && self.m3_match == other.m3_match
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscalationSignal {
    pub reason: String,
    pub resolve_time_us: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ResolveOutcome {
    Resolved(Resolution),
    Escalate(EscalationSignal),
}

impl ResolveOutcome {
    pub fn resolution(&self) -> Option<&Resolution> {
        match self {
            Self::Resolved(r) => Some(r),
            Self::Escalate(_) => None,
        }
    }

    pub fn is_escalation(&self) -> bool {
        matches!(self, Self::Escalate(_))
    }

    pub fn resolve_time_us(&self) -> f64 {
        match self {
            Self::Resolved(r) => r.resolve_time_us,
            Self::Escalate(e) => e.resolve_time_us,
        }
    }
}

/// One evaluated step and why it did or did not match.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: u8,
    pub matched: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub steps: Vec<StepReport>,
}

impl Trace {
    pub fn evaluated(&self) -> Vec<u8> {
        self.steps.iter().map(|s| s.step).collect()
    }

    fn push(&mut self, step: u8, matched: bool, detail: impl Into<String>) {
        self.steps.push(StepReport {
            step,
            matched,
            detail: detail.into(),
        });
    }

    fn summary(&self) -> String {
        self.steps
            .iter()
            .map(|s| format!("step {}: {}", s.step, s.detail))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

#[derive(Debug, Clone)]
struct IndexedPreference {
    key: String,
    node_id: NodeId,
    frequency: u32,
    examples: Vec<TokenSet>,
}

/// Step 0 lookup table built once from a digest's promotions.
#[derive(Debug, Clone, Default)]
pub struct PreferenceIndex {
    entries: Vec<IndexedPreference>,
}

impl PreferenceIndex {
    pub fn from_digest(digest: &Digest) -> Self {
        let entries = digest
            .l3a_promotions_ready
            .iter()
            .map(|p| IndexedPreference {
                key: p.key.clone(),
                node_id: p.node_id,
                frequency: p.frequency,
                examples: p.examples.iter().map(|e| tokenize(&normalize_text(e))).collect(),
            })
            .collect();
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Step 0 result.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceHit {
    pub node_id: NodeId,
    pub jaccard: f64,
    pub preference_key: String,
    pub frequency: u32,
}

/// Compares `tokens` against every stored example. All candidates at or
/// above `threshold` must agree on one node; any disagreement is ambiguous.
pub fn match_m3_preference(
    tokens: &TokenSet,
    index: &PreferenceIndex,
    threshold: f64,
) -> Option<PreferenceHit> {
    let mut best: Option<PreferenceHit> = None;
    let mut node: Option<NodeId> = None;
    for pref in &index.entries {
        for example in &pref.examples {
            let j = jaccard_similarity(tokens, example);
            if j + SCORE_EPSILON < threshold {
                continue;
            }
            match node {
                Some(n) if n != pref.node_id => return None,
                _ => node = Some(pref.node_id),
            }
            if best.as_ref().map_or(true, |b| j > b.jaccard) {
                best = Some(PreferenceHit {
                    node_id: pref.node_id,
                    jaccard: j,
                    preference_key: pref.key.clone(),
                    frequency: pref.frequency,
                });
            }
        }
    }
    best
}

/// Step 1: `node <N>` or `nodul <N>`, accepted only if N is a graph node.
pub fn step_node_id(normalized: &str, world: &World) -> Option<NodeId> {
    NODE_REF
        .captures_iter(normalized)
        .filter_map(|c| c[1].parse::<NodeId>().ok())
        .find(|id| world.graph().contains(*id))
}

/// Step 2: node names contained in the instruction, or the instruction
/// contained in a node name. Exactly one match is required.
pub fn step_node_name(normalized: &str, world: &World) -> Option<NodeId> {
    if normalized.is_empty() {
        return None;
    }
    let mut hit = None;
    for (id, name) in &world.index().node_names {
        if name.is_empty() {
            continue;
        }
        if normalized.contains(name.as_str()) || name.contains(normalized) {
            if hit.is_some() {
                return None;
            }
            hit = Some(*id);
        }
    }
    hit
}

/// Step 3: static object ids contained in the instruction.
pub fn step_object_id(normalized: &str, world: &World) -> Option<NodeId> {
    let mut hit = None;
    for (i, obj) in world.index().obj_ids.iter().enumerate() {
        if !obj.is_empty() && normalized.contains(obj.as_str()) {
            if hit.is_some() {
                return None;
            }
            hit = Some(world.pois()[i].nearest_node);
        }
    }
    hit
}

/// Step 4: per POI, count attribute values present verbatim (after
/// normalization) in the instruction. The unique top scorer with score >= 1
/// wins; no synonyms, no affordances.
pub fn step_attribute_scoring(normalized: &str, world: &World) -> Option<NodeId> {
    let mut best_score = 0usize;
    let mut best: Vec<usize> = Vec::new();
    for (i, values) in world.index().attribute_values.iter().enumerate() {
        let score = values.iter().filter(|v| normalized.contains(v.as_str())).count();
        if score == 0 {
            continue;
        }
        if score > best_score {
            best_score = score;
            best.clear();
        }
        if score == best_score {
            best.push(i);
        }
    }
    match best.as_slice() {
        [only] => Some(world.pois()[*only].nearest_node),
        _ => None,
    }
}

/// Static classes whose name (or head noun) occurs in the instruction.
fn mentioned_classes<'w>(normalized: &str, world: &'w World) -> Vec<&'w crate::world::ClassEntry> {
    world
        .index()
        .classes
        .iter()
        .filter(|c| c.aliases.iter().any(|a| normalized.contains(a.as_str())))
        .collect()
}

/// Step 5: exactly one class mentioned and it has exactly one static
/// instance.
pub fn step_single_class(normalized: &str, world: &World) -> Option<NodeId> {
    match mentioned_classes(normalized, world).as_slice() {
        [class] if class.members.len() == 1 => Some(world.pois()[class.members[0]].nearest_node),
        _ => None,
    }
}

pub fn has_proximity_keyword(normalized: &str) -> bool {
    PROXIMITY_KEYWORDS.iter().any(|k| normalized.contains(k))
}

/// Step 6: proximity keyword, exactly one class mentioned, several static
/// instances; the instance nearest the pose wins, lowest node id on exact
/// ties.
pub fn step_proximity(normalized: &str, world: &World, pose: &Pose) -> Option<NodeId> {
    if !has_proximity_keyword(normalized) {
        return None;
    }
    let classes = mentioned_classes(normalized, world);
    let [class] = classes.as_slice() else {
        return None;
    };
    if class.members.len() < 2 {
        return None;
    }
    let here = pose.position();
    class
        .members
        .iter()
        .map(|&i| {
            let poi = &world.pois()[i];
            (poi.position.distance(&here), poi.nearest_node)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, node)| node)
}

/// Forces one-time tables (regexes, stopwords) so the first timed
/// resolution does not pay for their construction.
pub fn warm_up() {
    Lazy::force(&NODE_REF);
    let _ = crate::world::text::default_stopwords();
}

/// Runs the cascade. `preferences` is `None` when no digest is loaded, in
/// which case Step 0 is skipped.
pub fn resolve(
    instruction: &str,
    world: &World,
    pose: &Pose,
    preferences: Option<&PreferenceIndex>,
    policy: &Policy,
) -> ResolveOutcome {
    resolve_traced(instruction, world, pose, preferences, policy).0
}

/// [`resolve`] plus a per-step trace.
pub fn resolve_traced(
    instruction: &str,
    world: &World,
    pose: &Pose,
    preferences: Option<&PreferenceIndex>,
    policy: &Policy,
) -> (ResolveOutcome, Trace) {
    let started = Instant::now();
    let mut trace = Trace::default();
    let normalized = normalize_text(instruction);

    let done = |method, node_id, step, m3_match, trace: Trace| {
        let resolution = Resolution {
            method,
            node_id,
            step: Some(step),
            m3_match,
            resolve_time_us: started.elapsed().as_secs_f64() * 1e6,
        };
        (ResolveOutcome::Resolved(resolution), trace)
    };

    match preferences {
        Some(index) if !index.is_empty() => {
            let tokens = tokenize(&normalized);
            if let Some(hit) = match_m3_preference(&tokens, index, policy.jaccard_threshold) {
                trace.push(0, true, format!("preference `{}` (jaccard {:.3})", hit.preference_key, hit.jaccard));
                let m3 = M3Match {
                    jaccard: hit.jaccard,
                    preference_key: hit.preference_key,
                    frequency: hit.frequency,
                };
                return done(ResolutionMethod::L3aM3Preference, hit.node_id, 0, Some(m3), trace);
            }
            trace.push(0, false, "no unambiguous preference above threshold");
        }
        _ => trace.push(0, false, "no preference index loaded"),
    }

    type Step = fn(&str, &World) -> Option<NodeId>;
    let lexical: [(u8, Step, &str); 5] = [
        (1, step_node_id, "no valid node reference"),
        (2, step_node_name, "no unique node name match"),
        (3, step_object_id, "no unique object id match"),
        (4, step_attribute_scoring, "no unique attribute score >= 1"),
        (5, step_single_class, "no single-instance class mentioned"),
    ];
    for (step, f, why) in lexical {
        if let Some(node) = f(&normalized, world) {
            trace.push(step, true, format!("node {node}"));
            return done(ResolutionMethod::L3aDeterministic, node, step, None, trace);
        }
        trace.push(step, false, why);
    }
    if let Some(node) = step_proximity(&normalized, world, pose) {
        trace.push(6, true, format!("node {node}"));
        return done(ResolutionMethod::L3aDeterministic, node, 6, None, trace);
    }
    trace.push(6, false, "no proximity keyword with a multi-instance class");

    let signal = EscalationSignal {
        reason: trace.summary(),
        resolve_time_us: started.elapsed().as_secs_f64() * 1e6,
    };
    (ResolveOutcome::Escalate(signal), trace)
}
