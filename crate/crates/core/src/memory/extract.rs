use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::{M1EntityRecord, M2Pattern, M3Preference, M4Platform, M5TaskSummary, MemoryStore};
use crate::error::MemoryError;
use crate::executive::{confirmation_route, read_audit_file, AuditEntry, AuditRecord, SessionEvent};
use crate::resolver::ResolutionMethod;
use crate::vlm::Confidence;
use crate::world::text::{instruction_signature, tokens_of};
use crate::world::{jaccard_similarity, NodeId, Policy, TokenSet, World};

/// One VLM confirmation scene, the raw material of M2.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneObservation {
    pub node_id: NodeId,
    pub text: String,
    pub confidence: Confidence,
}

/// Reads and validates every file, then rebuilds all five categories.
pub fn extract_memory(
    audit_files: &[&Path],
    platforms: &[String],
    world: Option<&World>,
    policy: &Policy,
) -> Result<MemoryStore, MemoryError> {
    let mut records = Vec::new();
    for path in audit_files {
        records.extend(read_audit_file(path)?);
    }
    Ok(extract_from_records(&records, platforms, world, policy))
}

pub fn extract_from_records(
    records: &[AuditRecord],
    platforms: &[String],
    world: Option<&World>,
    policy: &Policy,
) -> MemoryStore {
    // Canonical order makes the output independent of how the logs were
    // split across files; within a session the file order is kept.
    let mut decisions: Vec<&AuditEntry> = records.iter().filter_map(AuditRecord::as_decision).collect();
    decisions.sort_by(|a, b| {
        (&a.timestamp, &a.platform_id, &a.session_id).cmp(&(&b.timestamp, &b.platform_id, &b.session_id))
    });

    let requested: BTreeSet<&str> = platforms.iter().map(String::as_str).collect();
    let mut unknown = BTreeSet::new();
    for r in records {
        if !requested.is_empty() && !requested.contains(r.platform_id()) && unknown.insert(r.platform_id().to_owned()) {
            tracing::warn!(platform = r.platform_id(), "platform not requested; aggregated globally only");
        }
    }

    let m5: Vec<M5TaskSummary> = decisions.iter().map(|d| summarize(d)).collect();
    let analysable: Vec<&AuditEntry> = decisions.iter().copied().filter(|d| !d.return_command).collect();

    let observations: Vec<SceneObservation> = analysable.iter().filter_map(|d| scene_of(d)).collect();

    MemoryStore {
        m1: build_entities(&analysable, world),
        m2: cluster_observations(&observations, policy),
        m3: group_preferences(&m5, policy),
        m4: build_platforms(records),
        m5,
        platforms: platforms.to_vec(),
        unknown_platforms: unknown.into_iter().collect(),
    }
}

fn summarize(d: &AuditEntry) -> M5TaskSummary {
    M5TaskSummary {
        timestamp: d.timestamp.clone(),
        platform_id: d.platform_id.clone(),
        session_id: d.session_id.clone(),
        instruction: d.instruction.clone(),
        return_command: d.return_command,
        method: d.resolution_method,
        node_id: d.node_id,
        allowed: d.validation.allowed,
        nav_outcome: d.nav_outcome,
        confirmed: d.confirmation.confirmed,
        resolve_ms: d.timing.resolve_ms,
        vlm_ms: d.timing.vlm_ms,
        nav_total_s: d.timing.nav_total_s,
        scenario: d.extra.scenario.clone(),
        anomalies: d.extra.anomalies.clone(),
    }
}

fn confidence_of(d: &AuditEntry) -> Option<Confidence> {
    if !d.confirmation.confirmation_method.starts_with("vlm_") {
        return None;
    }
    serde_json::from_value(d.confirmation.payload.get("confidence")?.clone()).ok()
}

fn scene_of(d: &AuditEntry) -> Option<SceneObservation> {
    let node_id = d.node_id?;
    let confidence = confidence_of(d)?;
    let text = d.confirmation.payload.get("scene_description")?.as_str()?;
    Some(SceneObservation {
        node_id,
        text: text.to_owned(),
        confidence,
    })
}

#[derive(Default)]
struct EntityAcc {
    visits: u32,
    confirmed: u32,
    nav_time: f64,
    confidences: Vec<f64>,
    by_platform: BTreeMap<String, (u32, u32)>,
}

fn build_entities(decisions: &[&AuditEntry], world: Option<&World>) -> Vec<M1EntityRecord> {
    let mut acc: BTreeMap<NodeId, EntityAcc> = BTreeMap::new();
    for d in decisions {
        let Some(node) = d.node_id else { continue };
        if !d.validation.allowed {
            continue;
        }
        let e = acc.entry(node).or_default();
        e.visits += 1;
        e.nav_time += d.timing.nav_total_s;
        let ok = d.confirmation.confirmed;
        e.confirmed += ok as u32;
        if let Some(c) = confidence_of(d) {
            e.confidences.push(c.score());
        }
        let p = e.by_platform.entry(d.platform_id.clone()).or_default();
        p.0 += 1;
        p.1 += ok as u32;
    }
    let mut out: Vec<M1EntityRecord> = acc
        .into_iter()
        .map(|(node, e)| {
            let (poi_id, signature) = entity_identity(world, node);
            M1EntityRecord {
                poi_id,
                node_id: node,
                signature_type: signature,
                visit_count: e.visits,
                success_rate: e.confirmed as f64 / e.visits as f64,
                mean_nav_time_s: e.nav_time / e.visits as f64,
                mean_confidence: (!e.confidences.is_empty())
                    .then(|| e.confidences.iter().sum::<f64>() / e.confidences.len() as f64),
                visit_count_by_platform: e.by_platform.iter().map(|(k, v)| (k.clone(), v.0)).collect(),
                success_rate_by_platform: e
                    .by_platform
                    .iter()
                    .map(|(k, v)| (k.clone(), v.1 as f64 / v.0 as f64))
                    .collect(),
                unreliable: e.visits < 2,
            }
        })
        .collect();
    out.sort_by(|a, b| a.poi_id.cmp(&b.poi_id).then(a.node_id.cmp(&b.node_id)));
    out
}

/// Names an entity after the POI that drives its confirmation, falling
/// back to the first POI at the node, then to the node itself.
fn entity_identity(world: Option<&World>, node: NodeId) -> (String, String) {
    let fallback = (format!("node_{node}"), "none".to_owned());
    let Some(world) = world else { return fallback };
    if let Some((sig, pois)) = confirmation_route(world, node) {
        if let Some(p) = pois.iter().find(|p| p.signature_type == sig) {
            return (p.obj_id.clone(), sig.as_str().to_owned());
        }
    }
    world
        .pois_at(node)
        .next()
        .map(|p| (p.obj_id.clone(), p.signature_type.as_str().to_owned()))
        .unwrap_or(fallback)
}

/// Groups decisions by instruction signature. Return commands are not
/// operator preferences and are skipped.
pub fn group_preferences(decisions: &[M5TaskSummary], policy: &Policy) -> Vec<M3Preference> {
    struct Acc {
        examples: Vec<String>,
        frequency: u32,
        nodes: BTreeMap<NodeId, u32>,
        methods: BTreeMap<String, u32>,
    }
    let mut groups: BTreeMap<String, Acc> = BTreeMap::new();
    for d in decisions.iter().filter(|d| !d.return_command) {
        let key = instruction_signature(&d.instruction);
        if key.is_empty() {
            continue;
        }
        let g = groups.entry(key).or_insert_with(|| Acc {
            examples: Vec::new(),
            frequency: 0,
            nodes: BTreeMap::new(),
            methods: ResolutionMethod::ALL.iter().map(|m| (m.as_str().to_owned(), 0)).collect(),
        });
        if !g.examples.contains(&d.instruction) {
            g.examples.push(d.instruction.clone());
        }
        g.frequency += 1;
        if let Some(n) = d.node_id {
            *g.nodes.entry(n).or_default() += 1;
        }
        *g.methods.entry(d.method.as_str().to_owned()).or_default() += 1;
    }
    let p = &policy.promotion;
    groups
        .into_iter()
        .filter_map(|(key, g)| {
            // BTreeMap iteration is ascending, so a strict `>` keeps the
            // lowest node id on ties.
            let (dominant, votes) = g
                .nodes
                .iter()
                .fold(None, |best: Option<(NodeId, u32)>, (&n, &c)| match best {
                    Some((_, bc)) if bc >= c => best,
                    _ => Some((n, c)),
                })?;
            let consistency = votes as f64 / g.frequency as f64;
            let l3b = g.methods.get(ResolutionMethod::L3bVlm.as_str()).copied().unwrap_or(0);
            let ready = g.frequency >= p.min_frequency
                && consistency + 1e-12 >= p.min_consistency
                && l3b >= p.min_l3b_count;
            Some(M3Preference {
                key,
                examples: g.examples,
                frequency: g.frequency,
                dominant_node: dominant,
                consistency,
                node_counts: g.nodes,
                method_counts: g.methods,
                ready_for_l3a_promotion: ready,
            })
        })
        .collect()
}

/// Greedy seeded clustering per node: an observation joins the first
/// cluster whose seed keywords are similar enough, else seeds a new one.
pub fn cluster_observations(observations: &[SceneObservation], policy: &Policy) -> Vec<M2Pattern> {
    struct Cluster<'a> {
        seed: TokenSet,
        description: &'a str,
        scores: Vec<f64>,
    }
    let mut by_node: BTreeMap<NodeId, Vec<Cluster>> = BTreeMap::new();
    for obs in observations {
        let keywords = tokens_of(&obs.text);
        let clusters = by_node.entry(obs.node_id).or_default();
        let score = obs.confidence.score();
        match clusters
            .iter_mut()
            .find(|c| jaccard_similarity(&c.seed, &keywords) + 1e-12 >= policy.m2.cluster_jaccard)
        {
            Some(c) => c.scores.push(score),
            None => clusters.push(Cluster {
                seed: keywords,
                description: &obs.text,
                scores: vec![score],
            }),
        }
    }
    let mut out = Vec::new();
    for (node, clusters) in by_node {
        for c in clusters {
            let confidence = c.scores.iter().sum::<f64>() / c.scores.len() as f64;
            if c.scores.len() >= policy.m2.min_observations && confidence + 1e-12 >= policy.m2.min_confidence {
                out.push(M2Pattern {
                    node_id: node,
                    keywords: c.seed.into_iter().collect(),
                    observation_count: c.scores.len(),
                    confidence,
                    description: c.description.to_owned(),
                });
            }
        }
    }
    out
}

/// Latest startup event per platform; equal timestamps fall back to the
/// session id so the choice does not depend on file order.
fn build_platforms(records: &[AuditRecord]) -> Vec<M4Platform> {
    let mut latest: BTreeMap<&str, &SessionEvent> = BTreeMap::new();
    for r in records {
        if let AuditRecord::NavigatorStartup(e) = r {
            let slot = latest.entry(&e.platform_id).or_insert(e);
            if (&e.timestamp, &e.session_id) >= (&slot.timestamp, &slot.session_id) {
                *slot = e;
            }
        }
    }
    latest
        .into_values()
        .map(|e| M4Platform {
            platform_id: e.platform_id.clone(),
            version: e.version.clone(),
            model: e.model.clone(),
            policy_path: e.policy_path.clone(),
            signature_counts: e.signature_counts.clone(),
            architecture: e.architecture.clone(),
            memory_digest_hash: e.memory_digest_hash.clone(),
            timestamp: e.timestamp.clone(),
        })
        .collect()
}
