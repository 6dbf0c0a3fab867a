use std::sync::Arc;

use super::bridge::ContextSource;
use crate::error::SimError;
use crate::executive::{normalize_observation, Observation};
use crate::memory::LoadedDigest;
use crate::resolver::{resolve, PreferenceIndex, Resolution, ResolutionMethod, ResolveOutcome};
use crate::vlm::{build_decision_prompt, parse_decision_response, query_backend, SharedBackend, VlmDecision};
use crate::world::{merge_semantic_objects, MergedObject, NodeId, Policy, World};

/// Everything decided for one instruction, before validation.
#[derive(Debug, Clone)]
pub struct Decision {
    pub method: ResolutionMethod,
    pub node_id: Option<NodeId>,
    pub resolution: Option<Resolution>,
    pub escalation_reason: Option<String>,
    pub vlm: Option<VlmDecision>,
    pub resolve_ms: f64,
    pub vlm_ms: f64,
    pub observation: Observation,
    pub objects: Vec<MergedObject>,
    pub anomalies: Vec<String>,
}

/// The reasoning side of one platform: world, policy, digest and backend.
pub struct Navigator {
    world: Arc<World>,
    policy: Arc<Policy>,
    backend: Option<Arc<SharedBackend>>,
    digest: LoadedDigest,
    index: Option<PreferenceIndex>,
}

impl Navigator {
    pub fn new(world: Arc<World>, policy: Arc<Policy>, backend: Option<Arc<SharedBackend>>, digest: LoadedDigest) -> Self {
        crate::resolver::warm_up();
        let index = digest.digest.as_ref().map(PreferenceIndex::from_digest);
        Self {
            world,
            policy,
            backend,
            digest,
            index,
        }
    }

    pub fn world(&self) -> &Arc<World> {
        &self.world
    }

    pub fn policy(&self) -> &Arc<Policy> {
        &self.policy
    }

    pub fn backend(&self) -> Option<&Arc<SharedBackend>> {
        self.backend.as_ref()
    }

    pub fn digest(&self) -> &LoadedDigest {
        &self.digest
    }

    pub fn preferences(&self) -> Option<&PreferenceIndex> {
        self.index.as_ref()
    }

    /// L3a first; on escalation, fetch a frame and ask the model.
    pub fn decide(&self, instruction: &str, ctx: &dyn ContextSource) -> Result<Decision, SimError> {
        let pose = ctx.pose()?;
        let detections = ctx.detections()?;
        let objects = merge_semantic_objects(self.world.pois(), &detections);

        match resolve(instruction, &self.world, &pose, self.index.as_ref(), &self.policy) {
            ResolveOutcome::Resolved(r) => Ok(Decision {
                method: r.method,
                node_id: Some(r.node_id),
                resolve_ms: r.resolve_ms(),
                resolution: Some(r),
                escalation_reason: None,
                vlm: None,
                vlm_ms: 0.0,
                observation: normalize_observation(pose, &objects, None),
                objects,
                anomalies: Vec::new(),
            }),
            ResolveOutcome::Escalate(signal) => {
                let image = ctx.camera()?;
                let observation = normalize_observation(pose, &objects, Some(image));
                let mut anomalies = Vec::new();
                let mut vlm = None;
                if let Some(backend) = &self.backend {
                    let prompt = build_decision_prompt(
                        instruction,
                        &observation,
                        &self.world,
                        &objects,
                        self.digest.digest.as_ref(),
                        self.policy.digest_char_limit,
                    );
                    match query_backend(backend, &prompt) {
                        Ok((raw, ms)) => {
                            let mut d = parse_decision_response(&raw);
                            d.inference_ms = ms;
                            if d.parse_anomaly {
                                anomalies.push("vlm_parse_error".to_owned());
                            }
                            vlm = Some(d);
                        }
                        Err(e) => {
                            tracing::warn!(error = %e, "backend failure on escalation");
                            anomalies.push("vlm_backend_error".to_owned());
                        }
                    }
                } else {
                    anomalies.push("vlm_backend_missing".to_owned());
                }
                Ok(Decision {
                    method: ResolutionMethod::L3bVlm,
                    node_id: vlm.as_ref().and_then(|d| d.node_id),
                    resolution: None,
                    escalation_reason: Some(signal.reason),
                    resolve_ms: signal.resolve_time_us / 1000.0,
                    vlm_ms: vlm.as_ref().map_or(0.0, |d| d.inference_ms),
                    vlm,
                    observation,
                    objects,
                    anomalies,
                })
            }
        }
    }
}
