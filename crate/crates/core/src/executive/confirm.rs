use serde_json::{json, Value};

use super::audit::ConfirmationRecord;
use crate::vlm::{build_confirmation_prompt, parse_confirmation_response, ConfirmationReport, SharedBackend, VlmRequest};
use crate::world::{NodeId, Policy, Pose, SignatureType, StaticPoi, World};

pub const METHOD_POSE_BASED: &str = "pose_based";
/// Used when the action was blocked and nothing was dispatched.
pub const METHOD_SKIPPED: &str = "skipped";

#[derive(Debug, Clone, PartialEq)]
pub struct ConfirmationOutcome {
    pub record: ConfirmationRecord,
    pub report: Option<ConfirmationReport>,
    pub anomaly: Option<String>,
    pub inference_ms: f64,
}

impl ConfirmationOutcome {
    pub fn skipped() -> Self {
        Self {
            record: ConfirmationRecord {
                confirmation_method: METHOD_SKIPPED.into(),
                confirmed: false,
                payload: Value::Null,
            },
            report: None,
            anomaly: None,
            inference_ms: 0.0,
        }
    }
}

/// Strongest visual signature among the node's POIs, with the POIs that
/// carry a visual signature. `None` means pose-based confirmation.
pub fn confirmation_route(world: &World, node: NodeId) -> Option<(SignatureType, Vec<&StaticPoi>)> {
    let visual: Vec<&StaticPoi> = world
        .pois_at(node)
        .filter(|p| p.signature_type != SignatureType::None)
        .collect();
    let strongest = [SignatureType::Landmark, SignatureType::Contextual, SignatureType::Architectural]
        .into_iter()
        .find(|s| visual.iter().any(|p| p.signature_type == *s))?;
    Some((strongest, visual))
}

/// Post-arrival check. The result is informational only: it is written to
/// the audit entry and never feeds back into the navigation outcome.
pub fn confirm_arrival(
    world: &World,
    target: NodeId,
    end_pose: &Pose,
    policy: &Policy,
    backend: Option<&SharedBackend>,
    image: Option<Vec<u8>>,
) -> ConfirmationOutcome {
    let Some((signature, expected)) = confirmation_route(world, target) else {
        return pose_based(world, target, end_pose, policy);
    };
    let method = format!("vlm_{}", signature.as_str());
    let unconfirmed = |payload: Value, anomaly: &str| ConfirmationOutcome {
        record: ConfirmationRecord {
            confirmation_method: method.clone(),
            confirmed: false,
            payload,
        },
        report: None,
        anomaly: Some(anomaly.to_owned()),
        inference_ms: 0.0,
    };
    let Some(backend) = backend else {
        return unconfirmed(json!({"error": "no backend configured"}), "confirmation_no_backend");
    };
    let prompt = build_confirmation_prompt(target, &expected, image);
    let reply = match backend.query(&VlmRequest::confirmation(&prompt, world.nearest_node(end_pose.position()))) {
        Ok(r) => r,
        Err(e) => return unconfirmed(json!({"error": e.to_string()}), "confirmation_backend_error"),
    };
    match parse_confirmation_response(&reply.text) {
        Ok(report) => {
            let mut payload = serde_json::to_value(&report).unwrap_or(Value::Null);
            payload["inference_ms"] = json!(reply.inference_ms);
            payload["expected"] = json!(prompt.expected);
            ConfirmationOutcome {
                record: ConfirmationRecord {
                    confirmation_method: method.clone(),
                    confirmed: report.at_target,
                    payload,
                },
                report: Some(report),
                anomaly: None,
                inference_ms: reply.inference_ms,
            }
        }
        Err(e) => {
            let mut out = unconfirmed(
                json!({"error": e.0, "raw": reply.text, "inference_ms": reply.inference_ms}),
                "confirmation_parse_error",
            );
            out.inference_ms = reply.inference_ms;
            out
        }
    }
}

fn pose_based(world: &World, target: NodeId, end_pose: &Pose, policy: &Policy) -> ConfirmationOutcome {
    let distance = world
        .node(target)
        .map(|n| n.position().distance(&end_pose.position()))
        .unwrap_or(f64::INFINITY);
    let confirmed = distance <= policy.confirmation_radius;
    ConfirmationOutcome {
        record: ConfirmationRecord {
            confirmation_method: METHOD_POSE_BASED.into(),
            confirmed,
            payload: json!({
                "distance_m": if distance.is_finite() { json!(distance) } else { Value::Null },
                "radius_m": policy.confirmation_radius,
            }),
        },
        report: None,
        anomaly: None,
        inference_ms: 0.0,
    }
}
