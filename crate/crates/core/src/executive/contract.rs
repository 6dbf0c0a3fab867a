use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::world::{MergedObject, NavNode, NodeId, Policy, Pose, World};

/// Admissible targets and actions for one decision cycle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffordanceManifest {
    pub nodes: Vec<NavNode>,
    pub objects: Vec<MergedObject>,
    pub allowed_actions: BTreeSet<String>,
}

impl AffordanceManifest {
    pub fn node(&self, id: NodeId) -> Option<&NavNode> {
        self.nodes.iter().find(|n| n.id == id)
    }
}

pub fn build_affordance_manifest(world: &World, objects: &[MergedObject], policy: &Policy) -> AffordanceManifest {
    AffordanceManifest {
        nodes: world.graph().nodes.clone(),
        objects: objects.to_vec(),
        allowed_actions: policy.allowed_actions.clone(),
    }
}

/// Snapshot of what the robot currently perceives.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub pose: Pose,
    pub static_count: usize,
    pub dynamic_count: usize,
    /// `(object id, nearest node)` for every merged object.
    pub object_nodes: Vec<(String, NodeId)>,
    /// Camera frame; only fetched on the escalation path.
    pub image: Option<Vec<u8>>,
}

pub fn normalize_observation(pose: Pose, objects: &[MergedObject], image: Option<Vec<u8>>) -> Observation {
    let static_count = objects.iter().filter(|o| o.is_static()).count();
    Observation {
        pose,
        static_count,
        dynamic_count: objects.len() - static_count,
        object_nodes: objects.iter().map(|o| (o.id.clone(), o.nearest_node)).collect(),
        image,
    }
}

pub const ACTION_COMPUTE_ROUTE: &str = "ComputeRoute";
pub const ACTION_FOLLOW_PATH: &str = "FollowPath";
pub const ACTION_NAVIGATE_TO_POSE: &str = "NavigateToPose";
pub const ACTION_SPIN: &str = "Spin";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposedAction {
    pub action: String,
    pub target_node: NodeId,
    /// Straight-line distance from the current pose to the target node.
    pub goal_distance: f64,
}

impl ProposedAction {
    pub fn toward(action: &str, target_node: NodeId, pose: &Pose, manifest: &AffordanceManifest) -> Self {
        let goal_distance = manifest
            .node(target_node)
            .map(|n| n.position().distance(&pose.position()))
            .unwrap_or(f64::INFINITY);
        Self {
            action: action.to_owned(),
            target_node,
            goal_distance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validation {
    Allowed,
    /// 1 = action not allowlisted, 2 = unknown target node, 3 = too far.
    Blocked(u8),
}

impl Validation {
    pub fn is_allowed(&self) -> bool {
        matches!(self, Self::Allowed)
    }

    pub fn failed_check(&self) -> Option<u8> {
        match self {
            Self::Allowed => None,
            Self::Blocked(c) => Some(*c),
        }
    }
}

/// Checks run in order; the first failure is reported.
pub fn validate_action(action: &ProposedAction, manifest: &AffordanceManifest, policy: &Policy) -> Validation {
    if !manifest.allowed_actions.contains(&action.action) {
        return Validation::Blocked(1);
    }
    if manifest.node(action.target_node).is_none() {
        return Validation::Blocked(2);
    }
    if !(action.goal_distance <= policy.max_goal_distance) {
        return Validation::Blocked(3);
    }
    Validation::Allowed
}
