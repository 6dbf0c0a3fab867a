//! Decision and confirmation prompt rendering.
//!
//! Section headers are fixed strings so prompts are byte-stable; tests
//! depend on them.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::executive::Observation;
use crate::memory::Digest;
use crate::world::{normalize_text, MergedObject, NodeId, ObjectSource, StaticPoi, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PromptSection {
    MemoryPrefix,
    CurrentState,
    NavigationGraph,
    ObjectsByZone,
    SeatingBlock,
    TaskAndRules,
}

impl PromptSection {
    pub const ORDER: [PromptSection; 6] = [
        Self::MemoryPrefix,
        Self::CurrentState,
        Self::NavigationGraph,
        Self::ObjectsByZone,
        Self::SeatingBlock,
        Self::TaskAndRules,
    ];

    pub fn header(&self) -> &'static str {
        match self {
            Self::MemoryPrefix => "=== MEMORY CONTEXT ===",
            Self::CurrentState => "=== CURRENT STATE ===",
            Self::NavigationGraph => "=== NAVIGATION GRAPH ===",
            Self::ObjectsByZone => "=== SEMANTIC OBJECTS BY ZONE ===",
            Self::SeatingBlock => "=== DESIGNATED SEATING / RESTING LOCATIONS ===",
            Self::TaskAndRules => "=== TASK AND RULES ===",
        }
    }
}

pub const DECISION_RULES: [&str; 4] = [
    "Choose node_id only from the node IDs listed under NAVIGATION GRAPH.",
    "Prefer static (reliable) objects over YOLO detections of the same kind.",
    "For sitting or resting requests, prefer the designated seating/resting locations over YOLO-detected chairs.",
    "Respond with only a JSON object: {\"node_id\": <integer>, \"reason\": \"<short explanation>\"}.",
];

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionPrompt {
    /// Section bodies in render order. The memory prefix may be empty, in
    /// which case it is omitted from `text`.
    pub sections: Vec<(PromptSection, String)>,
    pub text: String,
    pub image: Option<Vec<u8>>,
    pub instruction: String,
}

impl DecisionPrompt {
    pub fn section(&self, which: PromptSection) -> Option<&str> {
        self.sections
            .iter()
            .find(|(s, _)| *s == which)
            .map(|(_, body)| body.as_str())
    }
}

/// Entities and patterns rendered for the VLM. Promotions are deliberately
/// left out: they feed the deterministic resolver.
pub fn build_memory_prefix(digest: Option<&Digest>, char_limit: usize) -> String {
    let Some(digest) = digest else {
        return String::new();
    };
    if digest.top_entities.is_empty() && digest.top_patterns.is_empty() {
        return String::new();
    }
    let mut lines = Vec::new();
    if !digest.top_entities.is_empty() {
        lines.push("OBSERVED ENVIRONMENT:".to_owned());
        for e in &digest.top_entities {
            lines.push(format!(
                "- {} (node {}): {} visits, success rate {:.2}, signature {}",
                e.id, e.node_id, e.visits, e.success_rate, e.signature
            ));
        }
    }
    if !digest.top_patterns.is_empty() {
        lines.push("TYPICAL SCENES:".to_owned());
        for p in &digest.top_patterns {
            lines.push(format!(
                "- near node {}, the camera typically sees: {} ({} observations, confidence {:.2})",
                p.node_id, p.description, p.count, p.confidence
            ));
        }
    }
    let mut out = String::new();
    for line in lines {
        if out.chars().count() + line.chars().count() + 1 > char_limit {
            break;
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn is_seating(obj: &MergedObject) -> bool {
    let seating = obj.attributes.get("seating").map(|v| normalize_text(v));
    let usage = obj.attributes.get("use").map(|v| normalize_text(v));
    seating.as_deref() == Some("true") || usage.as_deref() == Some("resting spot")
}

fn attribute_list(obj: &MergedObject) -> String {
    obj.attributes
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Assembles the six-section decision prompt.
pub fn build_decision_prompt(
    instruction: &str,
    observation: &Observation,
    world: &World,
    objects: &[MergedObject],
    digest: Option<&Digest>,
    char_limit: usize,
) -> DecisionPrompt {
    let pose = observation.pose;
    let here = pose.position();

    let memory = build_memory_prefix(digest, char_limit);

    let state = format!(
        "Robot pose: x={:.2} m, y={:.2} m, yaw={:.2} rad\nObjects in view inventory: {} static, {} dynamic\n",
        pose.x, pose.y, pose.yaw, observation.static_count, observation.dynamic_count
    );

    let mut graph = String::new();
    for n in &world.graph().nodes {
        let _ = writeln!(graph, "- node {}: {} at ({:.2}, {:.2})", n.id, n.name, n.x, n.y);
    }

    let mut zones: BTreeMap<NodeId, Vec<&MergedObject>> = BTreeMap::new();
    for obj in objects {
        zones.entry(obj.nearest_node).or_default().push(obj);
    }
    let mut by_zone = String::new();
    for (node, objs) in &zones {
        let name = world.node(*node).map(|n| n.name.as_str()).unwrap_or("?");
        let _ = writeln!(by_zone, "Node {node} ({name}):");
        for obj in objs {
            let dist = obj.position.distance(&here);
            let provenance = match (obj.source, obj.confidence) {
                (ObjectSource::Static, _) => "static (reliable)".to_owned(),
                (ObjectSource::Yolo, Some(c)) => format!("yolo (confidence {c:.2})"),
                (ObjectSource::Yolo, None) => "yolo".to_owned(),
            };
            let attrs = attribute_list(obj);
            let _ = write!(by_zone, "  - {} [{}] {}, {:.1} m from robot", obj.id, obj.class, provenance, dist);
            if !attrs.is_empty() {
                let _ = write!(by_zone, ", {attrs}");
            }
            by_zone.push('\n');
        }
    }

    let mut seating = String::new();
    for obj in objects.iter().filter(|o| is_seating(o)) {
        let _ = writeln!(
            seating,
            "- {} [{}] at node {}, {}",
            obj.id,
            obj.class,
            obj.nearest_node,
            attribute_list(obj)
        );
    }
    if seating.is_empty() {
        seating.push_str("(none)\n");
    }

    let mut task = format!("Instruction: \"{instruction}\"\nRules:\n");
    for (i, rule) in DECISION_RULES.iter().enumerate() {
        let _ = writeln!(task, "{}. {}", i + 1, rule);
    }

    let sections = vec![
        (PromptSection::MemoryPrefix, memory),
        (PromptSection::CurrentState, state),
        (PromptSection::NavigationGraph, graph),
        (PromptSection::ObjectsByZone, by_zone),
        (PromptSection::SeatingBlock, seating),
        (PromptSection::TaskAndRules, task),
    ];
    let mut text = String::new();
    for (section, body) in &sections {
        if body.is_empty() {
            continue;
        }
        if !text.is_empty() {
            text.push('\n');
        }
        text.push_str(section.header());
        text.push('\n');
        text.push_str(body);
    }

    DecisionPrompt {
        sections,
        text,
        image: observation.image.clone(),
        instruction: instruction.to_owned(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfirmationPrompt {
    pub node_id: NodeId,
    pub expected: Vec<String>,
    pub text: String,
    pub image: Option<Vec<u8>>,
}

/// Lists what should be visible on arrival and asks for a structured
/// verdict.
pub fn build_confirmation_prompt(
    node_id: NodeId,
    expected: &[&StaticPoi],
    image: Option<Vec<u8>>,
) -> ConfirmationPrompt {
    let labels: Vec<String> = expected.iter().map(|p| p.class.clone()).collect();
    let mut text = format!("The robot reports arrival at node {node_id}.\nExpected objects:\n");
    for poi in expected {
        let _ = writeln!(
            text,
            "- {} [{}] (signature: {})",
            poi.obj_id, poi.class, poi.signature_type
        );
    }
    text.push_str(
        "Look at the attached camera frame and decide whether the robot is at the target.\n\
         Respond with only a JSON object with fields: at_target (boolean), confidence (HIGH|MEDIUM|LOW), \
         scene_description (string), reasoning (string), identified_objects (array of {label, position, salience}).\n",
    );
    ConfirmationPrompt {
        node_id,
        expected: labels,
        text,
        image,
    }
}
