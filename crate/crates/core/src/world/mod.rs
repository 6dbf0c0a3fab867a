//! Navigation graph, static points of interest, policy and the text helpers
//! shared by every other module.

mod geojson;
mod merge;
mod policy;
pub mod text;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use self::geojson::{parse_graph, parse_pois};
pub use self::merge::{merge_semantic_objects, MergedObject, ObjectSource, DEDUP_RADIUS_M};
pub use self::policy::{M2Policy, Policy, PromotionPolicy};
pub use self::text::{jaccard_similarity, normalize_text, tokenize, TokenSet};

use crate::error::WorldError;

pub type NodeId = i64;

/// Planar position in the map frame, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self { x, y, yaw }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

impl From<[f64; 3]> for Pose {
    fn from(v: [f64; 3]) -> Self {
        Pose::new(v[0], v[1], v[2])
    }
}

impl From<Pose> for [f64; 3] {
    fn from(p: Pose) -> Self {
        [p.x, p.y, p.yaw]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavNode {
    pub id: NodeId,
    pub name: String,
    pub x: f64,
    pub y: f64,
}

impl NavNode {
    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NavGraph {
    pub nodes: Vec<NavNode>,
    pub edges: Vec<NavEdge>,
}

impl NavGraph {
    pub fn node(&self, id: NodeId) -> Option<&NavNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.node(id).is_some()
    }
}

/// What a forward-facing camera is expected to see on arrival.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignatureType {
    Landmark,
    Contextual,
    Architectural,
    None,
}

impl SignatureType {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "landmark" => Some(Self::Landmark),
            "contextual" => Some(Self::Contextual),
            "architectural" => Some(Self::Architectural),
            "none" => Some(Self::None),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Landmark => "landmark",
            Self::Contextual => "contextual",
            Self::Architectural => "architectural",
            Self::None => "none",
        }
    }
}

impl fmt::Display for SignatureType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticPoi {
    pub obj_id: String,
    pub class: String,
    pub position: Point,
    pub nearest_node: NodeId,
    pub signature_type: SignatureType,
    pub attributes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedObject {
    pub class: String,
    pub confidence: f64,
    pub position: Point,
    pub nearest_node: NodeId,
    #[serde(default = "yolo_source")]
    pub source: String,
}

fn yolo_source() -> String {
    "yolo".to_owned()
}

impl DetectedObject {
    pub fn new(class: &str, confidence: f64, position: Point, nearest_node: NodeId) -> Self {
        Self {
            class: class.to_owned(),
            confidence,
            position,
            nearest_node,
            source: yolo_source(),
        }
    }
}

/// Normalized labels precomputed once so the resolver never re-normalizes
/// world data on the hot path.
#[derive(Debug, Clone, Default)]
pub(crate) struct WorldIndex {
    pub node_names: Vec<(NodeId, String)>,
    pub obj_ids: Vec<String>,
    /// Per POI, the normalized non-empty attribute values.
    pub attribute_values: Vec<Vec<String>>,
    /// class -> (aliases, indices of static instances)
    pub classes: Vec<ClassEntry>,
}

#[derive(Debug, Clone)]
pub(crate) struct ClassEntry {
    pub aliases: Vec<String>,
    pub members: Vec<usize>,
}

/// A validated graph plus its static POIs.
#[derive(Debug, Clone)]
pub struct World {
    graph: NavGraph,
    pois: Vec<StaticPoi>,
    index: WorldIndex,
}

impl World {
    /// Validates the invariants linking graph and POIs.
    pub fn new(graph: NavGraph, pois: Vec<StaticPoi>) -> Result<Self, WorldError> {
        validate_graph(&graph, "<graph>")?;
        let mut seen = BTreeSet::new();
        for (i, poi) in pois.iter().enumerate() {
            if !seen.insert(poi.obj_id.as_str()) {
                return Err(WorldError::Invalid {
                    path: "<pois>".into(),
                    index: i,
                    message: format!("duplicate obj_id {}", poi.obj_id),
                });
            }
            if !graph.contains(poi.nearest_node) {
                return Err(WorldError::Invalid {
                    path: "<pois>".into(),
                    index: i,
                    message: format!(
                        "{} references missing nearest_node {}",
                        poi.obj_id, poi.nearest_node
                    ),
                });
            }
        }
        let index = build_index(&graph, &pois);
        Ok(Self { graph, pois, index })
    }

    pub fn graph(&self) -> &NavGraph {
        &self.graph
    }

    pub fn pois(&self) -> &[StaticPoi] {
        &self.pois
    }

    pub(crate) fn index(&self) -> &WorldIndex {
        &self.index
    }

    pub fn node(&self, id: NodeId) -> Option<&NavNode> {
        self.graph.node(id)
    }

    pub fn pois_at(&self, node: NodeId) -> impl Iterator<Item = &StaticPoi> {
        self.pois.iter().filter(move |p| p.nearest_node == node)
    }

    /// Distinct static classes, sorted.
    pub fn classes(&self) -> BTreeSet<&str> {
        self.pois.iter().map(|p| p.class.as_str()).collect()
    }

    /// Nodes that host at least one POI.
    pub fn poi_nodes(&self) -> BTreeSet<NodeId> {
        self.pois.iter().map(|p| p.nearest_node).collect()
    }

    pub fn signature_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for poi in &self.pois {
            *counts.entry(poi.signature_type.to_string()).or_default() += 1;
        }
        counts
    }

    /// Graph node closest to a point; ties go to the lower id.
    pub fn nearest_node(&self, p: Point) -> Option<NodeId> {
        self.graph
            .nodes
            .iter()
            .map(|n| (n.position().distance(&p), n.id))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, id)| id)
    }
}

/// Loads and validates the graph and POI GeoJSON files.
pub fn load_world(graph_file: &Path, poi_file: &Path) -> Result<World, WorldError> {
    let graph = parse_graph(&read(graph_file)?, &graph_file.display().to_string())?;
    let pois = parse_pois(&read(poi_file)?, &poi_file.display().to_string())?;
    World::new(graph, pois)
}

fn read(path: &Path) -> Result<String, WorldError> {
    std::fs::read_to_string(path).map_err(|source| WorldError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub(crate) fn validate_graph(graph: &NavGraph, path: &str) -> Result<(), WorldError> {
    if graph.nodes.is_empty() {
        return Err(WorldError::EmptyGraph { path: path.into() });
    }
    let mut ids = HashMap::new();
    for (i, node) in graph.nodes.iter().enumerate() {
        if node.name.trim().is_empty() {
            return Err(WorldError::Invalid {
                path: path.into(),
                index: i,
                message: format!("node {} has an empty name", node.id),
            });
        }
        if ids.insert(node.id, i).is_some() {
            return Err(WorldError::Invalid {
                path: path.into(),
                index: i,
                message: format!("duplicate node id {}", node.id),
            });
        }
    }
    for (i, edge) in graph.edges.iter().enumerate() {
        for end in [edge.from, edge.to] {
            if !ids.contains_key(&end) {
                return Err(WorldError::DanglingEdge {
                    path: path.into(),
                    index: i,
                    node: end,
                });
            }
        }
        if !(edge.cost >= 0.0) {
            return Err(WorldError::Invalid {
                path: path.into(),
                index: i,
                message: format!("edge {}->{} has negative cost", edge.from, edge.to),
            });
        }
    }
    Ok(())
}

/// Class aliases: the full normalized class name and, for multi-word
/// classes, its head noun ("potted plant" is also mentioned by "plant").
fn class_aliases(class: &str) -> Vec<String> {
    let full = normalize_text(class);
    let mut aliases = vec![full.clone()];
    if let Some(head) = full.rsplit(' ').next() {
        if head != full {
            aliases.push(head.to_owned());
        }
    }
    aliases
}

fn build_index(graph: &NavGraph, pois: &[StaticPoi]) -> WorldIndex {
    let node_names = graph
        .nodes
        .iter()
        .map(|n| (n.id, normalize_text(&n.name)))
        .collect();
    let obj_ids = pois.iter().map(|p| normalize_text(&p.obj_id)).collect();
    let attribute_values = pois
        .iter()
        .map(|p| {
            let mut vals: Vec<String> = p
                .attributes
                .values()
                .map(|v| normalize_text(v))
                .filter(|v| !v.is_empty())
                .collect();
            vals.sort();
            vals.dedup();
            vals
        })
        .collect();
    let mut by_class: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, p) in pois.iter().enumerate() {
        by_class.entry(p.class.clone()).or_default().push(i);
    }
    let classes = by_class
        .into_iter()
        .map(|(class, members)| ClassEntry {
            aliases: class_aliases(&class),
            members,
        })
        .collect();
    WorldIndex {
        node_names,
        obj_ids,
        attribute_values,
        classes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_aliases_include_head_noun() {
        assert_eq!(class_aliases("potted plant"), vec!["potted plant", "plant"]);
        assert_eq!(class_aliases("emergency_exit"), vec!["emergency exit", "exit"]);
        assert_eq!(class_aliases("radiator"), vec!["radiator"]);
    }

    #[test]
    fn pose_serializes_as_triple() {
        let p = Pose::new(1.0, 2.5, -0.5);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "[1.0,2.5,-0.5]");
        assert_eq!(serde_json::from_str::<Pose>(&s).unwrap(), p);
    }

    #[test]
    fn world_rejects_poi_on_missing_node() {
        let graph = NavGraph {
            nodes: vec![NavNode { id: 0, name: "a".into(), x: 0.0, y: 0.0 }],
            edges: vec![],
        };
        let poi = StaticPoi {
            obj_id: "x".into(),
            class: "chair".into(),
            position: Point::new(0.0, 0.0),
            nearest_node: 3,
            signature_type: SignatureType::None,
            attributes: BTreeMap::new(),
        };
        assert!(World::new(graph, vec![poi]).is_err());
    }
}
