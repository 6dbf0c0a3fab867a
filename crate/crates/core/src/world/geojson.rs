//! GeoJSON readers for the navigation graph and the static POI layer.
//!
//! Graph file: a FeatureCollection of `Point` features with `id`/`name`
//! properties (nodes) and `LineString` features with `from`/`to`/`cost`
//! (edges). POI file: `Point` features with `obj_id`, `class`,
//! `nearest_node`, `visual_signature_type`; every other property is kept as
//! a string attribute.

use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::{Map, Value};

use super::{validate_graph, NavEdge, NavGraph, NavNode, NodeId, Point, SignatureType, StaticPoi};
use crate::error::WorldError;

#[derive(Deserialize)]
struct FeatureCollection {
    #[serde(rename = "type")]
    kind: String,
    features: Vec<Feature>,
}

#[derive(Deserialize)]
struct Feature {
    geometry: Option<Geometry>,
    #[serde(default)]
    properties: Map<String, Value>,
}

#[derive(Deserialize)]
struct Geometry {
    #[serde(rename = "type")]
    kind: String,
    coordinates: Value,
}

const POI_RESERVED: [&str; 5] = [
    "obj_id",
    "class",
    "nearest_node",
    "visual_signature_type",
    "feature_type",
];

fn collection(text: &str, path: &str) -> Result<FeatureCollection, WorldError> {
    let fc: FeatureCollection = serde_json::from_str(text).map_err(|e| WorldError::Parse {
        path: path.into(),
        message: e.to_string(),
    })?;
    if fc.kind != "FeatureCollection" {
        return Err(WorldError::Parse {
            path: path.into(),
            message: format!("expected a FeatureCollection, found {}", fc.kind),
        });
    }
    Ok(fc)
}

fn invalid(path: &str, index: usize, message: impl Into<String>) -> WorldError {
    WorldError::Invalid {
        path: path.into(),
        index,
        message: message.into(),
    }
}

fn point_coords(f: &Feature, path: &str, index: usize) -> Result<Point, WorldError> {
    let geom = f
        .geometry
        .as_ref()
        .ok_or_else(|| invalid(path, index, "missing geometry"))?;
    if geom.kind != "Point" {
        return Err(invalid(path, index, format!("expected Point geometry, found {}", geom.kind)));
    }
    match geom.coordinates.as_array().map(|a| a.as_slice()) {
        Some([x, y, ..]) => match (x.as_f64(), y.as_f64()) {
            (Some(x), Some(y)) => Ok(Point::new(x, y)),
            _ => Err(invalid(path, index, "non-numeric coordinates")),
        },
        _ => Err(invalid(path, index, "malformed Point coordinates")),
    }
}

fn int_prop(f: &Feature, key: &str, path: &str, index: usize) -> Result<NodeId, WorldError> {
    f.properties
        .get(key)
        .and_then(Value::as_i64)
        .ok_or_else(|| invalid(path, index, format!("missing integer property `{key}`")))
}

fn str_prop<'a>(f: &'a Feature, key: &str, path: &str, index: usize) -> Result<&'a str, WorldError> {
    f.properties
        .get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| invalid(path, index, format!("missing string property `{key}`")))
}

fn feature_kind(f: &Feature) -> &str {
    if let Some(kind) = f.properties.get("feature_type").and_then(Value::as_str) {
        return kind;
    }
    match f.geometry.as_ref().map(|g| g.kind.as_str()) {
        Some("Point") => "node",
        Some("LineString") => "edge",
        _ => "unknown",
    }
}

/// Parses and validates a navigation graph.
pub fn parse_graph(text: &str, path: &str) -> Result<NavGraph, WorldError> {
    let fc = collection(text, path)?;
    let mut graph = NavGraph::default();
    let mut edge_rows = Vec::new();
    for (i, f) in fc.features.iter().enumerate() {
        match feature_kind(f) {
            "node" => {
                let p = point_coords(f, path, i)?;
                graph.nodes.push(NavNode {
                    id: int_prop(f, "id", path, i)?,
                    name: str_prop(f, "name", path, i)?.to_owned(),
                    x: p.x,
                    y: p.y,
                });
            }
            "edge" => {
                let cost = match f.properties.get("cost") {
                    Some(v) => v
                        .as_f64()
                        .ok_or_else(|| invalid(path, i, "non-numeric edge cost"))?,
                    None => 0.0,
                };
                edge_rows.push(i);
                graph.edges.push(NavEdge {
                    from: int_prop(f, "from", path, i)?,
                    to: int_prop(f, "to", path, i)?,
                    cost,
                });
            }
            other => return Err(invalid(path, i, format!("unknown feature kind `{other}`"))),
        }
    }
    // Report validation failures against the original feature index.
    validate_graph(&graph, path).map_err(|e| match e {
        WorldError::DanglingEdge { path, index, node } => WorldError::DanglingEdge {
            path,
            index: edge_rows.get(index).copied().unwrap_or(index),
            node,
        },
        other => other,
    })?;
    Ok(graph)
}

fn attribute_string(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Parses the static POI layer. Cross-checks against the graph happen in
/// [`super::World::new`].
pub fn parse_pois(text: &str, path: &str) -> Result<Vec<StaticPoi>, WorldError> {
    let fc = collection(text, path)?;
    let mut pois: Vec<StaticPoi> = Vec::with_capacity(fc.features.len());
    for (i, f) in fc.features.iter().enumerate() {
        let obj_id = str_prop(f, "obj_id", path, i)?.to_owned();
        if pois.iter().any(|p| p.obj_id == obj_id) {
            return Err(invalid(path, i, format!("duplicate obj_id {obj_id}")));
        }
        let sig_raw = str_prop(f, "visual_signature_type", path, i)?;
        let signature_type = SignatureType::parse(sig_raw).ok_or_else(|| WorldError::UnknownSignature {
            path: path.into(),
            index: i,
            value: sig_raw.to_owned(),
        })?;
        let attributes: BTreeMap<String, String> = f
            .properties
            .iter()
            .filter(|(k, _)| !POI_RESERVED.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), attribute_string(v)))
            .collect();
        pois.push(StaticPoi {
            obj_id,
            class: str_prop(f, "class", path, i)?.to_owned(),
            position: point_coords(f, path, i)?,
            nearest_node: int_prop(f, "nearest_node", path, i)?,
            signature_type,
            attributes,
        });
    }
    Ok(pois)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: i64, name: &str) -> String {
        format!(
            r#"{{"type":"Feature","geometry":{{"type":"Point","coordinates":[{id}.0,0.0]}},"properties":{{"id":{id},"name":"{name}"}}}}"#
        )
    }

    fn edge(from: i64, to: i64) -> String {
        format!(
            r#"{{"type":"Feature","geometry":{{"type":"LineString","coordinates":[[0,0],[1,0]]}},"properties":{{"from":{from},"to":{to},"cost":1.0}}}}"#
        )
    }

    fn fc(features: &[String]) -> String {
        format!(r#"{{"type":"FeatureCollection","features":[{}]}}"#, features.join(","))
    }

    #[test]
    fn parses_small_graph() {
        let g = parse_graph(&fc(&[node(0, "a"), node(1, "b"), edge(0, 1), edge(1, 0)]), "g").unwrap();
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.edges.len(), 2);
    }

    #[test]
    fn dangling_edge_reports_feature_index() {
        let err = parse_graph(&fc(&[node(0, "a"), edge(0, 7)]), "g.geojson").unwrap_err();
        match err {
            WorldError::DanglingEdge { path, index, node } => {
                assert_eq!(path, "g.geojson");
                assert_eq!(index, 1);
                assert_eq!(node, 7);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_collection_is_an_error() {
        assert!(matches!(
            parse_graph(&fc(&[]), "g"),
            Err(WorldError::EmptyGraph { .. })
        ));
    }

    #[test]
    fn duplicate_node_id_rejected() {
        let err = parse_graph(&fc(&[node(0, "a"), node(0, "b")]), "g").unwrap_err();
        assert!(err.to_string().contains("duplicate node id 0"), "{err}");
    }

    #[test]
    fn unknown_signature_type_rejected() {
        let poi = r#"{"type":"Feature","geometry":{"type":"Point","coordinates":[0,0]},
            "properties":{"obj_id":"p","class":"chair","nearest_node":0,"visual_signature_type":"shiny"}}"#;
        let err = parse_pois(&fc(&[poi.to_string()]), "p.geojson").unwrap_err();
        assert!(matches!(err, WorldError::UnknownSignature { index: 0, .. }));
    }

    #[test]
    fn poi_attributes_are_stringified() {
        let poi = r#"{"type":"Feature","geometry":{"type":"Point","coordinates":[1,2]},
            "properties":{"obj_id":"r","class":"radiator","nearest_node":0,"visual_signature_type":"landmark",
            "seating":true,"use":"resting spot"}}"#;
        let pois = parse_pois(&fc(&[poi.to_string()]), "p").unwrap();
        assert_eq!(pois[0].attributes["seating"], "true");
        assert_eq!(pois[0].attributes["use"], "resting spot");
        assert!(!pois[0].attributes.contains_key("obj_id"));
    }

    #[test]
    fn malformed_json_is_parse_error() {
        assert!(matches!(parse_graph("{", "g"), Err(WorldError::Parse { .. })));
    }
}
