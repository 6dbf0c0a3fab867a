use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{normalize_text, DetectedObject, NodeId, Point, SignatureType, StaticPoi};

/// Detections of one class closer than this collapse into one.
pub const DEDUP_RADIUS_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectSource {
    Static,
    Yolo,
}

/// One entry of the merged semantic object list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedObject {
    pub id: String,
    pub class: String,
    pub position: Point,
    pub nearest_node: NodeId,
    pub source: ObjectSource,
    /// Detector confidence; `None` for surveyed objects.
    pub confidence: Option<f64>,
    pub signature_type: Option<SignatureType>,
    pub attributes: BTreeMap<String, String>,
}

impl MergedObject {
    pub fn is_static(&self) -> bool {
        self.source == ObjectSource::Static
    }
}

/// Static POIs first (all kept), then the surviving detections: a detection
/// is suppressed when any static POI shares its class, and same-class
/// detections within [`DEDUP_RADIUS_M`] keep only the most confident one.
pub fn merge_semantic_objects(
    statics: &[StaticPoi],
    detections: &[DetectedObject],
) -> Vec<MergedObject> {
    let static_classes: HashSet<String> = statics.iter().map(|p| normalize_text(&p.class)).collect();
    let mut merged: Vec<MergedObject> = statics
        .iter()
        .map(|p| MergedObject {
            id: p.obj_id.clone(),
            class: p.class.clone(),
            position: p.position,
            nearest_node: p.nearest_node,
            source: ObjectSource::Static,
            confidence: None,
            signature_type: Some(p.signature_type),
            attributes: p.attributes.clone(),
        })
        .collect();

    let mut candidates: Vec<(usize, &DetectedObject)> = detections
        .iter()
        .enumerate()
        .filter(|(_, d)| !static_classes.contains(&normalize_text(&d.class)))
        .collect();
    // Highest confidence first; input order breaks ties.
    candidates.sort_by(|a, b| b.1.confidence.total_cmp(&a.1.confidence).then(a.0.cmp(&b.0)));

    let mut kept: Vec<(usize, &DetectedObject)> = Vec::new();
    for (i, det) in candidates {
        let class = normalize_text(&det.class);
        let duplicate = kept.iter().any(|(_, k)| {
            normalize_text(&k.class) == class && k.position.distance(&det.position) <= DEDUP_RADIUS_M
        });
        if !duplicate {
            kept.push((i, det));
        }
    }
    kept.sort_by_key(|(i, _)| *i);

    let mut per_class: BTreeMap<String, usize> = BTreeMap::new();
    for (_, det) in kept {
        let class = normalize_text(&det.class);
        let n = per_class.entry(class.clone()).or_default();
        *n += 1;
        merged.push(MergedObject {
            id: format!("yolo_{}_{}", class.replace(' ', "_"), n),
            class: det.class.clone(),
            position: det.position,
            nearest_node: det.nearest_node,
            source: ObjectSource::Yolo,
            confidence: Some(det.confidence),
            signature_type: None,
            attributes: BTreeMap::new(),
        });
    }
    merged
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn poi(id: &str, class: &str, x: f64) -> StaticPoi {
        StaticPoi {
            obj_id: id.into(),
            class: class.into(),
            position: Point::new(x, 0.0),
            nearest_node: 0,
            signature_type: SignatureType::Landmark,
            attributes: BTreeMap::new(),
        }
    }

    fn det(class: &str, conf: f64, x: f64) -> DetectedObject {
        DetectedObject::new(class, conf, Point::new(x, 0.0), 0)
    }

    #[test]
    fn static_chair_suppresses_detected_chair() {
        let merged = merge_semantic_objects(&[poi("lab_chair", "chair", 0.0)], &[det("chair", 0.95, 10.0)]);
        assert_eq!(merged.len(), 1);
        assert_eq!(merged[0].id, "lab_chair");
        assert!(merged[0].is_static());
    }

    #[test]
    fn proximate_detections_collapse_to_most_confident() {
        let merged = merge_semantic_objects(&[], &[det("person", 0.7, 0.0), det("person", 0.9, 0.3)]);
        assert_eq!(merged.len(), 1);
        assert_eq!(merged[0].confidence, Some(0.9));
        assert_eq!(merged[0].source, ObjectSource::Yolo);
    }

    #[test]
    fn distant_detections_are_both_kept() {
        let merged = merge_semantic_objects(&[], &[det("person", 0.7, 0.0), det("person", 0.9, 1.5)]);
        assert_eq!(merged.len(), 2);
    }

    #[test]
    fn unrelated_classes_are_retained() {
        let merged =
            merge_semantic_objects(&[poi("plant_1", "potted plant", 0.0)], &[det("person", 0.8, 0.2)]);
        assert_eq!(merged.len(), 2);
        assert_eq!(merged[1].class, "person");
    }

    proptest! {
        #[test]
        fn never_drops_statics_nor_adds_detections(
            statics in proptest::collection::vec((0usize..3, -5.0f64..5.0), 0..5),
            dets in proptest::collection::vec((0usize..4, 0.0f64..1.0, -5.0f64..5.0), 0..8),
        ) {
            let classes = ["chair", "plant", "person", "door"];
            let statics: Vec<StaticPoi> = statics
                .iter()
                .enumerate()
                .map(|(i, (c, x))| poi(&format!("s{i}"), classes[*c], *x))
                .collect();
            let dets: Vec<DetectedObject> = dets.iter().map(|(c, conf, x)| det(classes[*c], *conf, *x)).collect();
            let merged = merge_semantic_objects(&statics, &dets);
            let n_static = merged.iter().filter(|m| m.is_static()).count();
            prop_assert_eq!(n_static, statics.len());
            for s in &statics {
                prop_assert!(merged.iter().any(|m| m.id == s.obj_id));
            }
            prop_assert!(merged.len() - n_static <= dets.len());
        }
    }
}
