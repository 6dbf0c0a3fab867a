mod common;

use proptest::prelude::*;
use semnav_core::executive::{
    build_affordance_manifest, confirm_arrival, confirmation_route, parse_audit_line, read_audit_file,
    validate_action, AuditRecord, AuditSink, Clock, ProposedAction, Validation, ACTION_FOLLOW_PATH,
    METHOD_POSE_BASED,
};
use semnav_core::vlm::{OracleBackend, OracleScript, SharedBackend};
use semnav_core::world::{Pose, SignatureType};
use serde_json::Value;

fn sample_log() -> (tempfile::TempDir, Vec<AuditRecord>) {
    let dir = tempfile::tempdir().unwrap();
    let art = common::replay(&common::script("session_c_c"), dir.path());
    let records = read_audit_file(&art.audit_path).unwrap();
    (dir, records)
}

#[test]
fn audit_records_round_trip() {
    let (_dir, records) = sample_log();
    let kinds: Vec<&str> = records
        .iter()
        .map(|r| match r {
            AuditRecord::SessionStart(_) => "session_start",
            AuditRecord::NavigatorStartup(_) => "navigator_startup",
            AuditRecord::Shutdown(_) => "shutdown",
            AuditRecord::Decision(_) => "decision",
        })
        .collect();
    assert_eq!(kinds, ["session_start", "navigator_startup", "decision", "decision", "decision", "shutdown"]);
    for r in &records {
        let line = serde_json::to_string(r).unwrap();
        assert_eq!(&parse_audit_line(&line).unwrap(), r);
    }
}

#[test]
fn decision_lines_carry_the_full_schema() {
    let (_dir, records) = sample_log();
    let d = records.iter().find_map(AuditRecord::as_decision).unwrap();
    let v: Value = serde_json::to_value(AuditRecord::Decision(d.clone())).unwrap();
    assert_eq!(v["event"], "decision");
    assert_eq!(v["schema_version"], "2.0");
    for key in ["timing", "confirmation", "extra", "images", "validation"] {
        assert!(v[key].is_object(), "{key}");
    }
    assert!(v["extra"]["yolo"].is_object());
    assert!(v["extra"]["battery"].is_object());
}

#[test]
fn malformed_lines_are_rejected() {
    let (_dir, records) = sample_log();
    let d = records.iter().find_map(AuditRecord::as_decision).unwrap().clone();
    let base = serde_json::to_value(AuditRecord::Decision(d)).unwrap();

    let mut missing = base.clone();
    missing["timing"].as_object_mut().unwrap().remove("vlm_ms");
    assert!(parse_audit_line(&missing.to_string()).unwrap_err().contains("timing.vlm_ms"));

    let mut version = base.clone();
    version["schema_version"] = "1.0".into();
    assert!(parse_audit_line(&version.to_string()).is_err());

    let mut vlm_time = base.clone();
    vlm_time["timing"]["vlm_ms"] = 12.0.into();
    assert!(parse_audit_line(&vlm_time.to_string()).is_err());

    let mut platform = base.clone();
    platform["platform_id"] = " ".into();
    assert!(parse_audit_line(&platform.to_string()).is_err());

    assert!(parse_audit_line("{not json").is_err());
    assert!(parse_audit_line(r#"{"event":"party"}"#).is_err());
}

#[test]
fn bad_line_reports_its_position() {
    let (dir, records) = sample_log();
    let path = dir.path().join("broken.jsonl");
    let mut text: String = records
        .iter()
        .map(|r| serde_json::to_string(r).unwrap() + "\n")
        .collect();
    text.push_str("{\"event\":\"decision\"}\n");
    std::fs::write(&path, text).unwrap();
    let err = read_audit_file(&path).unwrap_err().to_string();
    assert!(err.contains(&format!(":{}:", records.len() + 1)), "{err}");
}

#[test]
fn sink_refuses_foreign_platforms() {
    let (_dir, records) = sample_log();
    let mut sink = AuditSink::new(Vec::new(), "xplorer-b");
    assert!(sink.append(&records[0]).is_err());
    let mut sink = AuditSink::new(Vec::new(), "xplorer-c");
    for r in &records {
        sink.append(r).unwrap();
    }
    let bytes = sink.into_inner();
    assert_eq!(bytes.iter().filter(|b| **b == b'\n').count(), records.len());
}

#[test]
fn frozen_clock_ticks_one_second() {
    let clock = Clock::frozen();
    assert_eq!(clock.now(), "2026-04-22T09:00:00.000Z");
    assert_eq!(clock.now(), "2026-04-22T09:00:01.000Z");
    assert!(!Clock::System.is_frozen());
}

#[test]
fn confirmation_routes_follow_signature_types() {
    let w = common::world();
    let (sig, pois) = confirmation_route(&w, 8).unwrap();
    assert_eq!(sig, SignatureType::Landmark);
    assert_eq!(pois.len(), 2);
    assert_eq!(confirmation_route(&w, 20).unwrap().0, SignatureType::Contextual);
    assert!(confirmation_route(&w, 0).is_none());
    assert!(confirmation_route(&w, 3).is_none());
}

#[test]
fn pose_based_confirmation_uses_the_radius() {
    let (w, p) = (common::world(), common::policy());
    let at = w.node(0).unwrap().position();
    let near = confirm_arrival(&w, 0, &Pose::new(at.x + 1.0, at.y, 0.0), &p, None, None);
    assert_eq!(near.record.confirmation_method, METHOD_POSE_BASED);
    assert!(near.record.confirmed);
    let far = confirm_arrival(&w, 0, &Pose::new(at.x + 3.0, at.y, 0.0), &p, None, None);
    assert!(!far.record.confirmed);
}

#[test]
fn landmark_confirmation_sees_the_viewpoint_scene() {
    let (w, p) = (common::world(), common::policy());
    let script = OracleScript::load(&common::fixture("scenarios/oracle_scenes.json")).unwrap();
    let backend = SharedBackend::new(OracleBackend::new(script));
    let at = w.node(14).unwrap().position();
    let arrived = confirm_arrival(&w, 14, &Pose::new(at.x, at.y, 0.0), &p, Some(&backend), None);
    assert_eq!(arrived.record.confirmation_method, "vlm_landmark");
    assert!(arrived.record.confirmed);
    // Ending up at the far end of the corridor shows a different scene.
    let lost = w.node(1).unwrap().position();
    let missed = confirm_arrival(&w, 14, &Pose::new(lost.x, lost.y, 0.0), &p, Some(&backend), None);
    assert!(!missed.record.confirmed);
    // The wall-mounted hydrant is never in view at node 8.
    let lab = w.node(8).unwrap().position();
    let hydrant = confirm_arrival(&w, 8, &Pose::new(lab.x, lab.y, 0.0), &p, Some(&backend), None);
    assert!(!hydrant.record.confirmed);
    let none = confirm_arrival(&w, 14, &Pose::new(at.x, at.y, 0.0), &p, None, None);
    assert_eq!(none.anomaly.as_deref(), Some("confirmation_no_backend"));
}

#[derive(Debug, Clone)]
enum ActionKind {
    Allowed,
    Forbidden,
}

proptest! {
    #[test]
    fn validator_reports_the_first_failing_check(
        kind in prop_oneof![Just(ActionKind::Allowed), Just(ActionKind::Forbidden)],
        node in -3i64..30,
        distance in prop_oneof![0.0f64..100.0, Just(f64::INFINITY), Just(f64::NAN)],
    ) {
        let (w, p) = (common::world(), common::policy());
        let manifest = build_affordance_manifest(&w, &[], &p);
        let action = ProposedAction {
            action: match kind {
                ActionKind::Allowed => ACTION_FOLLOW_PATH.to_owned(),
                ActionKind::Forbidden => "SelfDestruct".to_owned(),
            },
            target_node: node,
            goal_distance: distance,
        };
        let expected = if matches!(kind, ActionKind::Forbidden) {
            Validation::Blocked(1)
        } else if !w.graph().contains(node) {
            Validation::Blocked(2)
        } else if !(distance <= p.max_goal_distance) {
            Validation::Blocked(3)
        } else {
            Validation::Allowed
        };
        prop_assert_eq!(validate_action(&action, &manifest, &p), expected);
    }
}
