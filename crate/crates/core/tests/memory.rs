mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use proptest::prelude::*;
use semnav_core::executive::{read_audit_file, AuditRecord, NavOutcome};
use semnav_core::memory::{
    cluster_observations, compile_digest, extract_from_records, extract_memory, group_preferences, load_digest,
    md5_hex, refresh_workflow, M1EntityRecord, M2Pattern, M3Preference, M5TaskSummary, MemoryStore,
    RefreshOptions, SceneObservation, ENTITY_TRIMMED, PATTERN_TRIMMED,
};
use semnav_core::resolver::ResolutionMethod;
use semnav_core::vlm::Confidence;
use semnav_core::world::Policy;

fn platforms() -> Vec<String> {
    vec!["xplorer-c".to_owned()]
}

fn seed_and_a(dir: &Path) -> (PathBuf, PathBuf) {
    let seed = common::replay(&common::script("seed"), &dir.join("seed"));
    let a = common::replay(&common::script("session_a"), &dir.join("a"));
    (seed.audit_path, a.audit_path)
}

#[test]
fn replayed_logs_reproduce_the_memory_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let (seed, a) = seed_and_a(dir.path());
    let w = common::world();
    let p = common::policy();

    let initial = extract_memory(&[&seed], &platforms(), Some(&w), &p).unwrap();
    let compiled = compile_digest(&initial, &p);
    let fixture = std::fs::read(common::fixture("memory/initial/digest.json")).unwrap();
    assert_eq!(compiled.md5, md5_hex(&fixture));
    assert_eq!(compiled.digest.l3a_promotions_ready.len(), 5);

    let after = extract_memory(&[&seed, &a], &platforms(), Some(&w), &p).unwrap();
    let compiled = compile_digest(&after, &p);
    let fixture = std::fs::read(common::fixture("memory/post_session_a/digest.json")).unwrap();
    assert_eq!(compiled.md5, md5_hex(&fixture));
    let promoted: Vec<_> = compiled.digest.l3a_promotions_ready.iter().map(|p| p.node_id).collect();
    assert!(promoted.contains(&9), "{promoted:?}");
}

#[test]
fn extraction_ignores_file_order_and_splits() {
    let dir = tempfile::tempdir().unwrap();
    let (seed, a) = seed_and_a(dir.path());
    let (w, p) = (common::world(), common::policy());
    let forward = extract_memory(&[&seed, &a], &platforms(), Some(&w), &p).unwrap();
    let backward = extract_memory(&[&a, &seed], &platforms(), Some(&w), &p).unwrap();
    assert_eq!(forward.render_files(), backward.render_files());

    // Cut the session A log in half, mid-session.
    let lines: Vec<String> = std::fs::read_to_string(&a).unwrap().lines().map(str::to_owned).collect();
    let (head, tail) = lines.split_at(lines.len() / 2);
    let (h, t) = (dir.path().join("h.jsonl"), dir.path().join("t.jsonl"));
    std::fs::write(&h, head.join("\n") + "\n").unwrap();
    std::fs::write(&t, tail.join("\n") + "\n").unwrap();
    let split = extract_memory(&[&t, &seed, &h], &platforms(), Some(&w), &p).unwrap();
    assert_eq!(forward.render_files(), split.render_files());

    let again = extract_memory(&[&seed, &a], &platforms(), Some(&w), &p).unwrap();
    assert_eq!(forward.render_files(), again.render_files());
}

#[test]
fn written_store_loads_back_and_recompiles_identically() {
    let dir = tempfile::tempdir().unwrap();
    let (seed, _) = seed_and_a(dir.path());
    let (w, p) = (common::world(), common::policy());
    let store = extract_memory(&[&seed], &platforms(), Some(&w), &p).unwrap();
    let compiled = compile_digest(&store, &p);
    let mem = dir.path().join("mem");
    store.write_to(&mem, &compiled).unwrap();
    assert!(mem.join("M4_xplorer-c.jsonl").exists());
    let loaded = MemoryStore::load_dir(&mem).unwrap();
    assert_eq!(loaded.m3, store.m3);
    assert_eq!(compile_digest(&loaded, &p).md5, compiled.md5);
}

#[test]
fn unrequested_platforms_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let (seed, _) = seed_and_a(dir.path());
    let records = read_audit_file(&seed).unwrap();
    let store = extract_from_records(&records, &["xplorer-b".to_owned()], None, &common::policy());
    assert_eq!(store.unknown_platforms, ["xplorer-c"]);
    assert!(store.m5.iter().all(|r| r.platform_id == "xplorer-c"));
}

#[test]
fn return_commands_stay_out_of_preferences() {
    let dir = tempfile::tempdir().unwrap();
    let (seed, _) = seed_and_a(dir.path());
    let records = read_audit_file(&seed).unwrap();
    let returns: Vec<String> = records
        .iter()
        .filter_map(AuditRecord::as_decision)
        .filter(|d| d.return_command)
        .map(|d| d.instruction.clone())
        .collect();
    let store = extract_from_records(&records, &platforms(), None, &common::policy());
    for r in &returns {
        assert!(store.m3.iter().all(|p| !p.examples.contains(r)), "{r}");
    }
    assert_eq!(store.m5.iter().filter(|r| r.return_command).count(), returns.len());
}

fn summary(instruction: &str, node: i64, method: ResolutionMethod) -> M5TaskSummary {
    M5TaskSummary {
        timestamp: "2026-04-22T09:00:00.000Z".into(),
        platform_id: "xplorer-c".into(),
        session_id: "t".into(),
        instruction: instruction.into(),
        return_command: false,
        method,
        node_id: Some(node),
        allowed: true,
        nav_outcome: NavOutcome::MissionComplete,
        confirmed: true,
        resolve_ms: 0.1,
        vlm_ms: 0.0,
        nav_total_s: 10.0,
        scenario: None,
        anomalies: Vec::new(),
    }
}

fn grouped(rows: &[(i64, ResolutionMethod)]) -> M3Preference {
    let m5: Vec<_> = rows.iter().map(|(n, m)| summary("bring me to the quiet reading room", *n, *m)).collect();
    let mut out = group_preferences(&m5, &Policy::default());
    assert_eq!(out.len(), 1);
    out.remove(0)
}

#[test]
fn promotion_thresholds_are_inclusive() {
    use ResolutionMethod::*;
    assert!(!grouped(&[(4, L3bVlm), (4, L3bVlm)]).ready_for_l3a_promotion);
    assert!(grouped(&[(4, L3bVlm), (4, L3aDeterministic), (4, L3aM3Preference)]).ready_for_l3a_promotion);
    assert!(!grouped(&[(4, L3aDeterministic), (4, L3aDeterministic), (4, L3aM3Preference)]).ready_for_l3a_promotion);

    let exact = grouped(&[(4, L3bVlm), (4, L3bVlm), (4, L3bVlm), (4, L3bVlm), (7, L3bVlm)]);
    assert_eq!((exact.consistency, exact.dominant_node), (0.8, 4));
    assert!(exact.ready_for_l3a_promotion);

    let short = grouped(&[(4, L3bVlm), (4, L3bVlm), (4, L3bVlm), (7, L3bVlm)]);
    assert_eq!(short.consistency, 0.75);
    assert!(!short.ready_for_l3a_promotion);

    let tie = grouped(&[(7, L3bVlm), (4, L3bVlm)]);
    assert_eq!(tie.dominant_node, 4);
}

#[test]
fn preference_keys_ignore_stopwords_and_order() {
    use ResolutionMethod::L3bVlm;
    let m5 = [
        summary("bring me to the quiet reading room", 4, L3bVlm),
        summary("Reading room, quiet!", 4, L3bVlm),
        summary("quiet reading room", 4, L3bVlm),
    ];
    let out = group_preferences(&m5, &Policy::default());
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].frequency, 3);
    assert_eq!(out[0].examples.len(), 3);
}

fn obs(node: i64, text: &str, confidence: Confidence) -> SceneObservation {
    SceneObservation {
        node_id: node,
        text: text.into(),
        confidence,
    }
}

#[test]
fn scene_clustering_needs_enough_confident_observations() {
    let p = Policy::default();
    let scenes = [
        obs(14, "open window with a view of the courtyard", Confidence::High),
        obs(14, "open window view of the courtyard trees", Confidence::High),
        obs(14, "window view courtyard", Confidence::Medium),
        obs(14, "fire extinguisher on the wall", Confidence::High),
        obs(8, "lab benches and machines", Confidence::Low),
        obs(8, "lab benches and machines", Confidence::Low),
        obs(8, "lab benches and machines", Confidence::Low),
    ];
    let patterns = cluster_observations(&scenes, &p);
    assert_eq!(patterns.len(), 1);
    let m = &patterns[0];
    assert_eq!((m.node_id, m.observation_count), (14, 3));
    assert!((m.confidence - (1.0 + 1.0 + 0.6) / 3.0).abs() < 1e-12);
    assert_eq!(m.description, "open window with a view of the courtyard");
}

#[test]
fn unusable_digests_degrade_to_none() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(load_digest(Some(&missing)).hash, "none");
    assert_eq!(load_digest(None).hash, "none");
    for (name, body) in [("empty.json", "  \n"), ("corrupt.json", "{\"top_entities\": ["), ("wrong.json", "[1,2]")] {
        let path = dir.path().join(name);
        std::fs::write(&path, body).unwrap();
        let loaded = load_digest(Some(&path));
        assert!(loaded.digest.is_none(), "{name}");
        assert_eq!(loaded.hash, "none");
    }
    let good = common::fixture("memory/initial/digest.json");
    let loaded = load_digest(Some(&good));
    assert_eq!(loaded.hash, md5_hex(&std::fs::read(&good).unwrap()));
}

#[test]
fn refresh_is_idempotent_and_keeps_a_backup() {
    let dir = tempfile::tempdir().unwrap();
    let logs = dir.path().join("logs");
    common::replay(&common::script("seed"), &logs);
    let mem = dir.path().join("mem");
    let (w, p) = (common::world(), common::policy());
    let options = RefreshOptions { platforms: platforms() };

    let first = refresh_workflow(&logs, &mem, Some(&w), &p, &options).unwrap();
    assert!(first.changed());
    assert!(first.backup.is_none());
    let second = refresh_workflow(&logs, &mem, Some(&w), &p, &options).unwrap();
    assert!(!second.changed(), "{:?}", second.diff);
    assert_eq!(second.new_md5, first.new_md5);
    assert_eq!(second.old_md5.as_deref(), Some(first.new_md5.as_str()));
    assert!(second.render().contains("no diff"));
    assert!(mem.join("digest.json.bak").exists());
}

#[test]
fn refresh_refuses_invalid_logs_without_touching_memory() {
    let dir = tempfile::tempdir().unwrap();
    let logs = dir.path().join("logs");
    common::replay(&common::script("seed"), &logs);
    let mem = dir.path().join("mem");
    let (w, p) = (common::world(), common::policy());
    let options = RefreshOptions { platforms: platforms() };
    refresh_workflow(&logs, &mem, Some(&w), &p, &options).unwrap();
    let before = std::fs::read(mem.join("digest.json")).unwrap();

    std::fs::write(logs.join("zz_bad.jsonl"), "{\"event\":\"decision\"}\n").unwrap();
    assert!(refresh_workflow(&logs, &mem, Some(&w), &p, &options).is_err());
    assert_eq!(std::fs::read(mem.join("digest.json")).unwrap(), before);
    assert!(!mem.join("digest.json.bak").exists());
}

fn entity(i: usize, visits: u32, pad: usize) -> M1EntityRecord {
    M1EntityRecord {
        poi_id: format!("poi_{i:02}_{}", "x".repeat(pad)),
        node_id: i as i64,
        signature_type: "landmark".into(),
        visit_count: visits,
        success_rate: 1.0,
        mean_nav_time_s: 12.5,
        mean_confidence: Some(0.9),
        visit_count_by_platform: BTreeMap::from([("xplorer-c".into(), visits)]),
        success_rate_by_platform: BTreeMap::from([("xplorer-c".into(), 1.0)]),
        unreliable: false,
    }
}

fn pattern(i: usize, pad: usize) -> M2Pattern {
    M2Pattern {
        node_id: i as i64,
        keywords: vec!["window".into(), "view".into()],
        observation_count: 3 + i,
        confidence: 0.9,
        description: format!("scene {i} {}", "y".repeat(pad)),
    }
}

fn preference(i: usize, pad: usize) -> M3Preference {
    M3Preference {
        key: format!("pref{i} {}", "z".repeat(pad)),
        examples: vec![format!("example {i}")],
        frequency: 3,
        dominant_node: i as i64,
        consistency: 1.0,
        node_counts: BTreeMap::from([(i as i64, 3)]),
        method_counts: BTreeMap::from([("L3b_vlm".into(), 3)]),
        ready_for_l3a_promotion: true,
    }
}

proptest! {
    #[test]
    fn digest_trimming_respects_its_contract(
        n_entities in 0usize..9,
        n_patterns in 0usize..6,
        n_promotions in 0usize..8,
        pad in 0usize..200,
        limit in 200usize..4000,
    ) {
        let store = MemoryStore {
            m1: (0..n_entities).map(|i| entity(i, 10 - i as u32, pad)).collect(),
            m2: (0..n_patterns).map(|i| pattern(i, pad)).collect(),
            m3: (0..n_promotions).map(|i| preference(i, pad)).collect(),
            ..MemoryStore::default()
        };
        let policy = Policy { digest_char_limit: limit, ..Policy::default() };
        let c = compile_digest(&store, &policy);
        let full = compile_digest(&store, &Policy { digest_char_limit: usize::MAX, ..Policy::default() });

        prop_assert_eq!(c.digest.l3a_promotions_ready.len(), n_promotions);
        prop_assert_eq!(c.trimmed, full.text.chars().count() > limit);
        if !c.over_limit {
            prop_assert!(c.text.chars().count() <= limit);
        }
        if c.trimmed {
            prop_assert!(c.digest.top_entities.len() <= ENTITY_TRIMMED);
            prop_assert!(c.digest.top_patterns.len() <= PATTERN_TRIMMED);
        } else {
            prop_assert_eq!(&c.text, &full.text);
        }
        prop_assert_eq!(c.md5, md5_hex(c.text.as_bytes()));
    }
}
