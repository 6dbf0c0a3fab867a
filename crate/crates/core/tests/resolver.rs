mod common;

use proptest::prelude::*;
use semnav_core::resolver::{resolve, resolve_traced, ResolutionMethod, ResolveOutcome};
use semnav_core::world::text::{instruction_signature, tokens_of};
use semnav_core::world::{jaccard_similarity, normalize_text, tokenize, Pose};

const S1: &str = "go to a place to take a short break for personal needs";
const S2: &str = "the washroom got on fire, help me find something to stop the fire";
const S3_OLD: &str = "It is too hot in here, take me somewhere I can get some fresh air";
const S3_NEW: &str = "Take me somewhere I can sit and relax";
const S4: &str = "go to lab_cb204";
const S5: &str = "Take me to the closest plant";

fn plant_pose() -> Pose {
    Pose::new(23.0, 1.0, 0.0)
}

fn step_of(o: &ResolveOutcome) -> Option<(u8, i64)> {
    o.resolution().map(|r| (r.step.unwrap(), r.node_id))
}

#[test]
fn each_deterministic_step_has_a_witness() {
    let (w, p) = (common::world(), common::policy());
    let cases = [
        ("go to node 12", 1, 12),
        ("nodul 3", 1, 3),
        ("go to cb204", 2, 5),
        ("mergi la laboratorul cb204", 2, 5),
        ("go to window_north", 3, 14),
        ("take me to mechanical engineering", 4, 8),
        ("where is the fire hydrant", 5, 8),
        ("go to the closest window", 6, 19),
        ("Du-mă la cel mai apropiat plant", 6, 19),
    ];
    for (text, step, node) in cases {
        let out = resolve(text, &w, &plant_pose(), None, &p);
        assert_eq!(step_of(&out), Some((step, node)), "{text}");
        assert_eq!(out.resolution().unwrap().method, ResolutionMethod::L3aDeterministic);
    }
}

#[test]
fn unknown_node_and_ambiguity_escalate() {
    let (w, p) = (common::world(), common::policy());
    for text in ["go to node 99", "go to a plant", "window", "", "take me somewhere nice"] {
        let out = resolve(text, &w, &plant_pose(), None, &p);
        assert!(out.is_escalation(), "{text:?} -> {out:?}");
    }
}

#[test]
fn trace_stops_at_first_hit() {
    let (w, p) = (common::world(), common::policy());
    let index = common::preferences("memory/initial/digest.json");
    let (out, trace) = resolve_traced(S4, &w, &plant_pose(), Some(&index), &p);
    assert_eq!(step_of(&out), Some((2, 5)));
    assert_eq!(trace.evaluated(), vec![0, 1, 2]);
    let (out, trace) = resolve_traced(S3_NEW, &w, &plant_pose(), Some(&index), &p);
    assert!(out.is_escalation());
    assert_eq!(trace.evaluated(), vec![0, 1, 2, 3, 4, 5, 6]);
}

#[test]
fn step_zero_reports_its_match() {
    let (w, p) = (common::world(), common::policy());
    let index = common::preferences("memory/initial/digest.json");
    let out = resolve(S2, &w, &Pose::default(), Some(&index), &p);
    let r = out.resolution().unwrap();
    assert_eq!((r.method, r.step, r.node_id), (ResolutionMethod::L3aM3Preference, Some(0), 8));
    let m = r.m3_match.as_ref().unwrap();
    assert_eq!(m.jaccard, 1.0);
    assert_eq!(m.preference_key, instruction_signature(S2));
}

#[test]
fn paraphrases_fall_below_the_preference_threshold() {
    let (w, p) = (common::world(), common::policy());
    let index = common::preferences("memory/initial/digest.json");
    let pairs = [
        ("I need a quick break for personal needs", S1),
        ("there is a fire, where can I find something to put it out", S2),
        ("I am overheating, I need some fresh air", S3_OLD),
    ];
    for (para, canon) in pairs {
        let j = jaccard_similarity(&tokens_of(para), &tokens_of(canon));
        assert!(j < p.jaccard_threshold, "{para}: {j}");
        assert!(resolve(para, &w, &Pose::default(), Some(&index), &p).is_escalation());
    }
}

#[test]
fn resolution_is_deterministic_over_many_repeats() {
    let (w, p) = (common::world(), common::policy());
    let index = common::preferences("memory/post_session_a/digest.json");
    for text in [S1, S2, S3_OLD, S3_NEW, S4, S5, "go to node 12", "window"] {
        let first = resolve(text, &w, &plant_pose(), Some(&index), &p);
        for _ in 0..1000 {
            let again = resolve(text, &w, &plant_pose(), Some(&index), &p);
            match (&first, &again) {
                (ResolveOutcome::Resolved(a), ResolveOutcome::Resolved(b)) => assert!(a.same_decision(b)),
                (ResolveOutcome::Escalate(a), ResolveOutcome::Escalate(b)) => assert_eq!(a.reason, b.reason),
                _ => panic!("{text}: outcome kind changed"),
            }
        }
    }
}

#[test]
fn missing_digest_only_affects_memory_scenarios() {
    let (w, p) = (common::world(), common::policy());
    let index = common::preferences("memory/post_session_a/digest.json");
    for text in [S4, S5, "go to node 12", "take me to mechanical engineering"] {
        let with = resolve(text, &w, &plant_pose(), Some(&index), &p);
        let without = resolve(text, &w, &plant_pose(), None, &p);
        assert!(with.resolution().unwrap().same_decision(without.resolution().unwrap()), "{text}");
    }
    for text in [S1, S2, S3_OLD, S3_NEW] {
        assert!(resolve(text, &w, &plant_pose(), None, &p).is_escalation(), "{text}");
        assert!(!resolve(text, &w, &plant_pose(), Some(&index), &p).is_escalation(), "{text}");
    }
}

#[test]
fn normalization_examples() {
    assert_eq!(normalize_text("  Du-mă   la   LAB_CB204 "), "du-ma la lab cb204");
    assert_eq!(normalize_text("Ședință ÎNCĂLZIRE ţ"), "sedinta incalzire t");
    assert!(tokenize(&normalize_text("go to the")).is_empty());
}

proptest! {
    #[test]
    fn normalize_is_idempotent(s in "\\PC{0,40}") {
        let once = normalize_text(&s);
        prop_assert_eq!(normalize_text(&once), once.clone());
    }

    #[test]
    fn normalize_is_idempotent_on_romanian(s in "[a-zA-ZăâîșşțţĂÂÎȘŞȚŢ_ ]{0,30}") {
        let once = normalize_text(&s);
        prop_assert_eq!(normalize_text(&once), once.clone());
        prop_assert!(!once.contains("  ") && !once.contains('_'));
    }

    #[test]
    fn jaccard_is_bounded_and_symmetric(a in "[a-z ]{0,40}", b in "[a-z ]{0,40}") {
        let (ta, tb) = (tokens_of(&a), tokens_of(&b));
        let j = jaccard_similarity(&ta, &tb);
        prop_assert!((0.0..=1.0).contains(&j));
        prop_assert_eq!(j, jaccard_similarity(&tb, &ta));
        if !ta.is_empty() {
            prop_assert_eq!(jaccard_similarity(&ta, &ta), 1.0);
        }
    }

    #[test]
    fn resolve_never_panics_and_is_repeatable(s in "\\PC{0,60}", x in -5.0f64..45.0, y in -5.0f64..10.0) {
        let (w, p) = (common::world(), common::policy());
        let pose = Pose::new(x, y, 0.0);
        let a = resolve(&s, &w, &pose, None, &p);
        let b = resolve(&s, &w, &pose, None, &p);
        prop_assert_eq!(a.is_escalation(), b.is_escalation());
        if let (Some(ra), Some(rb)) = (a.resolution(), b.resolution()) {
            prop_assert!(ra.same_decision(rb));
            prop_assert!(w.graph().contains(ra.node_id));
        }
    }
}
