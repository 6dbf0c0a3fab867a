use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde_json::Value;

use super::script::ScenarioScript;
use super::session::{backend_for_script, run_session, SessionArtifacts, SessionOptions};
use crate::error::SimError;
use crate::executive::{read_audit_file, AuditEntry};
use crate::vlm::{BackendStats, SharedBackend};
use crate::world::{Policy, World};

#[derive(Debug, Clone, Default)]
pub struct IntegrityReport {
    /// `(platform, digest hash from its startup event)`.
    pub digest_hashes: Vec<(String, String)>,
    pub same_digest: bool,
    pub platform_pure: bool,
    pub all_correct: bool,
    pub violations: Vec<String>,
    pub backend: Option<BackendStats>,
}

impl IntegrityReport {
    pub fn passed(&self) -> bool {
        self.same_digest && self.platform_pure && self.all_correct
    }
}

#[derive(Debug, Clone)]
pub struct ConcurrentRun {
    pub sessions: Vec<SessionArtifacts>,
    pub integrity: IntegrityReport,
}

/// Runs every script on its own worker thread. A shared backend, when
/// given, serializes all model calls across sessions; otherwise each
/// session builds its own oracle.
pub fn run_concurrent(
    scripts: &[ScenarioScript],
    world: Arc<World>,
    policy: Arc<Policy>,
    shared_backend: Option<Arc<SharedBackend>>,
    options: &SessionOptions,
) -> Result<ConcurrentRun, SimError> {
    let mut seen = BTreeSet::new();
    for s in scripts {
        if !seen.insert(s.platform.platform_id.as_str()) {
            return Err(SimError::Script {
                path: s.session_id.clone(),
                message: format!("platform `{}` appears twice", s.platform.platform_id),
            });
        }
    }
    let backends = scripts
        .iter()
        .map(|s| match &shared_backend {
            Some(b) => Ok(Some(Arc::clone(b))),
            None => backend_for_script(s),
        })
        .collect::<Result<Vec<_>, _>>()?;

    let results: Vec<Result<SessionArtifacts, SimError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = scripts
            .iter()
            .zip(backends)
            .map(|(script, backend)| {
                let world = Arc::clone(&world);
                let policy = Arc::clone(&policy);
                scope.spawn(move || run_session(script, world, policy, backend, options))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|p| Err(SimError::Worker(format!("{:?}", p.downcast_ref::<&str>()))))
            })
            .collect()
    });
    let sessions = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut integrity = check_integrity(&sessions)?;
    integrity.backend = shared_backend.map(|b| b.stats());
    Ok(ConcurrentRun { sessions, integrity })
}

/// Re-reads each audit file and checks digest agreement, platform purity
/// and mission correctness.
pub fn check_integrity(sessions: &[SessionArtifacts]) -> Result<IntegrityReport, SimError> {
    let mut report = IntegrityReport {
        digest_hashes: sessions
            .iter()
            .map(|s| (s.platform_id.clone(), s.digest_hash().to_owned()))
            .collect(),
        ..IntegrityReport::default()
    };
    let hashes: BTreeSet<&str> = report.digest_hashes.iter().map(|(_, h)| h.as_str()).collect();
    report.same_digest = hashes.len() <= 1;
    if !report.same_digest {
        report.violations.push(format!("startup digest hashes differ: {hashes:?}"));
    }

    report.platform_pure = true;
    for s in sessions {
        for (line, record) in read_audit_file(&s.audit_path)?.iter().enumerate() {
            if record.platform_id() != s.platform_id {
                report.platform_pure = false;
                report.violations.push(format!(
                    "{}:{}: platform `{}` in the `{}` log",
                    s.audit_path.display(),
                    line + 1,
                    record.platform_id(),
                    s.platform_id
                ));
            }
        }
    }

    report.all_correct = true;
    for s in sessions {
        for m in s.missions.iter().filter(|m| m.correct == Some(false)) {
            report.all_correct = false;
            report.violations.push(format!(
                "{}: mission {} `{}` went to {:?}, expected {:?}",
                s.platform_id, m.index, m.instruction, m.node_id, m.expected_node
            ));
        }
    }
    Ok(report)
}

/// Entries as comparable strings with run-dependent fields blanked:
/// timestamps and measured resolve times.
pub fn masked_entries(entries: &[AuditEntry]) -> Vec<String> {
    let mut out: Vec<String> = entries
        .iter()
        .map(|e| {
            let mut v = serde_json::to_value(e).unwrap_or(Value::Null);
            v["timestamp"] = Value::Null;
            v["timing"]["resolve_ms"] = Value::Null;
            v.to_string()
        })
        .collect();
    out.sort();
    out
}

/// Per platform, whether two runs produced the same multiset of masked
/// entries. Returns the platforms that differ.
pub fn compare_runs(a: &[SessionArtifacts], b: &[SessionArtifacts]) -> Vec<String> {
    let by_platform = |runs: &[SessionArtifacts]| -> BTreeMap<String, Vec<String>> {
        let mut m: BTreeMap<String, Vec<AuditEntry>> = BTreeMap::new();
        for s in runs {
            m.entry(s.platform_id.clone()).or_default().extend(s.entries.iter().cloned());
        }
        m.into_iter().map(|(k, v)| (k, masked_entries(&v))).collect()
    };
    let (a, b) = (by_platform(a), by_platform(b));
    let platforms: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    platforms
        .into_iter()
        .filter(|p| a.get(*p) != b.get(*p))
        .cloned()
        .collect()
}
