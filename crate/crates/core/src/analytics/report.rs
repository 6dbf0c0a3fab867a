use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::stats::{summarize, Summary};
use crate::error::{AuditError, SimError};
use crate::executive::{read_audit_file, AuditEntry};
use crate::resolver::ResolutionMethod;
use crate::world::{normalize_text, NodeId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDefinition {
    pub label: String,
    /// Used when an entry carries no expected node of its own.
    #[serde(default)]
    pub expected_node: Option<NodeId>,
    pub instructions: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDefinitions {
    pub scenarios: Vec<ScenarioDefinition>,
}

impl ScenarioDefinitions {
    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| SimError::Script {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Matches on normalized instruction text.
    pub fn classify(&self, instruction: &str) -> Option<&ScenarioDefinition> {
        let n = normalize_text(instruction);
        self.scenarios
            .iter()
            .find(|s| s.instructions.iter().any(|i| normalize_text(i) == n))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Tally {
    pub decisions: usize,
    pub methods: BTreeMap<String, usize>,
    pub correct: usize,
    /// Decisions with a known expected node.
    pub judged: usize,
    pub nav_complete: usize,
    pub confirmed: usize,
}

impl Tally {
    fn add(&mut self, e: &AuditEntry, expected: Option<NodeId>) {
        self.decisions += 1;
        *self.methods.entry(e.resolution_method.as_str().to_owned()).or_default() += 1;
        if let Some(x) = expected {
            self.judged += 1;
            self.correct += (e.node_id == Some(x)) as usize;
        }
        self.nav_complete += e.nav_outcome.is_complete() as usize;
        self.confirmed += e.confirmation.confirmed as usize;
    }

    pub fn method(&self, m: ResolutionMethod) -> usize {
        self.methods.get(m.as_str()).copied().unwrap_or(0)
    }

    pub fn fast_path(&self) -> usize {
        self.method(ResolutionMethod::L3aM3Preference) + self.method(ResolutionMethod::L3aDeterministic)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SessionReport {
    pub total_decisions: usize,
    pub excluded_returns: usize,
    pub overall: Tally,
    pub per_scenario: BTreeMap<String, Tally>,
    pub per_platform: BTreeMap<String, Tally>,
    pub fast_path_rate: Option<f64>,
    pub semantic_accuracy: Option<f64>,
    pub navigation_completion: Option<f64>,
    /// Measured cascade time of decisions resolved on the fast path.
    pub l3a_resolve_ms: Option<Summary>,
    /// Model time of escalated decisions.
    pub vlm_ms: Option<Summary>,
    /// Instructions that matched no scenario definition.
    pub unclassified: Vec<String>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn build_session_report(files: &[&Path], definitions: &ScenarioDefinitions) -> Result<SessionReport, AuditError> {
    let mut entries = Vec::new();
    for f in files {
        entries.extend(read_audit_file(f)?.into_iter().filter_map(|r| r.as_decision().cloned()));
    }
    Ok(report_from_entries(&entries, definitions))
}

/// Totals are independent of entry order.
pub fn report_from_entries(entries: &[AuditEntry], definitions: &ScenarioDefinitions) -> SessionReport {
    let mut report = SessionReport::default();
    let mut l3a = Vec::new();
    let mut vlm = Vec::new();
    for e in entries {
        if e.return_command {
            report.excluded_returns += 1;
            continue;
        }
        report.total_decisions += 1;
        let def = definitions.classify(&e.instruction);
        let expected = e.extra.expected_node.or_else(|| def.and_then(|d| d.expected_node));
        report.overall.add(e, expected);
        report.per_platform.entry(e.platform_id.clone()).or_default().add(e, expected);
        match def {
            Some(d) => report.per_scenario.entry(d.label.clone()).or_default().add(e, expected),
            None => report.unclassified.push(e.instruction.clone()),
        }
        if e.resolution_method.is_fast_path() {
            l3a.push(e.timing.resolve_ms);
        } else if e.timing.vlm_ms > 0.0 {
            vlm.push(e.timing.vlm_ms);
        }
    }
    report.unclassified.sort();
    let o = &report.overall;
    report.fast_path_rate = ratio(o.fast_path(), o.decisions);
    report.semantic_accuracy = ratio(o.correct, o.judged);
    report.navigation_completion = ratio(o.nav_complete, o.decisions);
    l3a.sort_by(f64::total_cmp);
    vlm.sort_by(f64::total_cmp);
    report.l3a_resolve_ms = summarize(&l3a);
    report.vlm_ms = summarize(&vlm);
    report
}

/// Same columns as the session monitor CSV, one row per scenario plus a
/// total row.
pub fn write_report_csv(report: &SessionReport, path: &Path) -> Result<(), SimError> {
    let csv_err = |e: csv::Error| SimError::Io(e.into());
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(crate::sim::MONITOR_COLUMNS).map_err(csv_err)?;
    let row = |label: &str, t: &Tally| {
        vec![
            label.to_owned(),
            t.decisions.to_string(),
            t.method(ResolutionMethod::L3aM3Preference).to_string(),
            t.method(ResolutionMethod::L3aDeterministic).to_string(),
            t.method(ResolutionMethod::L3bVlm).to_string(),
            t.correct.to_string(),
            t.nav_complete.to_string(),
            t.confirmed.to_string(),
        ]
    };
    for (label, t) in &report.per_scenario {
        w.write_record(row(label, t)).map_err(csv_err)?;
    }
    w.write_record(row("total", &report.overall)).map_err(csv_err)?;
    w.flush()?;
    Ok(())
}
