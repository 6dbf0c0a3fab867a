//! Structured JSONL audit records.
//!
//! Field names here are a contract: the memory extractor and the analytics
//! read them back. Optional values are written as explicit `null`s.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use chrono::{DateTime, Duration, SecondsFormat, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::AuditError;
use crate::resolver::{M3Match, ResolutionMethod};
use crate::world::{NodeId, Pose};

pub const SCHEMA_VERSION: &str = "2.0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NavOutcome {
    MissionComplete,
    Missed,
}

impl NavOutcome {
    pub fn is_complete(&self) -> bool {
        matches!(self, Self::MissionComplete)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRecord {
    pub action: String,
    pub allowed: bool,
    pub failed_check: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub resolve_ms: f64,
    /// Zero exactly when the decision did not use the VLM.
    pub vlm_ms: f64,
    pub nav_total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfirmationRecord {
    pub confirmation_method: String,
    pub confirmed: bool,
    pub payload: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extra {
    pub xy_error_m: Option<f64>,
    pub distance_traveled_m: f64,
    pub start_pose: Pose,
    pub end_pose: Pose,
    pub m3_match_info: Option<M3Match>,
    /// Detector diagnostics, passed through unchanged.
    pub yolo: Value,
    /// Power telemetry, passed through unchanged.
    pub battery: Value,
    pub scenario: Option<String>,
    pub expected_node: Option<NodeId>,
    pub escalation_reason: Option<String>,
    pub vlm_reason: Option<String>,
    pub anomalies: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Images {
    pub start: Option<String>,
    pub finish: Option<String>,
}

/// One decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub schema_version: String,
    pub timestamp: String,
    pub platform_id: String,
    pub session_id: String,
    pub instruction: String,
    pub return_command: bool,
    pub resolution_method: ResolutionMethod,
    pub node_id: Option<NodeId>,
    pub validation: ValidationRecord,
    pub nav_outcome: NavOutcome,
    pub timing: Timing,
    pub confirmation: ConfirmationRecord,
    pub extra: Extra,
    pub images: Images,
}

/// Session-level lifecycle event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub schema_version: String,
    pub timestamp: String,
    pub platform_id: String,
    pub session_id: String,
    pub version: String,
    /// MD5 hex of the digest file, or `"none"`.
    pub memory_digest_hash: String,
    pub model: String,
    pub architecture: String,
    pub policy_path: String,
    pub signature_counts: Value,
    pub policy: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum AuditRecord {
    SessionStart(SessionEvent),
    NavigatorStartup(SessionEvent),
    Shutdown(SessionEvent),
    Decision(AuditEntry),
}

impl AuditRecord {
    pub fn platform_id(&self) -> &str {
        match self {
            Self::SessionStart(e) | Self::NavigatorStartup(e) | Self::Shutdown(e) => &e.platform_id,
            Self::Decision(d) => &d.platform_id,
        }
    }

    pub fn as_decision(&self) -> Option<&AuditEntry> {
        match self {
            Self::Decision(d) => Some(d),
            _ => None,
        }
    }
}

/// Keys every record of a kind must carry, as JSON pointers.
fn required_keys(event: &str) -> Option<&'static [&'static str]> {
    const SESSION: &[&str] = &[
        "/schema_version",
        "/timestamp",
        "/platform_id",
        "/session_id",
        "/version",
        "/memory_digest_hash",
    ];
    const DECISION: &[&str] = &[
        "/schema_version",
        "/timestamp",
        "/platform_id",
        "/instruction",
        "/resolution_method",
        "/node_id",
        "/validation/allowed",
        "/validation/failed_check",
        "/nav_outcome",
        "/timing/resolve_ms",
        "/timing/vlm_ms",
        "/timing/nav_total_s",
        "/confirmation/confirmation_method",
        "/confirmation/confirmed",
        "/confirmation/payload",
        "/extra/xy_error_m",
        "/extra/distance_traveled_m",
        "/extra/start_pose",
        "/extra/end_pose",
        "/extra/m3_match_info",
        "/extra/yolo",
        "/extra/battery",
        "/images/start",
        "/images/finish",
    ];
    match event {
        "session_start" | "navigator_startup" | "shutdown" => Some(SESSION),
        "decision" => Some(DECISION),
        _ => None,
    }
}

/// Parses one line, checking the schema version and that no required key
/// is missing.
pub fn parse_audit_line(line: &str) -> Result<AuditRecord, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    let event = value
        .get("event")
        .and_then(Value::as_str)
        .ok_or("missing `event`")?;
    let keys = required_keys(event).ok_or_else(|| format!("unknown event `{event}`"))?;
    for key in keys {
        if value.pointer(key).is_none() {
            return Err(format!("missing field `{}`", &key[1..].replace('/', ".")));
        }
    }
    match value.get("schema_version").and_then(Value::as_str) {
        Some(SCHEMA_VERSION) => {}
        other => return Err(format!("unsupported schema_version {other:?}")),
    }
    let record: AuditRecord = serde_json::from_value(value).map_err(|e| e.to_string())?;
    if record.platform_id().trim().is_empty() {
        return Err("empty platform_id".into());
    }
    if let AuditRecord::Decision(d) = &record {
        let vlm = d.resolution_method == ResolutionMethod::L3bVlm;
        if !vlm && d.timing.vlm_ms != 0.0 {
            return Err("vlm_ms must be 0 for a deterministic decision".into());
        }
    }
    Ok(record)
}

/// Reads a whole audit file; the first bad line aborts with its number.
pub fn read_audit_file(path: &Path) -> Result<Vec<AuditRecord>, AuditError> {
    let file = File::open(path)?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_audit_line(&line).map_err(|message| AuditError::Schema {
            path: path.display().to_string(),
            line: i + 1,
            message,
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Append-only writer bound to one platform. Each record is written as one
/// line and flushed before `append` returns.
pub struct AuditSink<W: Write> {
    writer: W,
    platform_id: String,
    written: usize,
}

impl AuditSink<File> {
    pub fn open(path: &Path, platform_id: &str) -> Result<Self, AuditError> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self::new(file, platform_id))
    }
}

impl<W: Write> AuditSink<W> {
    pub fn new(writer: W, platform_id: &str) -> Self {
        Self {
            writer,
            platform_id: platform_id.to_owned(),
            written: 0,
        }
    }

    pub fn platform_id(&self) -> &str {
        &self.platform_id
    }

    pub fn written(&self) -> usize {
        self.written
    }

    pub fn append(&mut self, record: &AuditRecord) -> Result<(), AuditError> {
        if record.platform_id() != self.platform_id {
            return Err(AuditError::Schema {
                path: "<sink>".into(),
                line: self.written + 1,
                message: format!(
                    "record for platform `{}` offered to the `{}` sink",
                    record.platform_id(),
                    self.platform_id
                ),
            });
        }
        let mut line = serde_json::to_string(record)?;
        line.push('\n');
        self.writer.write_all(line.as_bytes())?;
        self.writer.flush()?;
        self.written += 1;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.writer
    }
}

pub fn append_audit_entry<W: Write>(sink: &mut AuditSink<W>, entry: &AuditEntry) -> Result<(), AuditError> {
    sink.append(&AuditRecord::Decision(entry.clone()))
}

/// Source of audit timestamps. The frozen variant advances one second per
/// reading so reruns are byte-identical.
#[derive(Debug)]
pub enum Clock {
    System,
    Frozen { base: DateTime<Utc>, ticks: AtomicU64 },
}

impl Clock {
    pub fn frozen() -> Self {
        Self::frozen_at(Utc.with_ymd_and_hms(2026, 4, 22, 9, 0, 0).unwrap())
    }

    pub fn frozen_at(base: DateTime<Utc>) -> Self {
        Self::Frozen {
            base,
            ticks: AtomicU64::new(0),
        }
    }

    pub fn is_frozen(&self) -> bool {
        matches!(self, Self::Frozen { .. })
    }

    pub fn now(&self) -> String {
        let t = match self {
            Self::System => Utc::now(),
            Self::Frozen { base, ticks } => {
                let n = ticks.fetch_add(1, Ordering::Relaxed);
                *base + Duration::seconds(n as i64)
            }
        };
        t.to_rfc3339_opts(SecondsFormat::Millis, true)
    }
}
