use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{compile_digest, extract_from_records, load_digest, Digest, DIGEST_FILE};
use crate::error::MemoryError;
use crate::executive::read_audit_file;
use crate::world::{Policy, World};

#[derive(Debug, Clone, Default)]
pub struct RefreshOptions {
    pub platforms: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RefreshReport {
    pub files_validated: Vec<PathBuf>,
    pub decisions: usize,
    pub backup: Option<PathBuf>,
    pub old_md5: Option<String>,
    pub new_md5: String,
    pub diff: Vec<String>,
    pub trimmed: bool,
}

impl RefreshReport {
    pub fn changed(&self) -> bool {
        !self.diff.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "validated {} log file(s), {} decision(s)", self.files_validated.len(), self.decisions);
        if let Some(b) = &self.backup {
            let _ = writeln!(out, "backup: {}", b.display());
        }
        if self.diff.is_empty() {
            out.push_str("no diff\n");
        } else {
            for line in &self.diff {
                let _ = writeln!(out, "{line}");
            }
        }
        let _ = writeln!(out, "MD5: {}", self.new_md5);
        out
    }
}

/// Structural old-vs-new comparison, one line per changed item.
pub fn diff_digests(old: Option<&Digest>, new: &Digest) -> Vec<String> {
    let empty = Digest::default();
    let old = old.unwrap_or(&empty);
    let mut out = Vec::new();

    let promos = |d: &Digest| -> BTreeMap<String, String> {
        d.l3a_promotions_ready
            .iter()
            .map(|p| (p.key.clone(), format!("node {} (frequency {})", p.node_id, p.frequency)))
            .collect()
    };
    diff_maps("promotion", &promos(old), &promos(new), &mut out);

    let entities = |d: &Digest| -> BTreeMap<String, String> {
        d.top_entities
            .iter()
            .map(|e| (e.id.clone(), format!("visits {} success {}", e.visits, e.success_rate)))
            .collect()
    };
    diff_maps("entity", &entities(old), &entities(new), &mut out);

    let patterns = |d: &Digest| -> BTreeMap<String, String> {
        d.top_patterns
            .iter()
            .map(|p| (format!("node {}: {}", p.node_id, p.description), format!("count {} confidence {}", p.count, p.confidence)))
            .collect()
    };
    diff_maps("pattern", &patterns(old), &patterns(new), &mut out);

    if old.global_stats != new.global_stats {
        out.push(format!(
            "~ global_stats: tasks {} -> {}, success {} -> {}",
            old.global_stats.task_count, new.global_stats.task_count, old.global_stats.success_rate, new.global_stats.success_rate
        ));
    }
    out
}

fn diff_maps(kind: &str, old: &BTreeMap<String, String>, new: &BTreeMap<String, String>, out: &mut Vec<String>) {
    for (k, v) in new {
        match old.get(k) {
            None => out.push(format!("+ {kind} {k}: {v}")),
            Some(o) if o != v => out.push(format!("~ {kind} {k}: {o} -> {v}")),
            _ => {}
        }
    }
    for (k, v) in old {
        if !new.contains_key(k) {
            out.push(format!("- {kind} {k}: {v}"));
        }
    }
}

fn log_files(dir: &Path) -> Result<Vec<PathBuf>, MemoryError> {
    let io = |source| MemoryError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    Ok(files)
}

/// Validate, back up, extract, diff, hash. Nothing in `memory_dir` is
/// touched unless every log validates.
pub fn refresh_workflow(
    logs_dir: &Path,
    memory_dir: &Path,
    world: Option<&World>,
    policy: &Policy,
    options: &RefreshOptions,
) -> Result<RefreshReport, MemoryError> {
    let files = log_files(logs_dir)?;
    let mut records = Vec::new();
    for f in &files {
        records.extend(read_audit_file(f)?);
    }

    let digest_path = memory_dir.join(DIGEST_FILE);
    let old = load_digest(digest_path.exists().then_some(digest_path.as_path()));
    let backup = if digest_path.exists() {
        let b = memory_dir.join("digest.json.bak");
        std::fs::copy(&digest_path, &b).map_err(|source| MemoryError::Io {
            path: b.display().to_string(),
            source,
        })?;
        Some(b)
    } else {
        None
    };

    let store = extract_from_records(&records, &options.platforms, world, policy);
    let compiled = compile_digest(&store, policy);
    store.write_to(memory_dir, &compiled)?;

    Ok(RefreshReport {
        files_validated: files,
        decisions: store.m5.len(),
        backup,
        old_md5: (old.hash != "none").then_some(old.hash),
        diff: diff_digests(old.digest.as_ref(), &compiled.digest),
        new_md5: compiled.md5,
        trimmed: compiled.trimmed,
    })
}
