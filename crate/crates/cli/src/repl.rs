use std::io::{BufRead, Write};
use std::sync::Arc;

use serde_json::{json, Value};

use semnav_core::executive::{append_audit_entry, AuditRecord, AuditSink, Clock, SessionEvent, SCHEMA_VERSION};
use semnav_core::memory::{load_digest, LoadedDigest};
use semnav_core::sim::{Mission, NavOutcomeModel, NavParams, Navigator, SimPlatform, SimState, NAVIGATOR_VERSION};
use semnav_core::world::Pose;

use crate::commands::Out;
use crate::{Classify, CmdResult, Config};

const HELP: &str = "\
instructions are dispatched through the full pipeline
  :pose x,y[,yaw]     teleport the robot
  :return <text>      run <text> as a return command
  :where              print the current pose
  :quit               leave";

pub fn run(cfg: &Config, out: &Out, pose: Option<Pose>, bridge: bool) -> CmdResult {
    let env = cfg.load_env()?;
    let backend = cfg.backend()?;
    let digest: LoadedDigest = if cfg.no_digest {
        LoadedDigest::absent()
    } else {
        load_digest(cfg.digest.as_deref())
    };
    let platform = cfg.platform_id.clone().unwrap_or_else(|| "sim-platform".into());
    let session_id = "repl";
    let clock = if cfg.frozen_clock { Clock::frozen() } else { Clock::System };

    std::fs::create_dir_all(&cfg.out_dir).runtime()?;
    let audit_path = cfg.out_dir.join(format!("{session_id}_{platform}.jsonl"));
    let mut sink = AuditSink::open(&audit_path, &platform).runtime()?;
    let model = backend.as_ref().map_or_else(|| "none".to_owned(), |b| b.model_name());
    let event = |clock: &Clock| SessionEvent {
        schema_version: SCHEMA_VERSION.into(),
        timestamp: clock.now(),
        platform_id: platform.clone(),
        session_id: session_id.into(),
        version: NAVIGATOR_VERSION.into(),
        memory_digest_hash: digest.hash.clone(),
        model: model.clone(),
        architecture: "single-board".into(),
        policy_path: env.policy_path.display().to_string(),
        signature_counts: serde_json::to_value(env.world.signature_counts()).unwrap_or(Value::Null),
        policy: serde_json::to_value(&*env.policy).unwrap_or(Value::Null),
    };
    sink.append(&AuditRecord::SessionStart(event(&clock))).runtime()?;
    sink.append(&AuditRecord::NavigatorStartup(event(&clock))).runtime()?;

    let navigator = Navigator::new(Arc::clone(&env.world), Arc::clone(&env.policy), backend, digest.clone());
    let nav = NavParams {
        seed: cfg.seed.unwrap_or(0),
        ..NavParams::default()
    };
    let mut sim = SimPlatform::new(
        navigator,
        session_id,
        &platform,
        SimState {
            pose: pose.unwrap_or_default(),
            detections: Vec::new(),
        },
        NavOutcomeModel::new(nav),
        bridge.then_some("127.0.0.1:0"),
    )
    .runtime()?;

    out.text(format!(
        "platform {platform}, digest {}, audit {}{}\n:help for commands",
        digest.hash,
        audit_path.display(),
        sim.bridge_url().map_or(String::new(), |u| format!(", bridge {u}"))
    ));

    let stdin = std::io::stdin();
    let mut line = String::new();
    loop {
        if out_is_text(cfg) {
            print!("> ");
            let _ = std::io::stdout().flush();
        }
        line.clear();
        if stdin.lock().read_line(&mut line).runtime()? == 0 {
            break;
        }
        let input = line.trim();
        if input.is_empty() {
            continue;
        }
        let (instruction, return_command) = match input.split_once(' ') {
            _ if input == ":quit" || input == ":q" => break,
            _ if input == ":help" => {
                out.text(HELP);
                continue;
            }
            _ if input == ":where" => {
                let p = sim.pose();
                out.emit(format!("pose {:.2},{:.2},{:.2}", p.x, p.y, p.yaw), json!({"pose": p}));
                continue;
            }
            Some((":pose", rest)) => {
                match crate::parse_pose(rest) {
                    Ok(p) => sim.set_pose(p),
                    Err(e) => eprintln!("bad pose: {e}"),
                }
                continue;
            }
            Some((":return", rest)) => (rest.trim().to_owned(), true),
            _ if input.starts_with(':') => {
                eprintln!("unknown command; :help lists them");
                continue;
            }
            _ => (input.to_owned(), false),
        };
        let mission = Mission {
            instruction,
            scenario: None,
            expected_node: None,
            expected_method: None,
            return_command,
            start_pose: None,
            repeat: 1,
        };
        let (entry, result) = sim.execute(&mission, &clock).runtime()?;
        append_audit_entry(&mut sink, &entry).runtime()?;
        let timing = if entry.timing.vlm_ms > 0.0 {
            format!("{:.0} ms model", entry.timing.vlm_ms)
        } else {
            format!("{:.3} ms", entry.timing.resolve_ms)
        };
        out.emit(
            format!(
                "#{} {} -> node {} | {} | {} | confirmed {} | {}{}",
                result.index,
                entry.resolution_method,
                entry.node_id.map_or("-".into(), |n| n.to_string()),
                if entry.validation.allowed {
                    "allowed".to_owned()
                } else {
                    format!("blocked by check {}", entry.validation.failed_check.unwrap_or(0))
                },
                serde_json::to_value(entry.nav_outcome)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_owned))
                    .unwrap_or_default(),
                entry.confirmation.confirmed,
                timing,
                if entry.extra.anomalies.is_empty() {
                    String::new()
                } else {
                    format!(" | anomalies: {}", entry.extra.anomalies.join(", "))
                }
            ),
            serde_json::to_value(&entry).runtime()?,
        );
    }
    drop(sim);
    sink.append(&AuditRecord::Shutdown(event(&clock))).runtime()?;
    Ok(())
}

fn out_is_text(cfg: &Config) -> bool {
    cfg.format == crate::Format::Text
}
