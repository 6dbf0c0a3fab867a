use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use super::bridge::{
    serve_context_bridge, shared_state, BridgeHandle, ContextSource, HttpContext, InProcessContext, SharedState, SimState,
};
use super::nav::{step_navigation, NavOutcomeModel};
use super::navigator::Navigator;
use super::script::{Mission, ScenarioScript};
use crate::error::SimError;
use crate::executive::{
    append_audit_entry, build_affordance_manifest, confirm_arrival, validate_action, AuditEntry, AuditRecord,
    AuditSink, Clock, ConfirmationOutcome, Extra, Images, NavOutcome, ProposedAction, SessionEvent, Timing,
    Validation, ValidationRecord, ACTION_FOLLOW_PATH, SCHEMA_VERSION,
};
use crate::memory::{load_digest, LoadedDigest};
use crate::resolver::ResolutionMethod;
use crate::vlm::{OracleBackend, OracleScript, SharedBackend};
use crate::world::{NodeId, Policy, Pose, World};

pub const NAVIGATOR_VERSION: &str = concat!("semnav-", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone)]
pub struct SessionOptions {
    pub out_dir: PathBuf,
    pub frozen_clock: bool,
    /// Serve context over a local HTTP bridge even if the profile has no
    /// bind address.
    pub force_bridge: bool,
    /// Replaces the script's digest reference when set.
    pub digest_override: Option<Option<PathBuf>>,
    /// Label recorded in startup events.
    pub policy_path: String,
}

impl SessionOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            frozen_clock: false,
            force_bridge: false,
            digest_override: None,
            policy_path: "policy.yaml".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissionResult {
    pub index: usize,
    pub instruction: String,
    pub scenario: Option<String>,
    pub return_command: bool,
    pub expected_node: Option<NodeId>,
    pub expected_method: Option<ResolutionMethod>,
    pub node_id: Option<NodeId>,
    pub method: ResolutionMethod,
    pub correct: Option<bool>,
    pub method_matches: Option<bool>,
    pub nav_outcome: NavOutcome,
    pub confirmed: bool,
}

#[derive(Debug, Clone)]
pub struct SessionArtifacts {
    pub session_id: String,
    pub platform_id: String,
    pub audit_path: PathBuf,
    pub monitor_path: PathBuf,
    pub startup: SessionEvent,
    pub entries: Vec<AuditEntry>,
    pub missions: Vec<MissionResult>,
}

impl SessionArtifacts {
    pub fn digest_hash(&self) -> &str {
        &self.startup.memory_digest_hash
    }

    /// Missions excluding return commands.
    pub fn scenario_missions(&self) -> impl Iterator<Item = &MissionResult> {
        self.missions.iter().filter(|m| !m.return_command)
    }

    pub fn method_counts(&self) -> BTreeMap<ResolutionMethod, usize> {
        let mut out = BTreeMap::new();
        for m in self.scenario_missions() {
            *out.entry(m.method).or_default() += 1;
        }
        out
    }

    pub fn all_correct(&self) -> bool {
        self.missions.iter().all(|m| m.correct != Some(false))
    }
}

/// Builds the scripted oracle a scenario refers to, if any.
pub fn backend_for_script(script: &ScenarioScript) -> Result<Option<Arc<SharedBackend>>, SimError> {
    let Some(path) = &script.oracle else { return Ok(None) };
    let oracle = OracleScript::load(path).map_err(|e| SimError::Script {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(Some(SharedBackend::new(OracleBackend::new(oracle))))
}

pub fn audit_file_name(script: &ScenarioScript) -> String {
    format!("{}_{}.jsonl", script.session_id, script.platform.platform_id)
}

/// Replays one script end to end and writes its audit log and monitor CSV.
pub fn run_session(
    script: &ScenarioScript,
    world: Arc<World>,
    policy: Arc<Policy>,
    backend: Option<Arc<SharedBackend>>,
    options: &SessionOptions,
) -> Result<SessionArtifacts, SimError> {
    script.validate().map_err(|message| SimError::Script {
        path: script.session_id.clone(),
        message,
    })?;
    let digest_path = match &options.digest_override {
        Some(p) => p.clone(),
        None => script.digest.clone(),
    };
    let digest: LoadedDigest = load_digest(digest_path.as_deref());
    let platform = &script.platform.platform_id;
    let clock = if options.frozen_clock { Clock::frozen() } else { Clock::System };

    std::fs::create_dir_all(&options.out_dir)?;
    let audit_path = options.out_dir.join(audit_file_name(script));
    let monitor_path = options
        .out_dir
        .join(format!("{}_{}_monitor.csv", script.session_id, platform));
    // A replay always starts from a fresh log.
    if audit_path.exists() {
        std::fs::remove_file(&audit_path)?;
    }
    let mut sink = AuditSink::open(&audit_path, platform)?;

    let model = backend.as_ref().map_or_else(|| "none".to_owned(), |b| b.model_name());
    let event = |clock: &Clock| SessionEvent {
        schema_version: SCHEMA_VERSION.into(),
        timestamp: clock.now(),
        platform_id: platform.clone(),
        session_id: script.session_id.clone(),
        version: NAVIGATOR_VERSION.into(),
        memory_digest_hash: digest.hash.clone(),
        model: model.clone(),
        architecture: script.platform.architecture.clone(),
        policy_path: options.policy_path.clone(),
        signature_counts: serde_json::to_value(world.signature_counts()).unwrap_or(Value::Null),
        policy: serde_json::to_value(&*policy).unwrap_or(Value::Null),
    };
    sink.append(&AuditRecord::SessionStart(event(&clock)))?;
    let startup = event(&clock);
    sink.append(&AuditRecord::NavigatorStartup(startup.clone()))?;
    tracing::info!(
        session = %script.session_id,
        platform = %platform,
        digest = %digest.hash,
        "navigator started"
    );

    let navigator = Navigator::new(Arc::clone(&world), Arc::clone(&policy), backend.clone(), digest.clone());
    let bridge_addr = script
        .platform
        .bridge
        .clone()
        .or_else(|| options.force_bridge.then(|| "127.0.0.1:0".to_owned()));
    let mut sim = SimPlatform::new(
        navigator,
        &script.session_id,
        platform,
        SimState {
            pose: script.start_pose,
            detections: script.detections.clone(),
        },
        NavOutcomeModel::new(script.nav.clone()),
        bridge_addr.as_deref(),
    )?;

    let mut entries = Vec::new();
    let mut missions = Vec::new();
    for mission in script.expanded() {
        let (entry, result) = sim.execute(&mission, &clock)?;
        append_audit_entry(&mut sink, &entry)?;
        entries.push(entry);
        missions.push(result);
    }
    drop(sim);

    sink.append(&AuditRecord::Shutdown(event(&clock)))?;
    write_monitor_csv(&monitor_path, &missions)?;

    Ok(SessionArtifacts {
        session_id: script.session_id.clone(),
        platform_id: platform.clone(),
        audit_path,
        monitor_path,
        startup,
        entries,
        missions,
    })
}

/// One simulated robot with its reasoning stack: context access (in-process
/// or through a bridge), navigation model and mission counter.
pub struct SimPlatform {
    navigator: Navigator,
    state: SharedState,
    ctx: Box<dyn ContextSource>,
    bridge: Option<BridgeHandle>,
    nav: NavOutcomeModel,
    session_id: String,
    platform_id: String,
    next_index: usize,
}

impl SimPlatform {
    pub fn new(
        navigator: Navigator,
        session_id: &str,
        platform_id: &str,
        initial: SimState,
        nav: NavOutcomeModel,
        bridge_addr: Option<&str>,
    ) -> Result<Self, SimError> {
        let state = shared_state(initial);
        let bridge = match bridge_addr {
            Some(addr) => Some(serve_context_bridge(addr, Arc::clone(navigator.world()), Arc::clone(&state))?),
            None => None,
        };
        let ctx: Box<dyn ContextSource> = match &bridge {
            Some(b) => Box::new(HttpContext::new(&b.url())),
            None => Box::new(InProcessContext::new(Arc::clone(&state))),
        };
        Ok(Self {
            navigator,
            state,
            ctx,
            bridge,
            nav,
            session_id: session_id.to_owned(),
            platform_id: platform_id.to_owned(),
            next_index: 0,
        })
    }

    pub fn navigator(&self) -> &Navigator {
        &self.navigator
    }

    pub fn bridge_url(&self) -> Option<String> {
        self.bridge.as_ref().map(BridgeHandle::url)
    }

    pub fn pose(&self) -> Pose {
        self.state.read().unwrap_or_else(|e| e.into_inner()).pose
    }

    pub fn set_pose(&self, pose: Pose) {
        self.state.write().unwrap_or_else(|e| e.into_inner()).pose = pose;
    }

    /// Resolve, validate, navigate, confirm. The caller logs the entry.
    pub fn execute(&mut self, mission: &Mission, clock: &Clock) -> Result<(AuditEntry, MissionResult), SimError> {
        if let Some(p) = mission.start_pose {
            self.set_pose(p);
        }
        let index = self.next_index;
        self.next_index += 1;
        let out = run_mission(
            index,
            mission,
            &self.navigator,
            self.ctx.as_ref(),
            &mut self.nav,
            &self.session_id,
            &self.platform_id,
            clock,
        )?;
        self.set_pose(out.0.extra.end_pose);
        Ok(out)
    }
}

#[allow(clippy::too_many_arguments)]
fn run_mission(
    index: usize,
    mission: &Mission,
    navigator: &Navigator,
    ctx: &dyn ContextSource,
    nav: &mut NavOutcomeModel,
    session_id: &str,
    platform: &str,
    clock: &Clock,
) -> Result<(AuditEntry, MissionResult), SimError> {
    let world = navigator.world();
    let policy = navigator.policy();
    let decision = navigator.decide(&mission.instruction, ctx)?;
    let start_pose = decision.observation.pose;
    let escalated = decision.method == ResolutionMethod::L3bVlm;
    let image_stem = format!("images/{session_id}/{platform}_{index:03}");

    let manifest = build_affordance_manifest(world, &decision.objects, policy);
    let (validation, action) = match decision.node_id {
        Some(node) => {
            let action = ProposedAction::toward(ACTION_FOLLOW_PATH, node, &start_pose, &manifest);
            (validate_action(&action, &manifest, policy), action)
        }
        // No target at all: nothing to dispatch, reported as an unknown node.
        None => (
            Validation::Blocked(2),
            ProposedAction {
                action: ACTION_FOLLOW_PATH.into(),
                target_node: -1,
                goal_distance: f64::INFINITY,
            },
        ),
    };

    let mut anomalies = decision.anomalies.clone();
    let (end_pose, outcome, nav_total_s, distance, xy_error, confirmation) = if validation.is_allowed() {
        let target = world.node(action.target_node).expect("validated target exists");
        let run = step_navigation(nav, &start_pose, target, mission.scenario.as_deref());
        let frame = super::bridge::placeholder_frame(&run.end_pose);
        let confirmation = confirm_arrival(
            world,
            action.target_node,
            &run.end_pose,
            policy,
            navigator.backend().map(|b| b.as_ref()),
            Some(frame),
        );
        (
            run.end_pose,
            run.outcome,
            run.nav_total_s,
            run.distance_traveled_m,
            Some(run.xy_error_m),
            confirmation,
        )
    } else {
        anomalies.push(format!("blocked_check_{}", validation.failed_check().unwrap_or(0)));
        (start_pose, NavOutcome::Missed, 0.0, 0.0, None, ConfirmationOutcome::skipped())
    };
    if let Some(a) = &confirmation.anomaly {
        anomalies.push(a.clone());
    }
    let dispatched = validation.is_allowed();

    let entry = AuditEntry {
        schema_version: SCHEMA_VERSION.into(),
        timestamp: clock.now(),
        platform_id: platform.to_owned(),
        session_id: session_id.to_owned(),
        instruction: mission.instruction.clone(),
        return_command: mission.return_command,
        resolution_method: decision.method,
        node_id: decision.node_id,
        validation: ValidationRecord {
            action: action.action.clone(),
            allowed: dispatched,
            failed_check: validation.failed_check(),
        },
        nav_outcome: outcome,
        timing: Timing {
            resolve_ms: decision.resolve_ms,
            vlm_ms: decision.vlm_ms,
            nav_total_s,
        },
        confirmation: confirmation.record.clone(),
        extra: Extra {
            xy_error_m: xy_error,
            distance_traveled_m: distance,
            start_pose,
            end_pose,
            m3_match_info: decision.resolution.as_ref().and_then(|r| r.m3_match.clone()),
            yolo: json!({
                "synthetic": true,
                "static_count": decision.observation.static_count,
                "dynamic_count": decision.observation.dynamic_count,
            }),
            battery: json!({"synthetic": true, "percent": (100.0 - 0.2 * index as f64).max(0.0)}),
            scenario: mission.scenario.clone(),
            expected_node: mission.expected_node,
            escalation_reason: decision.escalation_reason.clone(),
            vlm_reason: decision.vlm.as_ref().map(|v| v.reason.clone()),
            anomalies,
        },
        images: Images {
            start: escalated.then(|| format!("{image_stem}_start.jpg")),
            finish: dispatched.then(|| format!("{image_stem}_finish.jpg")),
        },
    };
    let result = MissionResult {
        index,
        instruction: mission.instruction.clone(),
        scenario: mission.scenario.clone(),
        return_command: mission.return_command,
        expected_node: mission.expected_node,
        expected_method: mission.expected_method,
        node_id: decision.node_id,
        method: decision.method,
        correct: mission.expected_node.map(|n| decision.node_id == Some(n)),
        method_matches: mission.expected_method.map(|m| m == decision.method),
        nav_outcome: outcome,
        confirmed: confirmation.record.confirmed,
    };
    Ok((entry, result))
}

pub const MONITOR_COLUMNS: [&str; 8] = [
    "scenario",
    "decisions",
    "l3a_m3_preference",
    "l3a_deterministic",
    "l3b_vlm",
    "correct",
    "nav_complete",
    "confirmed",
];

/// One row per scenario label in first-seen order; return commands share
/// the `return` row.
pub fn write_monitor_csv(path: &Path, missions: &[MissionResult]) -> Result<(), SimError> {
    let mut rows: Vec<(String, [usize; 7])> = Vec::new();
    for m in missions {
        let label = if m.return_command {
            "return".to_owned()
        } else {
            m.scenario.clone().unwrap_or_else(|| "unlabeled".to_owned())
        };
        let pos = match rows.iter().position(|(l, _)| *l == label) {
            Some(p) => p,
            None => {
                rows.push((label, [0; 7]));
                rows.len() - 1
            }
        };
        let c = &mut rows[pos].1;
        c[0] += 1;
        match m.method {
            ResolutionMethod::L3aM3Preference => c[1] += 1,
            ResolutionMethod::L3aDeterministic => c[2] += 1,
            ResolutionMethod::L3bVlm => c[3] += 1,
        }
        c[4] += (m.correct == Some(true)) as usize;
        c[5] += m.nav_outcome.is_complete() as usize;
        c[6] += m.confirmed as usize;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| SimError::Io(e.into()))?;
    let csv_err = |e: csv::Error| SimError::Io(e.into());
    w.write_record(MONITOR_COLUMNS).map_err(csv_err)?;
    for (label, c) in rows {
        let mut record = vec![label];
        record.extend(c.iter().map(usize::to_string));
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
