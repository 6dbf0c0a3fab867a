//! Simulated platforms: navigation outcomes, the context bridge, the
//! navigator loop and scenario replay.

mod bridge;
mod concurrent;
mod nav;
mod navigator;
mod script;
mod session;

pub use bridge::{
    bridge_response, placeholder_frame, serve_context_bridge, shared_state, BridgeHandle, ContextSource,
    HttpContext, InProcessContext, SharedState, SimState,
};
pub use concurrent::{check_integrity, compare_runs, masked_entries, run_concurrent, ConcurrentRun, IntegrityReport};
pub use nav::{step_navigation, Gaussian, NavOutcomeModel, NavParams, NavResult};
pub use navigator::{Decision, Navigator};
pub use script::{Mission, PlatformProfile, ScenarioScript};
pub use session::{
    audit_file_name, backend_for_script, run_session, write_monitor_csv, MissionResult, SessionArtifacts, SimPlatform,
    SessionOptions, MONITOR_COLUMNS, NAVIGATOR_VERSION,
};
