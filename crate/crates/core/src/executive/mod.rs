//! The action contract: manifest, observation, validation, audit log and
//! post-arrival confirmation.

mod audit;
mod confirm;
mod contract;

pub use audit::{
    append_audit_entry, parse_audit_line, read_audit_file, AuditEntry, AuditRecord, AuditSink, Clock,
    ConfirmationRecord, Extra, Images, NavOutcome, SessionEvent, Timing, ValidationRecord, SCHEMA_VERSION,
};
pub use confirm::{confirm_arrival, confirmation_route, ConfirmationOutcome, METHOD_POSE_BASED, METHOD_SKIPPED};
pub use contract::{
    build_affordance_manifest, normalize_observation, validate_action, AffordanceManifest, Observation,
    ProposedAction, Validation, ACTION_COMPUTE_ROUTE, ACTION_FOLLOW_PATH, ACTION_NAVIGATE_TO_POSE, ACTION_SPIN,
};
