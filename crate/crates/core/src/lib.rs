//! Hybrid deterministic/VLM instruction resolution for semantic robot
//! navigation, with offline semantic memory, a multi-platform simulator and
//! an analytics toolkit.

pub mod analytics;
pub mod error;
pub mod executive;
pub mod memory;
pub mod resolver;
pub mod sim;
pub mod vlm;
pub mod world;
