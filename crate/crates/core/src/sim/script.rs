//! Scenario scripts: which platform runs which missions against which
//! oracle and digest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::nav::NavParams;
use crate::error::SimError;
use crate::resolver::ResolutionMethod;
use crate::world::{DetectedObject, NodeId, Pose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformProfile {
    pub platform_id: String,
    #[serde(default = "default_architecture")]
    pub architecture: String,
    /// Bridge bind address; `None` keeps context access in-process.
    #[serde(default)]
    pub bridge: Option<String>,
}

fn default_architecture() -> String {
    "single-board".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mission {
    pub instruction: String,
    #[serde(default)]
    pub scenario: Option<String>,
    #[serde(default)]
    pub expected_node: Option<NodeId>,
    #[serde(default)]
    pub expected_method: Option<ResolutionMethod>,
    #[serde(default)]
    pub return_command: bool,
    /// Teleports the robot before the mission; otherwise it starts where
    /// the previous mission ended.
    #[serde(default)]
    pub start_pose: Option<Pose>,
    /// Expands into this many identical missions.
    #[serde(default = "one")]
    pub repeat: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioScript {
    pub session_id: String,
    pub platform: PlatformProfile,
    /// Oracle script, relative to the scenario file.
    #[serde(default)]
    pub oracle: Option<PathBuf>,
    /// Digest, relative to the scenario file; absent means no memory.
    #[serde(default)]
    pub digest: Option<PathBuf>,
    #[serde(default)]
    pub start_pose: Pose,
    #[serde(default)]
    pub nav: NavParams,
    #[serde(default)]
    pub detections: Vec<DetectedObject>,
    #[serde(default)]
    pub concurrent: bool,
    #[serde(default)]
    pub notes: Option<String>,
    pub missions: Vec<Mission>,
}

impl ScenarioScript {
    /// Parses a script and resolves its relative paths against the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self, SimError> {
        let err = |message: String| SimError::Script {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let mut script: ScenarioScript = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        script.oracle = script.oracle.map(|p| base.join(p));
        script.digest = script.digest.map(|p| base.join(p));
        script.validate().map_err(err)?;
        Ok(script)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.platform.platform_id.trim().is_empty() {
            return Err("platform_id must not be empty".into());
        }
        if self.session_id.trim().is_empty() {
            return Err("session_id must not be empty".into());
        }
        if let Some(i) = self.missions.iter().position(|m| m.instruction.trim().is_empty()) {
            return Err(format!("mission {i} has an empty instruction"));
        }
        Ok(())
    }

    /// Missions with `repeat` expanded.
    pub fn expanded(&self) -> Vec<Mission> {
        self.missions
            .iter()
            .flat_map(|m| std::iter::repeat(m).take(m.repeat))
            .map(|m| Mission { repeat: 1, ..m.clone() })
            .collect()
    }
}
