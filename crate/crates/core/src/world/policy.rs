use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::PolicyError;

/// Safety and memory thresholds loaded from `policy.yaml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Policy {
    pub allowed_actions: BTreeSet<String>,
    pub max_goal_distance: f64,
    pub confirmation_radius: f64,
    pub jaccard_threshold: f64,
    pub promotion: PromotionPolicy,
    pub m2: M2Policy,
    pub digest_char_limit: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromotionPolicy {
    pub min_frequency: u32,
    pub min_consistency: f64,
    pub min_l3b_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct M2Policy {
    pub cluster_jaccard: f64,
    pub min_observations: usize,
    pub min_confidence: f64,
}

impl Default for Policy {
    fn default() -> Self {
        Self {
            allowed_actions: ["ComputeRoute", "FollowPath", "NavigateToPose", "Spin"]
                .into_iter()
                .map(str::to_owned)
                .collect(),
            max_goal_distance: 50.0,
            confirmation_radius: 1.5,
            jaccard_threshold: 0.6,
            promotion: PromotionPolicy::default(),
            m2: M2Policy::default(),
            digest_char_limit: 2000,
        }
    }
}

impl Default for PromotionPolicy {
    fn default() -> Self {
        Self {
            min_frequency: 3,
            min_consistency: 0.80,
            min_l3b_count: 1,
        }
    }
}

impl Default for M2Policy {
    fn default() -> Self {
        Self {
            cluster_jaccard: 0.5,
            min_observations: 3,
            min_confidence: 0.6,
        }
    }
}

fn unit(name: &str, v: f64) -> Result<(), PolicyError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(PolicyError::OutOfRange(format!("{name} = {v} is outside [0, 1]")))
    }
}

impl Policy {
    pub fn load(path: &Path) -> Result<Self, PolicyError> {
        let text = std::fs::read_to_string(path).map_err(|source| PolicyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_yaml(&text)
    }

    pub fn from_yaml(text: &str) -> Result<Self, PolicyError> {
        let policy: Policy = serde_yaml::from_str(text).map_err(|e| PolicyError::Parse(e.to_string()))?;
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.allowed_actions.is_empty() {
            return Err(PolicyError::OutOfRange("allowed_actions is empty".into()));
        }
        if !(self.max_goal_distance > 0.0) {
            return Err(PolicyError::OutOfRange("max_goal_distance must be positive".into()));
        }
        if !(self.confirmation_radius > 0.0) {
            return Err(PolicyError::OutOfRange("confirmation_radius must be positive".into()));
        }
        unit("jaccard_threshold", self.jaccard_threshold)?;
        unit("promotion.min_consistency", self.promotion.min_consistency)?;
        unit("m2.cluster_jaccard", self.m2.cluster_jaccard)?;
        unit("m2.min_confidence", self.m2.min_confidence)?;
        if self.digest_char_limit == 0 {
            return Err(PolicyError::OutOfRange("digest_char_limit must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_yaml_yields_defaults() {
        let p = Policy::from_yaml("{}").unwrap();
        assert_eq!(p, Policy::default());
        assert_eq!(p.allowed_actions.len(), 4);
        assert_eq!(p.max_goal_distance, 50.0);
        assert_eq!(p.confirmation_radius, 1.5);
        assert_eq!(p.jaccard_threshold, 0.6);
        assert_eq!(p.digest_char_limit, 2000);
    }

    #[test]
    fn partial_override() {
        let p = Policy::from_yaml("max_goal_distance: 20\npromotion:\n  min_frequency: 5\n").unwrap();
        assert_eq!(p.max_goal_distance, 20.0);
        assert_eq!(p.promotion.min_frequency, 5);
        assert_eq!(p.promotion.min_consistency, 0.80);
    }

    #[test]
    fn rejects_out_of_range_threshold() {
        assert!(Policy::from_yaml("jaccard_threshold: 1.5").is_err());
        assert!(Policy::from_yaml("allowed_actions: []").is_err());
    }
}
