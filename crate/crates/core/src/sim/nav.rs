//! Seeded navigation-outcome model. Distributions are synthetic; only the
//! error means are anchored to observed field behaviour.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::executive::NavOutcome;
use crate::world::{NavNode, Pose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: f64,
    pub sd: f64,
}

impl Gaussian {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        Normal::new(self.mean, self.sd.max(0.0))
            .map(|n| n.sample(rng))
            .unwrap_or(self.mean)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NavParams {
    pub seed: u64,
    /// Keyed by scenario label.
    pub success_probability: BTreeMap<String, f64>,
    pub default_success_probability: f64,
    pub success_error_m: Gaussian,
    pub failure_error_m: Gaussian,
    /// Largest error a successful run may report.
    pub success_error_cap_m: f64,
    /// Smallest error a missed run may report.
    pub failure_error_floor_m: f64,
    pub speed_mps: f64,
    pub overhead_s: Gaussian,
}

impl Default for NavParams {
    fn default() -> Self {
        Self {
            seed: 0,
            success_probability: BTreeMap::new(),
            default_success_probability: 1.0,
            success_error_m: Gaussian { mean: 0.30, sd: 0.05 },
            failure_error_m: Gaussian { mean: 3.77, sd: 0.8 },
            success_error_cap_m: 1.0,
            failure_error_floor_m: 2.0,
            speed_mps: 0.35,
            overhead_s: Gaussian { mean: 4.0, sd: 0.5 },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavResult {
    pub end_pose: Pose,
    pub outcome: NavOutcome,
    pub nav_total_s: f64,
    pub distance_traveled_m: f64,
    pub xy_error_m: f64,
}

#[derive(Debug, Clone)]
pub struct NavOutcomeModel {
    params: NavParams,
    rng: ChaCha8Rng,
}

impl NavOutcomeModel {
    pub fn new(params: NavParams) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(params.seed);
        Self { params, rng }
    }

    pub fn params(&self) -> &NavParams {
        &self.params
    }

    pub fn success_probability(&self, scenario: Option<&str>) -> f64 {
        scenario
            .and_then(|s| self.params.success_probability.get(s))
            .copied()
            .unwrap_or(self.params.default_success_probability)
    }
}

/// Draws one navigation. Every call consumes the same number of draws so
/// outcome sequences depend only on the seed and mission order.
pub fn step_navigation(model: &mut NavOutcomeModel, start: &Pose, target: &NavNode, scenario: Option<&str>) -> NavResult {
    let p = model.success_probability(scenario);
    let params = model.params.clone();
    let rng = &mut model.rng;
    let u: f64 = rng.gen();
    let success_err = params.success_error_m.sample(rng).clamp(0.0, params.success_error_cap_m);
    let failure_err = params.failure_error_m.sample(rng).max(params.failure_error_floor_m);
    let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let overhead = params.overhead_s.sample(rng).max(0.0);

    let success = u < p;
    let (outcome, err) = if success {
        (NavOutcome::MissionComplete, success_err)
    } else {
        (NavOutcome::Missed, failure_err)
    };
    let end_pose = Pose::new(target.x + err * angle.cos(), target.y + err * angle.sin(), angle);
    let distance = start.position().distance(&end_pose.position());
    NavResult {
        end_pose,
        outcome,
        nav_total_s: overhead + distance / params.speed_mps.max(1e-6),
        distance_traveled_m: distance,
        xy_error_m: err,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node() -> NavNode {
        NavNode {
            id: 1,
            name: "n".into(),
            x: 10.0,
            y: 0.0,
        }
    }

    #[test]
    fn success_and_failure_errors_sit_near_their_means() {
        let mut ok = NavOutcomeModel::new(NavParams::default());
        let errs: Vec<f64> = (0..400)
            .map(|_| step_navigation(&mut ok, &Pose::default(), &node(), None).xy_error_m)
            .collect();
        let mean = errs.iter().sum::<f64>() / errs.len() as f64;
        assert!((mean - 0.30).abs() < 0.02, "{mean}");

        let mut bad = NavOutcomeModel::new(NavParams {
            default_success_probability: 0.0,
            ..NavParams::default()
        });
        let runs: Vec<NavResult> = (0..400)
            .map(|_| step_navigation(&mut bad, &Pose::default(), &node(), None))
            .collect();
        assert!(runs.iter().all(|r| r.outcome == NavOutcome::Missed));
        let mean = runs.iter().map(|r| r.xy_error_m).sum::<f64>() / runs.len() as f64;
        assert!((mean - 3.77).abs() < 0.15, "{mean}");
    }

    #[test]
    fn same_seed_same_sequence() {
        let params = NavParams {
            seed: 42,
            default_success_probability: 0.5,
            ..NavParams::default()
        };
        let run = |params: NavParams| {
            let mut m = NavOutcomeModel::new(params);
            (0..20)
                .map(|_| step_navigation(&mut m, &Pose::default(), &node(), None))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(params.clone()), run(params));
    }
}
