use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{0} must be finite and > 0 (got {1})")]
    NotPositive(&'static str, f64),
    #[error("obstacle_fail_safe_dis ({0}) must be smaller than obs_avoid_dis ({1})")]
    ClearanceTooLarge(f64, f64),
    #[error("max_iterations must be at least 1")]
    NoIterations,
    #[error("nearest_samples and nearest_attempts must be at least 1")]
    EmptyNearestSearch,
}

/// Tuning knobs shared by the estimator, the planners and the simulator.
///
/// Every field has a default so partial JSON overrides deserialize cleanly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Length of the active trajectory window, meters.
    pub replanning_dis: f64,
    /// Radius of the obstacle avoidance zone around the vehicle, meters.
    pub obs_avoid_dis: f64,
    /// Clearance every planned waypoint keeps from the nearest obstacle, meters.
    pub obstacle_fail_safe_dis: f64,
    /// Conjugate diameter of the sampling ellipsoid, meters.
    pub conjugate_diameter: f64,
    pub max_iterations: usize,
    /// Steer distance, meters.
    pub step_size: f64,
    /// Rewiring radius, meters.
    pub neighbor_radius: f64,
    pub goal_tolerance: f64,
    /// A waypoint counts as reached once the vehicle is closer than this.
    pub waypoint_reached_delta: f64,
    pub rng_seed: u64,
    /// Candidates drawn per attempt when choosing a clearance-aware nearest point.
    pub nearest_samples: usize,
    pub nearest_attempts: usize,
    /// Initial radius of the sphere around the trajectory waypoint; doubled per attempt.
    pub nearest_radius: f64,
    /// Rejection-sampling budget per requested sample.
    pub sample_retries: usize,
    /// Keep iterating to `max_iterations` after the first solution and return the best one.
    pub refine_to_budget: bool,
    pub samples_per_segment: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            replanning_dis: 5.0,
            obs_avoid_dis: 5.0,
            obstacle_fail_safe_dis: 0.5,
            conjugate_diameter: 4.0,
            max_iterations: 5000,
            step_size: 1.0,
            neighbor_radius: 1.0,
            goal_tolerance: 0.3,
            waypoint_reached_delta: 0.2,
            rng_seed: 0,
            nearest_samples: 10,
            nearest_attempts: 2,
            nearest_radius: 4.0,
            sample_retries: 50,
            refine_to_budget: false,
            samples_per_segment: 10,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("replanning_dis", self.replanning_dis),
            ("obs_avoid_dis", self.obs_avoid_dis),
            ("obstacle_fail_safe_dis", self.obstacle_fail_safe_dis),
            ("conjugate_diameter", self.conjugate_diameter),
            ("step_size", self.step_size),
            ("neighbor_radius", self.neighbor_radius),
            ("goal_tolerance", self.goal_tolerance),
            ("waypoint_reached_delta", self.waypoint_reached_delta),
            ("nearest_radius", self.nearest_radius),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::NotPositive(name, v));
            }
        }
        if self.obstacle_fail_safe_dis >= self.obs_avoid_dis {
            return Err(ConfigError::ClearanceTooLarge(
                self.obstacle_fail_safe_dis,
                self.obs_avoid_dis,
            ));
        }
        if self.max_iterations == 0 {
            return Err(ConfigError::NoIterations);
        }
        if self.nearest_samples == 0 || self.nearest_attempts == 0 {
            return Err(ConfigError::EmptyNearestSearch);
        }
        Ok(())
    }

    /// Applies a JSON object of overrides on top of `self`.
    pub fn merged_with(&self, overrides: &serde_json::Value) -> Result<Self, serde_json::Error> {
        let mut base = serde_json::to_value(self)?;
        if let (Some(b), Some(o)) = (base.as_object_mut(), overrides.as_object()) {
            for (k, v) in o {
                b.insert(k.clone(), v.clone());
            }
        }
        serde_json::from_value(base)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        PlannerConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = PlannerConfig { step_size: 0.0, ..Default::default() };
        assert!(matches!(c.validate(), Err(ConfigError::NotPositive("step_size", _))));
        c = PlannerConfig { obstacle_fail_safe_dis: 6.0, ..Default::default() };
        assert!(matches!(c.validate(), Err(ConfigError::ClearanceTooLarge(..))));
        c = PlannerConfig { max_iterations: 0, ..Default::default() };
        assert_eq!(c.validate(), Err(ConfigError::NoIterations));
    }

    #[test]
    fn partial_override() {
        let o = serde_json::json!({ "step_size": 0.25, "rng_seed": 9 });
        let c = PlannerConfig::default().merged_with(&o).unwrap();
        assert_eq!(c.step_size, 0.25);
        assert_eq!(c.rng_seed, 9);
        assert_eq!(c.obs_avoid_dis, 5.0);
        let bad = serde_json::json!({ "not_a_field": 1 });
        assert!(PlannerConfig::default().merged_with(&bad).is_err());
    }
}
