//! Scenario files for the closed-loop simulator.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::PlannerConfig;
use crate::geometry::{Point3, Pose};
use crate::scene::{Obstacle, SceneError};

use super::follower::FollowerGains;

/// Sphere moving at constant velocity, seen as `points` surface samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicObstacle {
    /// Center at t = 0.
    pub center: Point3,
    /// m/s.
    pub velocity: Point3,
    pub radius: f64,
    #[serde(default = "default_density")]
    pub points: usize,
}

impl DynamicObstacle {
    pub fn center_at(&self, t: f64) -> Point3 {
        self.center + self.velocity * t
    }
}

fn default_density() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Mav {
    /// Cruise speed, m/s.
    pub speed: f64,
    /// Defaults to the first waypoint facing +x.
    pub start: Option<Pose>,
    pub gains: FollowerGains,
}

impl Default for Mav {
    fn default() -> Self {
        Self {
            speed: 1.0,
            start: None,
            gains: FollowerGains::default(),
        }
    }
}

fn default_tick_hz() -> f64 {
    15.0
}

fn default_spacing() -> f64 {
    0.2
}

fn default_sensor_range() -> f64 {
    10.0
}

fn default_map_resolution() -> f64 {
    0.1
}

fn default_failures() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    /// Sparse desired waypoints; densified and smoothed into the target.
    pub waypoints: Vec<Point3>,
    #[serde(default)]
    pub static_obstacles: Vec<Obstacle>,
    #[serde(default)]
    pub dynamic_obstacles: Vec<DynamicObstacle>,
    #[serde(default)]
    pub mav: Mav,
    #[serde(default)]
    pub cfg: PlannerConfig,
    #[serde(default = "default_tick_hz")]
    pub tick_hz: f64,
    /// Simulated time budget; defaults to twice the target length over the speed.
    #[serde(default)]
    pub duration_s: Option<f64>,
    #[serde(default)]
    pub rng_seed: u64,
    /// Surface sampling distance for static spheres and boxes, meters.
    #[serde(default = "default_spacing")]
    pub point_spacing: f64,
    /// Obstacles farther than this from the vehicle are not fed to the map.
    #[serde(default = "default_sensor_range")]
    pub sensor_range: f64,
    #[serde(default = "default_map_resolution")]
    pub map_resolution: f64,
    /// Consecutive failed replans tolerated before the run is declared stuck.
    #[serde(default = "default_failures")]
    pub max_replan_failures: usize,
    /// Hover for the measured planner time instead of assuming it fits in one tick.
    /// Makes the log depend on wall-clock timing.
    #[serde(default)]
    pub inject_latency: bool,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Scenario {
    /// Scenario with defaults for everything but the waypoints.
    pub fn new(waypoints: Vec<Point3>) -> Self {
        Self {
            name: String::new(),
            waypoints,
            static_obstacles: Vec::new(),
            dynamic_obstacles: Vec::new(),
            mav: Mav::default(),
            cfg: PlannerConfig::default(),
            tick_hz: default_tick_hz(),
            duration_s: None,
            rng_seed: 0,
            point_spacing: default_spacing(),
            sensor_range: default_sensor_range(),
            map_resolution: default_map_resolution(),
            max_replan_failures: default_failures(),
            inject_latency: false,
            base_dir: PathBuf::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, SceneError> {
        let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut s: Scenario = serde_json::from_str(&text).map_err(|source| SceneError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        s.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        s.validate().map_err(SceneError::Invalid)?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(format!("{name} must be finite and > 0 (got {v})"))
            }
        };
        if self.waypoints.len() < 2 {
            return Err(format!("need at least 2 waypoints, got {}", self.waypoints.len()));
        }
        if self.waypoints.iter().any(|p| !p.is_finite()) {
            return Err("waypoints must be finite".into());
        }
        positive("tick_hz", self.tick_hz)?;
        positive("mav.speed", self.mav.speed)?;
        positive("mav.gains.k_yaw", self.mav.gains.k_yaw)?;
        positive("mav.gains.max_yaw_rate", self.mav.gains.max_yaw_rate)?;
        positive("point_spacing", self.point_spacing)?;
        positive("sensor_range", self.sensor_range)?;
        positive("map_resolution", self.map_resolution)?;
        if let Some(d) = self.duration_s {
            positive("duration_s", d)?;
        }
        for (i, d) in self.dynamic_obstacles.iter().enumerate() {
            positive(&format!("dynamic_obstacles[{i}].radius"), d.radius)?;
            if !(d.center.is_finite() && d.velocity.is_finite()) {
                return Err(format!("dynamic_obstacles[{i}] must have finite center and velocity"));
            }
            if d.points == 0 {
                return Err(format!("dynamic_obstacles[{i}].points must be >= 1"));
            }
        }
        self.static_obstacles.iter().try_for_each(Obstacle::validate)?;
        self.cfg.validate().map_err(|e| e.to_string())
    }

    pub fn start_pose(&self) -> Pose {
        self.mav.start.unwrap_or_else(|| Pose::at(self.waypoints[0]))
    }
}
