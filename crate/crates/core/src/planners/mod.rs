//! Path planners (improved RRT*, baseline RRT*, grid A*) and the path cost metric.

mod astar;
mod cost;
mod graph;
mod rrt_star;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use astar::{plan_astar_grid, VoxelGrid};
pub use cost::{
    path_cost, path_cost_with, path_energy, u_path, u_path_gradient, PathCost, SecondDifferenceMatrix,
    DEFAULT_COST_SAMPLES,
};
pub use graph::{PlanGraph, Vertex};
pub use rrt_star::{
    nearest_with_clearance, plan_baseline_rrtstar, plan_improved_rrtstar, steer, NearestChoice,
};

use crate::config::ConfigError;
use crate::geometry::Trajectory;
use crate::sampler::SamplerError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("start is within clearance of an obstacle")]
    StartInCollision,
    #[error("goal is within clearance of an obstacle")]
    GoalInCollision,
    #[error("start or goal lies outside the search bounds")]
    OutOfBounds,
    #[error("no grid path between start and goal")]
    NoPath,
    #[error("voxel size must be > 0 (got {0})")]
    BadVoxel(f64),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Astar,
    Rrtstar,
    Improved,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Astar, Algorithm::Rrtstar, Algorithm::Improved];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Astar => "astar",
            Algorithm::Rrtstar => "rrtstar",
            Algorithm::Improved => "improved",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "astar" => Ok(Algorithm::Astar),
            "rrtstar" => Ok(Algorithm::Rrtstar),
            "improved" => Ok(Algorithm::Improved),
            other => Err(format!("unknown algorithm '{other}'")),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanStats {
    /// Tree size for RRT*, expanded voxels for A*.
    pub vertices: usize,
    /// Times the clearance-aware nearest search fell back to the classical nearest vertex.
    pub nearest_fallbacks: usize,
    /// Iterations whose free-space sample came back empty.
    pub sample_shortfalls: usize,
    /// Grid path length for A*, meters.
    pub grid_cost: Option<f64>,
    /// Cost-to-come of the goal vertex for RRT*.
    pub tree_cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub path: Trajectory,
    pub smoothed: Trajectory,
    pub iterations: usize,
    pub elapsed_s: f64,
    /// Energy ratio of the smoothed path against the reference trajectory.
    pub cost: f64,
    pub success: bool,
    pub stats: PlanStats,
}

impl PlanResult {
    /// Equality on everything except wall-clock time.
    pub fn same_outcome(&self, o: &PlanResult) -> bool {
        self.path == o.path
            && self.smoothed == o.smoothed
            && self.iterations == o.iterations
            && self.cost.to_bits() == o.cost.to_bits()
            && self.success == o.success
            && self.stats == o.stats
    }
}
