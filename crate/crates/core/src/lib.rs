//! Local replanning for a multirotor: B-spline smoothing, a sliding-window
//! trajectory estimator, an R-tree obstacle map, ellipsoid sampling, RRT*
//! and A* planners, and a deterministic closed-loop simulator.

pub mod bench;
pub mod bspline;
pub mod config;
pub mod estimator;
pub mod exec;
pub mod geometry;
pub mod obstacle_map;
pub mod planners;
pub mod sampler;
pub mod scene;
pub mod sim;

pub use config::PlannerConfig;
pub use geometry::{Aabb, Point3, Pose, Trajectory};
pub use obstacle_map::{MapConfig, ObstacleMap, PointCloud};
