//! Deterministic closed-loop simulation: a point-mass vehicle follows the
//! online window at a fixed tick rate, obstacles move, and the improved
//! planner replaces the window when an obstacle blocks it.
//!
//! Each tick runs the same stages in order: obstacle cloud into the map,
//! estimator window update, replan decision, command.

mod follower;
mod log;
mod scenario;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use follower::{step_follower, step_follower_with, FollowerCommand, FollowerGains};
pub use log::{Mode, SimLog, SimSummary, TickRecord};
pub use scenario::{DynamicObstacle, Mav, Scenario};

use crate::config::ConfigError;
use crate::estimator::{build_target, needs_replan, EstimatorError, EstimatorState};
use crate::geometry::{polyline_length, Point3, Pose, Trajectory};
use crate::obstacle_map::{crop_sphere, MapConfig, ObstacleMap, PointCloud};
use crate::planners::{path_cost, plan_improved_rrtstar};
use crate::scene::{sphere_surface, SceneError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

/// Obstacle geometry of a scenario with the static surfaces sampled once.
#[derive(Debug, Clone)]
pub struct World {
    static_points: Vec<Point3>,
    dynamic: Vec<DynamicObstacle>,
}

impl World {
    pub fn new(scenario: &Scenario) -> Result<Self, SceneError> {
        let mut static_points = Vec::new();
        for o in &scenario.static_obstacles {
            static_points.extend(o.surface_points(scenario.point_spacing, &scenario.base_dir)?);
        }
        Ok(Self {
            static_points,
            dynamic: scenario.dynamic_obstacles.clone(),
        })
    }

    /// Static points followed by `points` surface samples per moving sphere.
    pub fn cloud_at(&self, t: f64) -> PointCloud {
        let mut points = self.static_points.clone();
        for d in &self.dynamic {
            points.extend(sphere_surface(d.center_at(t), d.radius, d.points));
        }
        PointCloud::new(points, t)
    }
}

/// Obstacle cloud of `scenario` at time `t`.
pub fn step_obstacles(scenario: &Scenario, t: f64) -> Result<PointCloud, SceneError> {
    Ok(World::new(scenario)?.cloud_at(t))
}

/// The window as flown from `pose`: every segment keeps `clearance`.
fn window_clear(pose: &Pose, window: &Trajectory, map: &ObstacleMap, clearance: f64) -> bool {
    let mut prev = pose.position;
    window.waypoints.iter().all(|w| {
        let ok = map.segment_collision_free(&prev, w, clearance);
        prev = *w;
        ok
    })
}

fn closest_distance(cloud: &PointCloud, p: &Point3) -> f64 {
    cloud
        .points
        .iter()
        .map(|q| q.distance_squared(p))
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// Plans from the current pose to the window end and swaps the window.
/// Window ends inside the clearance zone are pushed forward along the rest.
fn replan(
    est: &mut EstimatorState,
    map: &ObstacleMap,
    scenario: &Scenario,
    rng: &mut ChaCha8Rng,
) -> Result<(), String> {
    let cfg = &scenario.cfg;
    let zeta = cfg.obstacle_fail_safe_dis;
    while est.t_online.back().is_some_and(|g| !map.point_clear(g, zeta)) {
        if !est.extend_window() {
            break;
        }
    }
    let goal = *est.t_online.back().ok_or("empty window")?;
    let start = est.p_current.position;
    let mut guide = vec![start];
    guide.extend_from_slice(&est.t_online.waypoints);
    let res = plan_improved_rrtstar(start, goal, map, &Trajectory::new(guide), cfg, rng).map_err(|e| e.to_string())?;
    if !res.success {
        return Err(format!("no path after {} iterations", res.iterations));
    }
    let projected = if map.path_collision_free(&res.smoothed.waypoints, zeta) {
        res.smoothed
    } else {
        res.path
    };
    est.replace_online(projected, cfg.goal_tolerance).map_err(|e| e.to_string())
}

pub fn run_simulation(scenario: &Scenario) -> Result<SimLog, SimError> {
    scenario.validate().map_err(SimError::Invalid)?;
    let cfg = &scenario.cfg;
    let world = World::new(scenario)?;
    let target = build_target(&scenario.waypoints, cfg)?;
    let speed = scenario.mav.speed;
    let dt = 1.0 / scenario.tick_hz;
    let duration = scenario
        .duration_s
        .unwrap_or_else(|| 2.0 * target.total_length() / speed);
    let last_tick = (duration * scenario.tick_hz).floor() as usize;

    let mut pose = scenario.start_pose();
    let mut est = EstimatorState::from_config(&target, pose, cfg);
    let mut map = ObstacleMap::new(MapConfig {
        resolution: scenario.map_resolution,
        capacity: 1,
        ..MapConfig::default()
    });
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.rng_seed);

    let mut records = Vec::with_capacity(last_tick + 1);
    let mut replans = 0;
    let mut failures = 0;
    let mut failed_total = 0;
    let mut latencies = Vec::new();
    let mut hover_ticks = 0usize;
    let mut final_mode = Mode::Following;

    for k in 0..=last_tick {
        let time = k as f64 / scenario.tick_hz;
        let truth = world.cloud_at(time);
        map.insert_cloud(&crop_sphere(&truth, pose.position, scenario.sensor_range));
        let min_obstacle_dis = closest_distance(&truth, &pose.position);

        est.p_current = pose;
        est.consume_reached();
        est.refill_online();

        let record = |mode: Mode, cmd: &FollowerCommand, replans: usize| TickRecord {
            time,
            pose,
            velocity: cmd.velocity,
            yaw_rate: cmd.yaw_rate,
            mode,
            replans,
            min_obstacle_dis,
        };

        if est.is_finished() {
            final_mode = Mode::Done;
            records.push(record(Mode::Done, &FollowerCommand::hover(pose), replans));
            break;
        }

        let hover = FollowerCommand::hover(pose);
        if hover_ticks > 0 {
            hover_ticks -= 1;
            records.push(record(Mode::HoveringReplan, &hover, replans));
            continue;
        }

        let zeta = cfg.obstacle_fail_safe_dis;
        if needs_replan(&pose, &map, cfg.obs_avoid_dis) && !window_clear(&pose, &est.t_online, &map, zeta) {
            let clock = Instant::now();
            let outcome = replan(&mut est, &map, scenario, &mut rng);
            let elapsed = clock.elapsed().as_secs_f64();
            latencies.push(elapsed * 1e3);
            match outcome {
                Ok(()) => {
                    replans += 1;
                    failures = 0;
                    if scenario.inject_latency {
                        // The planning tick itself is one of them.
                        hover_ticks = ((elapsed * scenario.tick_hz).ceil() as usize).saturating_sub(1);
                    }
                }
                Err(e) => {
                    failures += 1;
                    failed_total += 1;
                    ::log::debug!("t={time:.3}: replan failed ({e})");
                    if failures > scenario.max_replan_failures {
                        final_mode = Mode::Stuck;
                        records.push(record(Mode::Stuck, &hover, replans));
                        break;
                    }
                }
            }
            records.push(record(Mode::HoveringReplan, &hover, replans));
            continue;
        }

        let cmd = step_follower_with(&pose, &est.t_online, speed, dt, &scenario.mav.gains);
        records.push(record(Mode::Following, &cmd, replans));
        pose = cmd.pose;
    }

    let flown: Vec<Point3> = records.iter().map(|r| r.pose.position).collect();
    let min_obstacle_dis = records
        .iter()
        .map(|r| r.min_obstacle_dis)
        .fold(f64::INFINITY, f64::min);
    let completed = final_mode == Mode::Done;
    let summary = SimSummary {
        scenario: scenario.name.clone(),
        completed,
        final_mode,
        ticks: records.len(),
        sim_time_s: records.last().map_or(0.0, |r| r.time),
        replans,
        replan_failures: failed_total,
        min_obstacle_dis: min_obstacle_dis.is_finite().then_some(min_obstacle_dis),
        path_cost: (flown.len() >= 2).then(|| path_cost(&Trajectory::new(flown.clone()), &target).value),
        flown_length: polyline_length(&flown),
        planner_latency_ms: latencies,
    };
    Ok(SimLog { records, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight() -> Scenario {
        Scenario::new(vec![Point3::new(0.0, 0.0, 2.0), Point3::new(6.0, 0.0, 2.0)])
    }

    #[test]
    fn obstacle_free_run_completes() {
        let log = run_simulation(&straight()).unwrap();
        let s = &log.summary;
        assert!(s.completed, "{s:?}");
        assert_eq!(s.replans, 0);
        assert!(s.min_obstacle_dis.is_none());
        assert!(log.records.iter().all(|r| r.mode != Mode::HoveringReplan));
        let end = log.records.last().unwrap().pose.position;
        assert!(end.distance(&Point3::new(6.0, 0.0, 2.0)) < 0.3);
    }

    #[test]
    fn times_advance_by_one_tick() {
        let log = run_simulation(&straight()).unwrap();
        for (k, r) in log.records.iter().enumerate() {
            assert_eq!(r.time, k as f64 / 15.0);
        }
    }

    #[test]
    fn moving_sphere_cloud() {
        let mut s = straight();
        s.dynamic_obstacles.push(DynamicObstacle {
            center: Point3::new(3.0, 3.0, 2.0),
            velocity: Point3::new(1.0, 0.0, 0.0),
            radius: 0.5,
            points: 64,
        });
        let c0 = step_obstacles(&s, 0.0).unwrap();
        let c2 = step_obstacles(&s, 2.0).unwrap();
        assert_eq!(c0.len(), 64);
        assert_eq!(c2.len(), 64);
        for (a, b) in c0.points.iter().zip(&c2.points) {
            assert!((*b - *a).distance(&Point3::new(2.0, 0.0, 0.0)) < 1e-12);
        }
    }

    #[test]
    fn blocked_goal_gets_stuck() {
        let mut s = straight();
        s.static_obstacles.push(crate::scene::Obstacle::Sphere {
            center: Point3::new(6.0, 0.0, 2.0),
            radius: 0.3,
        });
        s.duration_s = Some(30.0);
        let log = run_simulation(&s).unwrap();
        assert!(!log.summary.completed);
        assert_eq!(log.summary.final_mode, Mode::Stuck);
        assert_eq!(log.summary.replan_failures, s.max_replan_failures + 1);
    }
}
