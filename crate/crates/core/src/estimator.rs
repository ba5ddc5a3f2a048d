//! Trajectory estimator: builds the target trajectory from sparse waypoints
//! and maintains the online window / rest split as the vehicle advances.

use thiserror::Error;

use crate::bspline::smooth_trajectory;
use crate::config::PlannerConfig;
use crate::geometry::{Point3, Pose, Trajectory};
use crate::obstacle_map::ObstacleMap;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("need at least 2 waypoints, got {0}")]
    TooFewWaypoints(usize),
    #[error("non-finite waypoint at index {0}")]
    NonFinite(usize),
    #[error("projected trajectory is empty")]
    EmptyProjection,
    #[error("online window is empty; nothing to replace")]
    EmptyWindow,
    #[error("projected start is {0:.3} m from the current pose (tolerance {1})")]
    StartMismatch(f64, f64),
    #[error("projected end is {0:.3} m from the window end (tolerance {1})")]
    EndMismatch(f64, f64),
}

/// Inserts intermediate points between `p1` and `p2` so no gap exceeds
/// `obs_avoid_dis`. Each step places a point at distance `obs_avoid_dis`
/// from the previous one along the spherical direction toward `p2`.
pub fn densify(p1: Point3, p2: Point3, obs_avoid_dis: f64) -> Vec<Point3> {
    let mut out = vec![p1];
    let mut last = p1;
    // Loop bound guards against pathological inputs (dis tiny vs. span).
    let max_steps = (p1.distance(&p2) / obs_avoid_dis).ceil() as usize + 1;
    for _ in 0..max_steps {
        let p = p2 - last;
        if p.norm() <= obs_avoid_dis + 1e-9 {
            break;
        }
        let theta = p.y.atan2(p.x);
        let phi = (p.x * p.x + p.y * p.y).sqrt().atan2(p.z);
        let inter = Point3::new(
            obs_avoid_dis * phi.sin() * theta.cos() + last.x,
            obs_avoid_dis * phi.sin() * theta.sin() + last.y,
            obs_avoid_dis * phi.cos() + last.z,
        );
        out.push(inter);
        last = inter;
    }
    out.push(p2);
    out
}

/// Densifies every consecutive pair of `waypoints` (no duplicated joints).
pub fn densify_all(waypoints: &[Point3], obs_avoid_dis: f64) -> Vec<Point3> {
    let mut out: Vec<Point3> = Vec::new();
    for w in waypoints.windows(2) {
        let seg = densify(w[0], w[1], obs_avoid_dis);
        let skip = usize::from(!out.is_empty());
        out.extend_from_slice(&seg[skip..]);
    }
    out
}

/// Densified and smoothed target trajectory.
pub fn build_target(waypoints: &[Point3], cfg: &PlannerConfig) -> Result<Trajectory, EstimatorError> {
    if waypoints.len() < 2 {
        return Err(EstimatorError::TooFewWaypoints(waypoints.len()));
    }
    if let Some(i) = waypoints.iter().position(|p| !p.is_finite()) {
        return Err(EstimatorError::NonFinite(i));
    }
    let dense = densify_all(waypoints, cfg.obs_avoid_dis);
    Ok(smooth_trajectory(&Trajectory::new(dense), cfg.samples_per_segment))
}

/// Splits into the online window (prefix up to and including the first
/// waypoint whose cumulative length reaches `replanning_dis`) and the rest.
pub fn split_target(t_target: &Trajectory, replanning_dis: f64) -> (Trajectory, Trajectory) {
    let pts = &t_target.waypoints;
    let mut acc = 0.0;
    let mut cut = pts.len();
    for i in 1..pts.len() {
        acc += pts[i - 1].distance(&pts[i]);
        if acc >= replanning_dis {
            cut = i + 1;
            break;
        }
    }
    (
        Trajectory::new(pts[..cut].to_vec()),
        Trajectory::new(pts[cut..].to_vec()),
    )
}

/// Sliding-window state of the estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub t_online: Trajectory,
    pub t_rest: Trajectory,
    pub p_current: Pose,
    pub replanning_dis: f64,
    pub delta: f64,
}

impl EstimatorState {
    pub fn new(t_target: &Trajectory, p_current: Pose, replanning_dis: f64, delta: f64) -> Self {
        let (t_online, t_rest) = split_target(t_target, replanning_dis);
        Self {
            t_online,
            t_rest,
            p_current,
            replanning_dis,
            delta,
        }
    }

    pub fn from_config(t_target: &Trajectory, p_current: Pose, cfg: &PlannerConfig) -> Self {
        Self::new(t_target, p_current, cfg.replanning_dis, cfg.waypoint_reached_delta)
    }

    pub fn is_finished(&self) -> bool {
        self.t_online.is_empty() && self.t_rest.is_empty()
    }

    /// Moves waypoints from the rest into the window until its length reaches
    /// `replanning_dis` or the rest is exhausted.
    pub fn refill_online(&mut self) {
        while self.t_online.total_length() < self.replanning_dis {
            match self.t_rest.pop_front() {
                Some(p) => self.t_online.push(p),
                None => break,
            }
        }
    }

    /// Drops leading waypoints closer than `delta` to the current position.
    /// Returns how many were removed.
    pub fn consume_reached(&mut self) -> usize {
        let pos = self.p_current.position;
        let mut n = 0;
        while let Some(front) = self.t_online.front() {
            if pos.distance(front) < self.delta {
                self.t_online.pop_front();
                n += 1;
            } else {
                break;
            }
        }
        n
    }

    /// Moves one waypoint from the rest to the end of the window.
    pub fn extend_window(&mut self) -> bool {
        match self.t_rest.pop_front() {
            Some(p) => {
                self.t_online.push(p);
                true
            }
            None => false,
        }
    }

    /// Swaps the window for a replanned one whose endpoints match the current
    /// position and the window end within `goal_tolerance`.
    pub fn replace_online(&mut self, t_projected: Trajectory, goal_tolerance: f64) -> Result<(), EstimatorError> {
        let end = *self.t_online.back().ok_or(EstimatorError::EmptyWindow)?;
        let (first, last) = match (t_projected.front(), t_projected.back()) {
            (Some(f), Some(l)) => (*f, *l),
            _ => return Err(EstimatorError::EmptyProjection),
        };
        let ds = first.distance(&self.p_current.position);
        if ds > goal_tolerance {
            return Err(EstimatorError::StartMismatch(ds, goal_tolerance));
        }
        let de = last.distance(&end);
        if de > goal_tolerance {
            return Err(EstimatorError::EndMismatch(de, goal_tolerance));
        }
        self.t_online = t_projected;
        Ok(())
    }
}

/// True iff some obstacle lies strictly closer than `obs_avoid_dis`.
pub fn needs_replan(p_current: &Pose, map: &ObstacleMap, obs_avoid_dis: f64) -> bool {
    map.nearest_obstacle(&p_current.position)
        .is_some_and(|(_, d)| d < obs_avoid_dis)
}
