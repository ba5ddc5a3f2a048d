//! RRT* with pluggable sampling and nearest-vertex strategies.
//!
//! The improved variant samples inside the start/goal ellipsoid and picks
//! `x_nearest` with a clearance-aware search around the desired trajectory;
//! the baseline samples the whole scene box and uses the classical nearest
//! vertex. Everything else (steer, parent choice, rewiring, termination) is
//! shared.

use std::time::Instant;

use rand::Rng;

use super::graph::PlanGraph;
use super::{path_cost, PlanError, PlanResult, PlanStats};
use crate::bspline::smooth_trajectory;
use crate::config::PlannerConfig;
use crate::geometry::{Aabb, Point3, Trajectory};
use crate::obstacle_map::ObstacleMap;
use crate::sampler::{build_region, sample_free, EllipsoidRegion};

/// Moves from `from` toward `to` by at most `step`.
pub fn steer(from: &Point3, to: &Point3, step: f64) -> Point3 {
    let d = from.distance(to);
    if d <= step {
        *to
    } else {
        from.lerp(to, step / d)
    }
}

/// Outcome of the `x_nearest` selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NearestChoice {
    /// A fresh point sampled around the desired trajectory.
    Sampled(Point3),
    /// The classical nearest graph vertex.
    Vertex(usize, Point3),
}

impl NearestChoice {
    pub fn point(&self) -> Point3 {
        match *self {
            NearestChoice::Sampled(p) | NearestChoice::Vertex(_, p) => p,
        }
    }

    pub fn is_fallback(&self) -> bool {
        matches!(self, NearestChoice::Vertex(..))
    }
}

fn classical(graph: &PlanGraph, x_rand: &Point3) -> NearestChoice {
    let i = graph.nearest(x_rand);
    NearestChoice::Vertex(i, graph.point(i))
}

/// Clearance-aware `x_nearest`.
///
/// Finds the obstacle closest to `x_rand`, then the trajectory waypoint
/// closest to that obstacle, and draws `nearest_samples` points from a ball
/// of radius `nearest_radius` around the waypoint. The first sample farther
/// than the clearance from that obstacle and clear of every other obstacle
/// wins. The radius doubles on each of `nearest_attempts` attempts; when all
/// fail (or the map or trajectory is empty) the classical nearest vertex is
/// returned.
pub fn nearest_with_clearance<R: Rng + ?Sized>(
    graph: &PlanGraph,
    x_rand: &Point3,
    traj: &Trajectory,
    map: &ObstacleMap,
    cfg: &PlannerConfig,
    rng: &mut R,
) -> NearestChoice {
    let Some((obstacle, _)) = map.nearest_obstacle(x_rand) else {
        return classical(graph, x_rand);
    };
    let Some(anchor) = traj
        .waypoints
        .iter()
        .min_by(|a, b| a.distance_squared(&obstacle).total_cmp(&b.distance_squared(&obstacle)))
    else {
        return classical(graph, x_rand);
    };
    let zeta = cfg.obstacle_fail_safe_dis;
    let mut radius = cfg.nearest_radius;
    for _ in 0..cfg.nearest_attempts {
        let ball = EllipsoidRegion::ball(*anchor, radius);
        for _ in 0..cfg.nearest_samples {
            let p = ball.sample(rng);
            if p.distance(&obstacle) > zeta && map.point_clear(&p, zeta) {
                return NearestChoice::Sampled(p);
            }
        }
        radius *= 2.0;
    }
    classical(graph, x_rand)
}

trait Guidance {
    fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R, map: &ObstacleMap) -> Option<Point3>;
    fn nearest<R: Rng + ?Sized>(&mut self, graph: &PlanGraph, x_rand: &Point3, rng: &mut R, map: &ObstacleMap)
        -> NearestChoice;
}

struct Improved<'a> {
    region: EllipsoidRegion,
    traj: &'a Trajectory,
    cfg: &'a PlannerConfig,
}

impl Guidance for Improved<'_> {
    fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R, map: &ObstacleMap) -> Option<Point3> {
        let batch = sample_free(
            &self.region,
            1,
            rng,
            map,
            self.cfg.obstacle_fail_safe_dis,
            self.cfg.sample_retries,
        );
        batch.points.first().copied()
    }

    fn nearest<R: Rng + ?Sized>(&mut self, graph: &PlanGraph, x_rand: &Point3, rng: &mut R, map: &ObstacleMap)
        -> NearestChoice {
        nearest_with_clearance(graph, x_rand, self.traj, map, self.cfg, rng)
    }
}

struct Uniform<'a> {
    bounds: Aabb,
    cfg: &'a PlannerConfig,
}

impl Guidance for Uniform<'_> {
    fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R, map: &ObstacleMap) -> Option<Point3> {
        let (lo, hi) = (self.bounds.min, self.bounds.max);
        for _ in 0..self.cfg.sample_retries.max(1) {
            let p = Point3::new(
                lo.x + rng.random::<f64>() * (hi.x - lo.x),
                lo.y + rng.random::<f64>() * (hi.y - lo.y),
                lo.z + rng.random::<f64>() * (hi.z - lo.z),
            );
            if map.point_clear(&p, self.cfg.obstacle_fail_safe_dis) {
                return Some(p);
            }
        }
        None
    }

    fn nearest<R: Rng + ?Sized>(&mut self, graph: &PlanGraph, x_rand: &Point3, _: &mut R, _: &ObstacleMap)
        -> NearestChoice {
        classical(graph, x_rand)
    }
}

fn check_endpoints(start: &Point3, goal: &Point3, map: &ObstacleMap, cfg: &PlannerConfig) -> Result<(), PlanError> {
    cfg.validate()?;
    if !map.point_clear(start, cfg.obstacle_fail_safe_dis) {
        return Err(PlanError::StartInCollision);
    }
    if !map.point_clear(goal, cfg.obstacle_fail_safe_dis) {
        return Err(PlanError::GoalInCollision);
    }
    Ok(())
}

/// Improved RRT*: ellipsoid sampling plus clearance-aware `x_nearest`.
///
/// `traj` is the desired trajectory the search stays close to. Returns the
/// first feasible path unless `refine_to_budget` is set.
pub fn plan_improved_rrtstar<R: Rng + ?Sized>(
    start: Point3,
    goal: Point3,
    map: &ObstacleMap,
    traj: &Trajectory,
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Result<PlanResult, PlanError> {
    let clock = Instant::now();
    check_endpoints(&start, &goal, map, cfg)?;
    let region = build_region(start, goal, cfg.conjugate_diameter)?;
    let mut guide = Improved { region, traj, cfg };
    Ok(run(start, goal, map, cfg, &mut guide, rng, traj, clock))
}

/// Classical RRT* sampling uniformly over `bounds` with the nearest-vertex rule.
/// The path cost is measured against the straight start→goal segment.
pub fn plan_baseline_rrtstar<R: Rng + ?Sized>(
    start: Point3,
    goal: Point3,
    map: &ObstacleMap,
    bounds: &Aabb,
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Result<PlanResult, PlanError> {
    let clock = Instant::now();
    check_endpoints(&start, &goal, map, cfg)?;
    if !bounds.contains(&start) || !bounds.contains(&goal) {
        return Err(PlanError::OutOfBounds);
    }
    let mut guide = Uniform { bounds: *bounds, cfg };
    let reference = Trajectory::new(vec![start, goal]);
    Ok(run(start, goal, map, cfg, &mut guide, rng, &reference, clock))
}

#[allow(clippy::too_many_arguments)]
fn run<G: Guidance, R: Rng + ?Sized>(
    start: Point3,
    goal: Point3,
    map: &ObstacleMap,
    cfg: &PlannerConfig,
    guide: &mut G,
    rng: &mut R,
    reference: &Trajectory,
    clock: Instant,
) -> PlanResult {
    let zeta = cfg.obstacle_fail_safe_dis;
    let mut graph = PlanGraph::new(start, cfg.neighbor_radius);
    let mut stats = PlanStats::default();
    let mut goal_vertex: Option<usize> = None;
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        iterations += 1;
        let Some(x_rand) = guide.sample(rng, map) else {
            stats.sample_shortfalls += 1;
            continue;
        };
        let choice = guide.nearest(&graph, &x_rand, rng, map);
        if choice.is_fallback() {
            stats.nearest_fallbacks += 1;
        }
        let from = choice.point();
        let x_new = steer(&from, &x_rand, cfg.step_size);
        if from.distance(&x_new) < 1e-9 || !map.segment_collision_free(&from, &x_new, zeta) {
            continue;
        }

        let mut near = graph.near(&x_new, cfg.neighbor_radius);
        let closest = match choice {
            NearestChoice::Vertex(i, _) => Some(i),
            NearestChoice::Sampled(_) if near.is_empty() => Some(graph.nearest(&x_new)),
            NearestChoice::Sampled(_) => None,
        };
        if let Some(c) = closest.filter(|c| !near.contains(c)) {
            near.push(c);
        }
        let mut order: Vec<(f64, usize)> = near
            .iter()
            .map(|&v| (graph.cost(v) + graph.point(v).distance(&x_new), v))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let Some(&(_, parent)) = order
            .iter()
            .find(|(_, v)| map.segment_collision_free(&graph.point(*v), &x_new, zeta))
        else {
            continue;
        };
        let idx = graph.add(x_new, parent);

        for &v in &near {
            if v == parent || v == 0 {
                continue;
            }
            let through = graph.cost(idx) + graph.point(idx).distance(&graph.point(v));
            if through + 1e-12 < graph.cost(v)
                && !graph.is_ancestor(v, idx)
                && map.segment_collision_free(&graph.point(idx), &graph.point(v), zeta)
            {
                graph.rewire(v, idx);
            }
        }

        if goal_vertex.is_none()
            && x_new.distance(&goal) <= cfg.step_size
            && map.segment_collision_free(&x_new, &goal, zeta)
        {
            goal_vertex = Some(if x_new.distance(&goal) <= 1e-12 { idx } else { graph.add(goal, idx) });
            if !cfg.refine_to_budget {
                break;
            }
        }
    }

    stats.vertices = graph.len();
    let (path, success) = match goal_vertex {
        Some(g) => {
            stats.tree_cost = Some(graph.cost(g));
            (Trajectory::new(graph.path_to(g)), true)
        }
        None => {
            log::debug!("no path after {iterations} iterations ({} vertices)", graph.len());
            (Trajectory::new(Vec::new()), false)
        }
    };
    finish(path, success, iterations, stats, reference, cfg, clock)
}

pub(super) fn finish(
    path: Trajectory,
    success: bool,
    iterations: usize,
    stats: PlanStats,
    reference: &Trajectory,
    cfg: &PlannerConfig,
    clock: Instant,
) -> PlanResult {
    let smoothed = smooth_trajectory(&path, cfg.samples_per_segment);
    let cost = if success && !reference.is_empty() {
        path_cost(&smoothed, reference).value
    } else {
        f64::NAN
    };
    PlanResult {
        path,
        smoothed,
        iterations,
        elapsed_s: clock.elapsed().as_secs_f64(),
        cost,
        success,
        stats,
    }
}
