//! 26-connected A* over a voxelization of the obstacle map.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::rrt_star::finish;
use super::{PlanError, PlanResult, PlanStats};
use crate::config::PlannerConfig;
use crate::geometry::{Aabb, Point3, Trajectory};
use crate::obstacle_map::ObstacleMap;

/// Dense occupancy grid over `bounds`. A voxel is blocked when its center is
/// closer than the clearance to some obstacle point.
#[derive(Debug, Clone)]
pub struct VoxelGrid {
    pub origin: Point3,
    pub voxel: f64,
    pub dims: [usize; 3],
    blocked: Vec<bool>,
}

impl VoxelGrid {
    pub fn build(map: &ObstacleMap, bounds: &Aabb, voxel: f64, clearance: f64) -> Result<Self, PlanError> {
        if !(voxel.is_finite() && voxel > 0.0) {
            return Err(PlanError::BadVoxel(voxel));
        }
        let ext = bounds.extent();
        let dims = [ext.x, ext.y, ext.z].map(|e| ((e / voxel).ceil() as usize).max(1));
        let mut grid = Self {
            origin: bounds.min,
            voxel,
            dims,
            blocked: vec![false; dims[0] * dims[1] * dims[2]],
        };
        let reach = (clearance / voxel).ceil() as i64 + 1;
        let c2 = clearance * clearance;
        let region = bounds.inflate(clearance + voxel);
        for obs in map.points().filter(|q| region.contains(q)) {
            let base = grid.cell_signed(&obs);
            for dx in -reach..=reach {
                for dy in -reach..=reach {
                    for dz in -reach..=reach {
                        let c = [base[0] + dx, base[1] + dy, base[2] + dz];
                        let Some(i) = grid.checked_index(c) else { continue };
                        if grid.center_of(c).distance_squared(&obs) < c2 {
                            grid.blocked[i] = true;
                        }
                    }
                }
            }
        }
        Ok(grid)
    }

    fn cell_signed(&self, p: &Point3) -> [i64; 3] {
        let q = *p - self.origin;
        [q.x, q.y, q.z].map(|v| (v / self.voxel).floor() as i64)
    }

    fn checked_index(&self, c: [i64; 3]) -> Option<usize> {
        if (0..3).any(|k| c[k] < 0 || c[k] >= self.dims[k] as i64) {
            return None;
        }
        Some(((c[2] as usize * self.dims[1]) + c[1] as usize) * self.dims[0] + c[0] as usize)
    }

    pub fn len(&self) -> usize {
        self.blocked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocked.is_empty()
    }

    /// Voxel index containing `p`, `None` outside the grid.
    pub fn index_of(&self, p: &Point3) -> Option<usize> {
        self.checked_index(self.cell_signed(p))
    }

    pub fn coords(&self, i: usize) -> [i64; 3] {
        let x = i % self.dims[0];
        let y = (i / self.dims[0]) % self.dims[1];
        let z = i / (self.dims[0] * self.dims[1]);
        [x as i64, y as i64, z as i64]
    }

    fn center_of(&self, c: [i64; 3]) -> Point3 {
        self.origin + Point3::new(c[0] as f64 + 0.5, c[1] as f64 + 0.5, c[2] as f64 + 0.5) * self.voxel
    }

    pub fn center(&self, i: usize) -> Point3 {
        self.center_of(self.coords(i))
    }

    pub fn is_blocked(&self, i: usize) -> bool {
        self.blocked[i]
    }

    /// Free 26-neighbours of `i` with their step lengths.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let c = self.coords(i);
        let v = self.voxel;
        (-1i64..=1)
            .flat_map(|dz| (-1i64..=1).flat_map(move |dy| (-1i64..=1).map(move |dx| [dx, dy, dz])))
            .filter(|d| *d != [0, 0, 0])
            .filter_map(move |d| {
                let j = self.checked_index([c[0] + d[0], c[1] + d[1], c[2] + d[2]])?;
                if self.blocked[j] {
                    return None;
                }
                let n = (d[0].abs() + d[1].abs() + d[2].abs()) as f64;
                Some((j, v * n.sqrt()))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Open {
    f: f64,
    g: f64,
    idx: usize,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, o: &Self) -> Ordering {
        o.f.total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&o.g))
            .then_with(|| o.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// A* from the voxel of `start` to the voxel of `goal`. The returned path is
/// `start`, the intermediate voxel centers, then `goal`; its cost is measured
/// against the straight start→goal segment. Grid build time is included in
/// `elapsed_s`.
pub fn plan_astar_grid(
    start: Point3,
    goal: Point3,
    map: &ObstacleMap,
    voxel: f64,
    bounds: &Aabb,
    cfg: &PlannerConfig,
) -> Result<PlanResult, PlanError> {
    let clock = Instant::now();
    cfg.validate()?;
    let zeta = cfg.obstacle_fail_safe_dis;
    if !bounds.contains(&start) || !bounds.contains(&goal) {
        return Err(PlanError::OutOfBounds);
    }
    let grid = VoxelGrid::build(map, bounds, voxel, zeta)?;
    let s = grid.index_of(&start).ok_or(PlanError::OutOfBounds)?;
    let t = grid.index_of(&goal).ok_or(PlanError::OutOfBounds)?;
    if grid.is_blocked(s) || !map.point_clear(&start, zeta) {
        return Err(PlanError::StartInCollision);
    }
    if grid.is_blocked(t) || !map.point_clear(&goal, zeta) {
        return Err(PlanError::GoalInCollision);
    }

    let goal_c = grid.center(t);
    let h = |i: usize| grid.center(i).distance(&goal_c);
    let mut g = vec![f64::INFINITY; grid.len()];
    let mut parent = vec![usize::MAX; grid.len()];
    let mut closed = vec![false; grid.len()];
    let mut open = BinaryHeap::new();
    g[s] = 0.0;
    open.push(Open { f: h(s), g: 0.0, idx: s });
    let mut expanded = 0;
    while let Some(Open { g: gc, idx, .. }) = open.pop() {
        if closed[idx] {
            continue;
        }
        closed[idx] = true;
        expanded += 1;
        if idx == t {
            break;
        }
        for (j, w) in grid.neighbors(idx) {
            let cand = gc + w;
            if !closed[j] && cand < g[j] {
                g[j] = cand;
                parent[j] = idx;
                open.push(Open {
                    f: cand + h(j),
                    g: cand,
                    idx: j,
                });
            }
        }
    }
    if !closed[t] {
        return Err(PlanError::NoPath);
    }

    let mut cells = vec![t];
    while let Some(&last) = cells.last() {
        if last == s {
            break;
        }
        cells.push(parent[last]);
    }
    cells.reverse();
    let mut pts = vec![start];
    if cells.len() > 2 {
        pts.extend(cells[1..cells.len() - 1].iter().map(|&i| grid.center(i)));
    }
    pts.push(goal);
    let stats = PlanStats {
        vertices: expanded,
        grid_cost: Some(g[t]),
        ..PlanStats::default()
    };
    let reference = Trajectory::new(vec![start, goal]);
    Ok(finish(Trajectory::new(pts), true, expanded, stats, &reference, cfg, clock))
}
