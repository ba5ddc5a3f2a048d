//! Instance obstacle map: recent point clouds, voxel-deduplicated and
//! indexed in an R-tree, kept in a fixed-capacity ring of clouds.

mod cloud;
mod rtree;

use std::collections::VecDeque;
use std::sync::{Arc, RwLock};
use std::time::Instant;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

pub use cloud::{
    crop_sphere, crop_sphere_with, read_cloud_file, read_xyz_binary, read_xyz_text, remove_ground,
    write_xyz_binary, write_xyz_text, CloudFormat, CloudIoError, PointCloud,
};
pub use rtree::{Entry, RTree, DEFAULT_FANOUT};

use crate::geometry::{point_segment_distance, Aabb, Point3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapConfig {
    /// Voxel edge used for deduplication, meters.
    pub resolution: f64,
    /// Number of clouds retained; the oldest is evicted first.
    pub capacity: usize,
    /// Points below this height are treated as ground and dropped.
    pub ground_z: Option<f64>,
    pub fanout: usize,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            resolution: 0.2,
            capacity: 10,
            ground_z: None,
            fanout: DEFAULT_FANOUT,
        }
    }
}

pub type VoxelKey = (i64, i64, i64);

pub fn voxel_key(p: &Point3, resolution: f64) -> VoxelKey {
    (
        (p.x / resolution).floor() as i64,
        (p.y / resolution).floor() as i64,
        (p.z / resolution).floor() as i64,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InsertReport {
    pub received: usize,
    pub inserted: usize,
    pub deduplicated: usize,
    /// Ground or non-finite points that were dropped.
    pub filtered: usize,
    pub evicted: usize,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone)]
struct StoredCloud {
    entries: Vec<(VoxelKey, Entry)>,
}

#[derive(Debug, Clone)]
pub struct ObstacleMap {
    cfg: MapConfig,
    tree: RTree,
    voxels: FxHashMap<VoxelKey, u64>,
    clouds: VecDeque<StoredCloud>,
    next_id: u64,
}

impl Default for ObstacleMap {
    fn default() -> Self {
        Self::new(MapConfig::default())
    }
}

impl ObstacleMap {
    pub fn new(cfg: MapConfig) -> Self {
        Self {
            tree: RTree::new(cfg.fanout),
            cfg: MapConfig {
                capacity: cfg.capacity.max(1),
                ..cfg
            },
            voxels: FxHashMap::default(),
            clouds: VecDeque::new(),
            next_id: 0,
        }
    }

    /// Map holding exactly `points` (after deduplication) as a single cloud.
    pub fn from_points(points: &[Point3], cfg: MapConfig) -> Self {
        let mut m = Self::new(cfg);
        m.insert_cloud(&PointCloud::new(points.to_vec(), 0.0));
        m
    }

    pub fn config(&self) -> &MapConfig {
        &self.cfg
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    pub fn cloud_count(&self) -> usize {
        self.clouds.len()
    }

    pub fn points(&self) -> impl Iterator<Item = Point3> + '_ {
        self.tree.iter().map(|e| e.point)
    }

    pub fn tree(&self) -> &RTree {
        &self.tree
    }

    pub fn clear(&mut self) {
        self.tree.clear();
        self.voxels.clear();
        self.clouds.clear();
    }

    fn evict_oldest(&mut self) -> usize {
        let Some(old) = self.clouds.pop_front() else {
            return 0;
        };
        for (key, e) in &old.entries {
            self.voxels.remove(key);
            self.tree.remove(e.id, &e.point);
        }
        old.entries.len()
    }

    /// Deduplicates `cloud` against the stored voxels (first point per voxel
    /// wins) and indexes the survivors. When the ring is full the oldest cloud
    /// is evicted before the new one is inserted.
    pub fn insert_cloud(&mut self, cloud: &PointCloud) -> InsertReport {
        let start = Instant::now();
        let mut evicted = 0;
        while self.clouds.len() >= self.cfg.capacity {
            evicted += self.evict_oldest();
        }
        let mut stored = StoredCloud {
            entries: Vec::with_capacity(cloud.len()),
        };
        let (mut filtered, mut dedup) = (0, 0);
        for p in &cloud.points {
            if !p.is_finite() || self.cfg.ground_z.is_some_and(|z| p.z < z) {
                filtered += 1;
                continue;
            }
            let key = voxel_key(p, self.cfg.resolution);
            if self.voxels.contains_key(&key) {
                dedup += 1;
                continue;
            }
            let e = Entry {
                point: *p,
                id: self.next_id,
            };
            self.next_id += 1;
            self.voxels.insert(key, e.id);
            stored.entries.push((key, e));
        }
        for (_, e) in &stored.entries {
            self.tree.insert(*e);
        }
        let inserted = stored.entries.len();
        self.clouds.push_back(stored);
        InsertReport {
            received: cloud.len(),
            inserted,
            deduplicated: dedup,
            filtered,
            evicted,
            elapsed_s: start.elapsed().as_secs_f64(),
        }
    }

    /// Closest stored point and its distance, `None` when empty.
    pub fn nearest_obstacle(&self, q: &Point3) -> Option<(Point3, f64)> {
        self.tree.nearest(q).map(|(e, d)| (e.point, d))
    }

    /// Distance to the closest obstacle, `+∞` when empty.
    pub fn clearance_at(&self, q: &Point3) -> f64 {
        self.nearest_obstacle(q).map_or(f64::INFINITY, |(_, d)| d)
    }

    /// True iff no stored point is closer than `clearance` to `q`.
    pub fn point_clear(&self, q: &Point3, clearance: f64) -> bool {
        let range = Aabb::from_point(*q).inflate(clearance);
        self.tree
            .visit_in_box(&range, |e| e.point.distance(q) >= clearance)
    }

    /// True iff every stored point is at least `clearance` from segment `a`–`b`.
    ///
    /// Long segments are queried in chunks so each range box stays tight
    /// around the segment; any point within `clearance` of the segment is
    /// within `clearance` of some chunk and so falls in that chunk's box.
    pub fn segment_collision_free(&self, a: &Point3, b: &Point3, clearance: f64) -> bool {
        let chunk = (2.0 * clearance).max(0.5);
        let pieces = ((a.distance(b) / chunk).ceil() as usize).max(1);
        (0..pieces).all(|k| {
            let p = a.lerp(b, k as f64 / pieces as f64);
            let q = a.lerp(b, (k + 1) as f64 / pieces as f64);
            let range = Aabb::new(p, p).union_point(&q).inflate(clearance);
            self.tree
                .visit_in_box(&range, |e| point_segment_distance(&e.point, a, b) >= clearance)
        })
    }

    /// Checks every segment of a polyline.
    pub fn path_collision_free(&self, path: &[Point3], clearance: f64) -> bool {
        match path {
            [] => true,
            [p] => self.point_clear(p, clearance),
            _ => path
                .windows(2)
                .all(|w| self.segment_collision_free(&w[0], &w[1], clearance)),
        }
    }

    pub fn points_within(&self, q: &Point3, radius: f64) -> Vec<Point3> {
        let range = Aabb::from_point(*q).inflate(radius);
        let mut out = Vec::new();
        self.tree.visit_in_box(&range, |e| {
            if e.point.distance(q) <= radius {
                out.push(e.point);
            }
            true
        });
        out
    }
}

/// Single-writer / many-reader wrapper. Readers take `Arc` snapshots; a
/// writer never mutates a map a reader can still see.
#[derive(Debug, Default)]
pub struct SharedObstacleMap {
    current: RwLock<Arc<ObstacleMap>>,
}

impl SharedObstacleMap {
    pub fn new(map: ObstacleMap) -> Self {
        Self {
            current: RwLock::new(Arc::new(map)),
        }
    }

    pub fn snapshot(&self) -> Arc<ObstacleMap> {
        Arc::clone(&self.current.read().expect("map lock poisoned"))
    }

    /// Inserts a cloud and publishes the result atomically.
    pub fn insert_cloud(&self, cloud: &PointCloud) -> InsertReport {
        let mut guard = self.current.write().expect("map lock poisoned");
        Arc::make_mut(&mut guard).insert_cloud(cloud)
    }
}
