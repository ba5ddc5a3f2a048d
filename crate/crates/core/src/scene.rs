//! Static scenes: spheres, boxes and raw cloud files inside a bounding box,
//! plus a seeded generator for cluttered 10 m cubes.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Aabb, Point3};
use crate::obstacle_map::{read_cloud_file, CloudFormat, CloudIoError, MapConfig, ObstacleMap, PointCloud};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("reading {path}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing {path}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("cloud file {path}")]
    Cloud { path: PathBuf, source: CloudIoError },
    #[error("invalid scene: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Obstacle {
    Sphere { center: Point3, radius: f64 },
    Box { min: Point3, max: Point3 },
    /// Raw points from a cloud file; relative paths resolve against the scene file.
    Cloud {
        path: PathBuf,
        #[serde(default)]
        format: CloudFormat,
    },
}

/// `n` points spread evenly over a sphere surface (Fibonacci lattice).
pub fn sphere_surface(center: Point3, radius: f64, n: usize) -> Vec<Point3> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let th = golden * i as f64;
            center + Point3::new(r * th.cos(), r * th.sin(), z) * radius
        })
        .collect()
}

/// Point count giving roughly `spacing` between neighbours on a sphere.
pub fn sphere_point_count(radius: f64, spacing: f64) -> usize {
    ((4.0 * PI * radius * radius) / (spacing * spacing)).ceil().max(1.0) as usize
}

/// Grid points on the six faces of a box, at most `spacing` apart.
pub fn box_surface(min: Point3, max: Point3, spacing: f64) -> Vec<Point3> {
    let steps = |lo: f64, hi: f64| -> Vec<f64> {
        let n = ((hi - lo) / spacing).ceil().max(1.0) as usize;
        (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
    };
    let (xs, ys, zs) = (steps(min.x, max.x), steps(min.y, max.y), steps(min.z, max.z));
    let mut out = Vec::new();
    for &x in &xs {
        for &y in &ys {
            out.push(Point3::new(x, y, min.z));
            out.push(Point3::new(x, y, max.z));
        }
    }
    for &x in &xs {
        for &z in &zs[1..zs.len() - 1] {
            out.push(Point3::new(x, min.y, z));
            out.push(Point3::new(x, max.y, z));
        }
    }
    for &y in &ys[1..ys.len() - 1] {
        for &z in &zs[1..zs.len() - 1] {
            out.push(Point3::new(min.x, y, z));
            out.push(Point3::new(max.x, y, z));
        }
    }
    out
}

impl Obstacle {
    /// Surface samples; relative cloud paths resolve against `base`.
    pub fn surface_points(&self, spacing: f64, base: &Path) -> Result<Vec<Point3>, SceneError> {
        match self {
            Obstacle::Sphere { center, radius } => {
                Ok(sphere_surface(*center, *radius, sphere_point_count(*radius, spacing)))
            }
            Obstacle::Box { min, max } => Ok(box_surface(*min, *max, spacing)),
            Obstacle::Cloud { path, format } => {
                let full = base.join(path);
                read_cloud_file(&full, *format)
                    .map_err(|source| SceneError::Cloud { path: full, source })
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            Obstacle::Sphere { center, radius } => {
                if !(center.is_finite() && radius.is_finite() && *radius > 0.0) {
                    return Err(format!("sphere at {center:?} needs a finite radius > 0"));
                }
            }
            Obstacle::Box { min, max } => {
                if !(min.is_finite() && max.is_finite() && min.x < max.x && min.y < max.y && min.z < max.z) {
                    return Err(format!("box {min:?}..{max:?} must have min < max on every axis"));
                }
            }
            Obstacle::Cloud { .. } => {}
        }
        Ok(())
    }
}

/// Obstacle count of generated scenes.
pub const DEFAULT_CLUTTER: usize = 16;

fn default_spacing() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub bounds: Aabb,
    pub start: Point3,
    pub goal: Point3,
    pub obstacles: Vec<Obstacle>,
    /// Surface sampling distance for analytic obstacles, meters.
    #[serde(default = "default_spacing")]
    pub point_spacing: f64,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Scene {
    pub fn load(path: &Path) -> Result<Self, SceneError> {
        let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut scene: Scene = serde_json::from_str(&text).map_err(|source| SceneError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        scene.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        scene.validate().map_err(SceneError::Invalid)?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.point_spacing.is_finite() && self.point_spacing > 0.0) {
            return Err("point_spacing must be > 0".into());
        }
        if !self.bounds.contains(&self.start) || !self.bounds.contains(&self.goal) {
            return Err("start and goal must lie inside bounds".into());
        }
        self.obstacles.iter().try_for_each(Obstacle::validate)
    }

    pub fn cloud(&self) -> Result<PointCloud, SceneError> {
        let mut points = Vec::new();
        for o in &self.obstacles {
            points.extend(o.surface_points(self.point_spacing, &self.base_dir)?);
        }
        Ok(PointCloud::new(points, 0.0))
    }

    /// Single-cloud map at `resolution` holding every obstacle surface point.
    pub fn build_map(&self, resolution: f64) -> Result<ObstacleMap, SceneError> {
        let cloud = self.cloud()?;
        let mut map = ObstacleMap::new(MapConfig {
            resolution,
            capacity: 1,
            ..MapConfig::default()
        });
        map.insert_cloud(&cloud);
        Ok(map)
    }

    /// Cluttered 10 m cube: one blocker on the start→goal line plus random
    /// spheres and boxes that keep clear of both endpoints.
    pub fn generate(seed: u64) -> Self {
        Self::generate_with(seed, DEFAULT_CLUTTER)
    }

    /// As [`Scene::generate`] with `count` obstacles in total.
    pub fn generate_with(seed: u64, count: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bounds = Aabb::new(Point3::ORIGIN, Point3::new(10.0, 10.0, 10.0));
        let start = Point3::new(1.0, 5.0, 5.0);
        let goal = Point3::new(9.0, 5.0, 5.0);
        let mut obstacles = vec![Obstacle::Sphere {
            center: start.midpoint(&goal),
            radius: 0.8,
        }];
        let keep_out = 1.8;
        while obstacles.len() < count.max(1) {
            let c = Point3::new(
                rng.random_range(0.5..9.5),
                rng.random_range(0.5..9.5),
                rng.random_range(0.5..9.5),
            );
            let o = if rng.random_bool(0.5) {
                Obstacle::Sphere {
                    center: c,
                    radius: rng.random_range(0.3..0.9),
                }
            } else {
                let h = Point3::new(
                    rng.random_range(0.2..0.7),
                    rng.random_range(0.2..0.7),
                    rng.random_range(0.2..0.7),
                );
                Obstacle::Box { min: c - h, max: c + h }
            };
            let reach = match &o {
                Obstacle::Sphere { radius, .. } => *radius,
                Obstacle::Box { min, max } => max.distance(min) / 2.0,
                Obstacle::Cloud { .. } => 0.0,
            };
            if c.distance(&start) > reach + keep_out && c.distance(&goal) > reach + keep_out {
                obstacles.push(o);
            }
        }
        Scene {
            bounds,
            start,
            goal,
            obstacles,
            point_spacing: default_spacing(),
            base_dir: PathBuf::new(),
        }
    }
}
