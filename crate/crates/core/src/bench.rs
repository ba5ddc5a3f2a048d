//! Planner and map-insertion benchmarks.
//!
//! Planner trial outcomes and their wall-clock timings are kept in separate
//! tables: the outcome table is reproducible bit for bit under a fixed seed,
//! timings never are.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::PlannerConfig;
use crate::estimator::densify_all;
use crate::exec::{map_range, Execution};
use crate::geometry::{Point3, Trajectory};
use crate::obstacle_map::{crop_sphere, MapConfig, ObstacleMap, PointCloud};
use crate::planners::{plan_astar_grid, plan_baseline_rrtstar, plan_improved_rrtstar, Algorithm, PlanResult};
use crate::scene::{sphere_surface, Scene};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlannerBenchOptions {
    pub trials: usize,
    pub seed: u64,
    /// A* voxel edge, meters.
    pub voxel: f64,
    /// Dedup resolution of the scene map, meters.
    pub map_resolution: f64,
    /// Run and discard one extra trial before measuring.
    pub warmup: bool,
    pub execution: Execution,
    /// Waypoint spacing of the desired trajectory handed to the improved planner.
    pub guide_spacing: f64,
}

impl Default for PlannerBenchOptions {
    fn default() -> Self {
        Self {
            trials: 10,
            seed: 0,
            voxel: 0.1,
            map_resolution: 0.1,
            warmup: true,
            execution: Execution::Sequential,
            guide_spacing: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub algorithm: Algorithm,
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    pub elapsed_ms: f64,
    pub path_cost: f64,
    pub iterations: usize,
    pub waypoints: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub median: f64,
    pub mean: f64,
    pub stddev: f64,
}

/// Median, mean and sample standard deviation; NaN for an empty input.
pub fn describe(values: &[f64]) -> Stats {
    if values.is_empty() {
        return Stats {
            median: f64::NAN,
            mean: f64::NAN,
            stddev: f64::NAN,
        };
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
    let mean = v.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    Stats {
        median,
        mean,
        stddev: var.sqrt(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub trials: usize,
    pub successes: usize,
    /// Over every trial that ran; a failure counts with the time it spent
    /// exhausting its iteration budget.
    pub elapsed_ms: Stats,
    /// Over successful trials only.
    pub path_cost: Stats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<TrialRow>,
    pub summary: Vec<AlgorithmSummary>,
}

impl BenchReport {
    pub fn from_rows(mut rows: Vec<TrialRow>) -> Self {
        rows.sort_by_key(|r| (r.algorithm, r.trial));
        let summary = Algorithm::ALL
            .iter()
            .map(|&algorithm| {
                let mine: Vec<&TrialRow> = rows.iter().filter(|r| r.algorithm == algorithm).collect();
                let ok: Vec<&&TrialRow> = mine.iter().filter(|r| r.success).collect();
                AlgorithmSummary {
                    algorithm,
                    trials: mine.len(),
                    successes: ok.len(),
                    elapsed_ms: describe(
                        &mine.iter().map(|r| r.elapsed_ms).filter(|t| t.is_finite()).collect::<Vec<_>>(),
                    ),
                    path_cost: describe(&ok.iter().map(|r| r.path_cost).collect::<Vec<_>>()),
                }
            })
            .collect();
        Self { rows, summary }
    }

    pub fn summary_for(&self, a: Algorithm) -> Option<&AlgorithmSummary> {
        self.summary.iter().find(|s| s.algorithm == a)
    }

    pub const TRIALS_HEADER: &'static str = "algorithm,trial,seed,success,path_cost,iterations,waypoints";
    pub const TIMINGS_HEADER: &'static str = "algorithm,trial,elapsed_ms";

    /// Deterministic per-trial outcomes.
    pub fn write_trials_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::TRIALS_HEADER)?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{:.6},{},{}",
                r.algorithm, r.trial, r.seed, r.success, r.path_cost, r.iterations, r.waypoints
            )?;
        }
        Ok(())
    }

    pub fn write_timings_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::TIMINGS_HEADER)?;
        for r in &self.rows {
            writeln!(w, "{},{},{:.6}", r.algorithm, r.trial, r.elapsed_ms)?;
        }
        Ok(())
    }
}

/// Everything a trial needs, built once per scene.
pub struct BenchSetup {
    pub scene: Scene,
    pub map: ObstacleMap,
    /// Straight start→goal line, densified; the desired trajectory.
    pub guide: Trajectory,
    pub cfg: PlannerConfig,
    pub voxel: f64,
}

impl BenchSetup {
    pub fn new(scene: Scene, cfg: PlannerConfig, opts: &PlannerBenchOptions) -> Result<Self, crate::scene::SceneError> {
        let map = scene.build_map(opts.map_resolution)?;
        let guide = Trajectory::new(densify_all(&[scene.start, scene.goal], opts.guide_spacing));
        Ok(Self {
            scene,
            map,
            guide,
            cfg,
            voxel: opts.voxel,
        })
    }

    pub fn plan(&self, algorithm: Algorithm, seed: u64) -> Option<PlanResult> {
        let s = &self.scene;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let res = match algorithm {
            Algorithm::Improved => plan_improved_rrtstar(s.start, s.goal, &self.map, &self.guide, &self.cfg, &mut rng),
            Algorithm::Rrtstar => plan_baseline_rrtstar(s.start, s.goal, &self.map, &s.bounds, &self.cfg, &mut rng),
            Algorithm::Astar => plan_astar_grid(s.start, s.goal, &self.map, self.voxel, &s.bounds, &self.cfg),
        };
        match res {
            Ok(r) => Some(r),
            Err(e) => {
                log::warn!("{algorithm} failed: {e}");
                None
            }
        }
    }

    pub fn trial(&self, algorithm: Algorithm, trial: usize, seed: u64) -> TrialRow {
        match self.plan(algorithm, seed) {
            Some(r) => TrialRow {
                algorithm,
                trial,
                seed,
                success: r.success,
                elapsed_ms: r.elapsed_s * 1e3,
                path_cost: r.cost,
                iterations: r.iterations,
                waypoints: r.path.len(),
            },
            None => TrialRow {
                algorithm,
                trial,
                seed,
                success: false,
                elapsed_ms: f64::NAN,
                path_cost: f64::NAN,
                iterations: 0,
                waypoints: 0,
            },
        }
    }
}

/// Runs every algorithm on trial seeds `seed, seed + 1, …`.
pub fn run_planner_bench(setup: &BenchSetup, opts: &PlannerBenchOptions) -> BenchReport {
    if opts.warmup {
        for a in Algorithm::ALL {
            let _ = setup.plan(a, opts.seed);
        }
    }
    let rows = map_range(opts.execution, opts.trials, |t| {
        let seed = opts.seed.wrapping_add(t as u64);
        Algorithm::ALL.map(|a| setup.trial(a, t, seed))
    });
    BenchReport::from_rows(rows.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapBenchOptions {
    pub clouds: usize,
    pub points: usize,
    pub radius: f64,
    pub resolution: f64,
    pub capacity: usize,
    pub seed: u64,
    pub buckets: usize,
}

impl Default for MapBenchOptions {
    fn default() -> Self {
        Self {
            clouds: 100,
            points: 10_000,
            radius: 5.0,
            resolution: 0.2,
            capacity: 10,
            seed: 0,
            buckets: 20,
        }
    }
}

/// A cloud with the sensor position it was taken from.
#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub cloud: PointCloud,
    pub origin: Point3,
}

/// Scans of a fixed world (ground plane plus a lattice of spheres) from a
/// sensor moving 0.1 m along x per scan. Points reach 20% past `radius`
/// so the crop has work to do.
pub fn synthetic_scans(opts: &MapBenchOptions) -> Vec<Scan> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let reach = opts.radius * 1.2;
    let lattice: Vec<Point3> = (-6..=16)
        .flat_map(|i| (-3..=3).map(move |j| Point3::new(i as f64 * 2.5, j as f64 * 2.5, 1.0)))
        .collect();
    let shell: Vec<Point3> = sphere_surface(Point3::ORIGIN, 0.7, 2000);
    (0..opts.clouds)
        .map(|k| {
            let origin = Point3::new(k as f64 * 0.1, 0.0, 1.0);
            let near: Vec<&Point3> = lattice.iter().filter(|c| c.distance(&origin) < reach).collect();
            let points = (0..opts.points)
                .map(|_| {
                    if near.is_empty() || rng.random_bool(0.4) {
                        let a = rng.random_range(0.0..std::f64::consts::TAU);
                        let r = reach * rng.random::<f64>().sqrt();
                        Point3::new(origin.x + r * a.cos(), origin.y + r * a.sin(), 0.0)
                    } else {
                        let c = near[rng.random_range(0..near.len())];
                        *c + shell[rng.random_range(0..shell.len())]
                    }
                })
                .collect();
            Scan {
                cloud: PointCloud::new(points, k as f64),
                origin,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsertionRow {
    pub cloud: usize,
    pub received: usize,
    pub cropped: usize,
    pub inserted: usize,
    pub deduplicated: usize,
    pub evicted: usize,
    pub map_size: usize,
    pub elapsed_us: f64,
}

impl InsertionRow {
    pub const HEADER: &'static str = "cloud,received,cropped,inserted,deduplicated,evicted,map_size,elapsed_us";
}

/// Crops each scan to `radius` around its origin and inserts it into a
/// ring-buffer map; the timing covers crop plus insertion.
pub fn run_map_bench(scans: &[Scan], opts: &MapBenchOptions) -> Vec<InsertionRow> {
    let mut map = ObstacleMap::new(MapConfig {
        resolution: opts.resolution,
        capacity: opts.capacity,
        ..MapConfig::default()
    });
    scans
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let clock = std::time::Instant::now();
            let cropped = crop_sphere(&s.cloud, s.origin, opts.radius);
            let rep = map.insert_cloud(&cropped);
            let elapsed_us = clock.elapsed().as_secs_f64() * 1e6;
            InsertionRow {
                cloud: i,
                received: s.cloud.len(),
                cropped: cropped.len(),
                inserted: rep.inserted,
                deduplicated: rep.deduplicated,
                evicted: rep.evicted,
                map_size: map.len(),
                elapsed_us,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Equal-width histogram over `[min, max]`; the maximum lands in the last bucket.
pub fn histogram(values: &[f64], buckets: usize) -> Vec<Bucket> {
    let buckets = buckets.max(1);
    if values.is_empty() {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / buckets as f64 } else { 1.0 };
    let mut out: Vec<Bucket> = (0..buckets)
        .map(|i| Bucket {
            lo: lo + i as f64 * width,
            hi: lo + (i + 1) as f64 * width,
            count: 0,
        })
        .collect();
    for v in values {
        let i = (((v - lo) / width) as usize).min(buckets - 1);
        out[i].count += 1;
    }
    out
}
