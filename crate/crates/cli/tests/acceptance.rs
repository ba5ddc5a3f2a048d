//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any fails.

// Negated float comparisons are intended: a NaN must fail a check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[path = "../../core/tests/common/mod.rs"]
mod oracles;

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::OnceLock;

use nalgebra::{DMatrix, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use replan_core::bench::{
    histogram, run_map_bench, run_planner_bench, synthetic_scans, BenchReport, BenchSetup, MapBenchOptions,
    PlannerBenchOptions,
};
use replan_core::bspline::{basis_matrix, KnotVector};
use replan_core::exec::Execution;
use replan_core::planners::{u_path, u_path_gradient, Algorithm};
use replan_core::sampler::{build_region, rotation_align, EllipsoidRegion};
use replan_core::scene::Scene;
use replan_core::sim::{run_simulation, Mode, Scenario};
use replan_core::{MapConfig, ObstacleMap, PlannerConfig, Point3, Trajectory};
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn planner_report() -> &'static BenchReport {
    static REPORT: OnceLock<BenchReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        let scene = Scene::load(&repo("data/scenes/reference.json")).expect("reference scene");
        let opts = PlannerBenchOptions {
            trials: 10,
            seed: 0,
            voxel: 0.1,
            warmup: true,
            execution: Execution::Sequential,
            ..PlannerBenchOptions::default()
        };
        let setup = BenchSetup::new(scene, PlannerConfig::default(), &opts).expect("bench setup");
        run_planner_bench(&setup, &opts)
    })
}

fn planner_speed() -> Outcome {
    let r = planner_report();
    let t = |a| r.summary_for(a).unwrap().elapsed_ms.median;
    let ok = |a| r.summary_for(a).unwrap().successes;
    let (imp, rrt, astar) = (t(Algorithm::Improved), t(Algorithm::Rrtstar), t(Algorithm::Astar));
    let detail = format!(
        "median ms improved {imp:.2} ({}/10 ok), rrt* {rrt:.2} ({}/10 ok), A* {astar:.2}; rrt*/improved {:.1}x",
        ok(Algorithm::Improved),
        ok(Algorithm::Rrtstar),
        rrt / imp
    );
    ensure!(imp < rrt, "improved not faster than rrt*: {detail}");
    ensure!(imp < astar, "improved not faster than A*: {detail}");
    ensure!(rrt / imp >= 5.0, "ratio below 5x: {detail}");
    Ok(detail)
}

fn path_cost_order() -> Outcome {
    let r = planner_report();
    let c = |a| r.summary_for(a).unwrap().path_cost.median;
    let (imp, rrt) = (c(Algorithm::Improved), c(Algorithm::Rrtstar));
    let detail = format!("median path_cost improved {imp:.4}, rrt* {rrt:.4}");
    ensure!(imp < rrt, "ordering violated: {detail}");
    ensure!(imp <= 1.05, "improved above 1.05: {detail}");
    ensure!((0.78 - 0.15..=1.00 + 0.15).contains(&imp), "improved outside band: {detail}");
    Ok(detail)
}

fn bspline_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let kn = loop {
            let mut k: Vec<f64> = (0..6).map(|_| rng.random_range(-5.0..5.0)).collect();
            k.sort_by(f64::total_cmp);
            if k[3] - k[2] > 1e-3 {
                break k;
            }
        };
        let m = basis_matrix(2, &KnotVector::new(kn.clone()).unwrap()).map_err(|e| e.to_string())?;
        let u: f64 = rng.random();
        let got = m.weights(u);
        let want = oracles::de_boor_weights(&kn, 2, kn[2] + u * (kn[3] - kn[2]));
        for j in 0..3 {
            worst = worst.max((got[j] - want[j]).abs());
        }
    }
    ensure!(worst <= 1e-9, "max deviation {worst:e}");
    let m = basis_matrix(2, &KnotVector::uniform(6)).unwrap().0;
    let classical = Matrix3::new(1.0, 1.0, 0.0, -2.0, 2.0, 0.0, 1.0, -2.0, 1.0) * 0.5;
    let uniform_err = (m - classical).abs().max();
    ensure!(uniform_err <= 1e-12, "uniform matrix off by {uniform_err:e}");
    Ok(format!("1000 knot sets, max deviation {worst:.1e}; uniform matrix error {uniform_err:.1e}"))
}

fn sampler_correctness() -> Outcome {
    let r = build_region(Point3::new(1.0, 2.0, 3.0), Point3::new(7.0, -1.0, 5.0), 3.0).map_err(|e| e.to_string())?;
    let inv = r.sigma.try_inverse().ok_or("singular sigma")?;
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut counts = [0usize; 8];
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let d = (r.sample(&mut rng) - r.center).to_vector();
        worst = worst.max((d.transpose() * inv * d)[(0, 0)]);
        let l = r.rotation.transpose() * d;
        counts[usize::from(l.x > 0.0) | usize::from(l.y > 0.0) << 1 | usize::from(l.z > 0.0) << 2] += 1;
    }
    ensure!(worst <= 1.0 + 1e-12, "sample outside: quadratic form {worst}");
    let chi2 = oracles::chi_square_uniform(&counts);
    let critical = ChiSquared::new(7.0).unwrap().inverse_cdf(0.999);
    ensure!(chi2 < critical, "octant chi2 {chi2:.2} >= {critical:.2}");
    let c = Point3::new(0.0, 0.0, 0.0);
    let ball = EllipsoidRegion::ball(c, 3.0);
    let inner = (0..10_000).filter(|_| ball.sample(&mut rng).distance(&c) <= 1.5).count();
    let p = inner as f64 / 10_000.0;
    ensure!((p - 0.125).abs() <= 0.02, "P(r <= 0.5) = {p}");
    Ok(format!("max form {worst:.6}, octant chi2 {chi2:.2} < {critical:.2}, P(r<=0.5) {p:.4}"))
}

fn rotation_alignment() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let v: Vector3<f64> = Vector3::from_fn(|_, _| StandardNormal.sample(&mut rng));
        let r = rotation_align(&Point3::from_vector(&v)).map_err(|e| e.to_string())?;
        worst = worst
            .max((r * r.transpose() - Matrix3::identity()).abs().max())
            .max((r.determinant() - 1.0).abs())
            .max((r * Vector3::z() - v.normalize()).abs().max());
    }
    ensure!(worst <= 1e-9, "max error {worst:e}");
    let id = rotation_align(&Point3::new(0.0, 0.0, 1.0)).unwrap();
    ensure!(id == Matrix3::identity(), "+z is not the identity");
    let flip = rotation_align(&Point3::new(0.0, 0.0, -1.0)).unwrap();
    ensure!(flip == Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0)), "-z is not the fixed pi rotation");
    Ok(format!("10000 directions, max error {worst:.1e}"))
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let (mut worst_aq, mut worst_fd): (f64, f64) = (0.0, 0.0);
    let h = 1e-3;
    for _ in 0..100 {
        let n = rng.random_range(3..40);
        let pts: Vec<Point3> = (0..n)
            .map(|_| Point3::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)))
            .collect();
        let grad = u_path_gradient(&Trajectory::new(pts.clone()));
        let a = oracles::second_difference(n);
        for axis in 0..3 {
            let q = DMatrix::from_iterator(n, 1, pts.iter().map(|p| p.as_array()[axis]));
            let aq = &a * q;
            for i in 0..n {
                worst_aq = worst_aq.max((grad[i].as_array()[axis] - aq[(i, 0)]).abs());
                let mut e = [0.0; 3];
                e[axis] = h;
                let (mut plus, mut minus) = (pts.clone(), pts.clone());
                plus[i] += Point3::from(e);
                minus[i] -= Point3::from(e);
                let fd = (u_path(&Trajectory::new(plus)) - u_path(&Trajectory::new(minus))) / (2.0 * h);
                worst_fd = worst_fd.max((fd - grad[i].as_array()[axis]).abs());
            }
        }
    }
    ensure!(worst_aq <= 1e-9, "gradient vs Aq {worst_aq:e}");
    ensure!(worst_fd <= 1e-6, "gradient vs finite differences {worst_fd:e}");
    Ok(format!("100 paths, |grad - Aq| {worst_aq:.1e}, |grad - fd| {worst_fd:.1e}"))
}

fn map_queries() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut worst: f64 = 0.0;
    let mut queries = 0;
    for m in 0..200 {
        let res = rng.random_range(0.02..0.3);
        let n = rng.random_range(1..=2000);
        let pts: Vec<Point3> = (0..n)
            .map(|_| Point3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)))
            .collect();
        let map = ObstacleMap::from_points(&pts, MapConfig { resolution: res, ..MapConfig::default() });
        let mut ring = oracles::VoxelRing::new(res, 1);
        ring.insert(&pts);
        let truth = ring.points();
        ensure!(map.len() == truth.len(), "map {m}: {} stored vs {} expected", map.len(), truth.len());
        for _ in 0..50 {
            let q = Point3::new(rng.random_range(-7.0..7.0), rng.random_range(-7.0..7.0), rng.random_range(-7.0..7.0));
            let b = q + Point3::new(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
            let clearance = rng.random_range(0.05..1.5);
            let (_, d) = map.nearest_obstacle(&q).ok_or("empty map")?;
            let (_, want) = oracles::linear_nearest(&truth, &q).unwrap();
            worst = worst.max((d - want).abs());
            let free = map.segment_collision_free(&q, &b, clearance);
            ensure!(
                free == oracles::linear_segment_free(&truth, &q, &b, clearance),
                "map {m}: segment verdict differs"
            );
            queries += 1;
        }
    }
    ensure!(worst <= 1e-9, "nearest distance off by {worst:e}");
    Ok(format!("200 maps, {queries} query pairs, max distance error {worst:.1e}, all segment verdicts equal"))
}

fn simulation_safety() -> Outcome {
    let mut lines = Vec::new();
    for name in ["static_wall", "dynamic_crossing", "obstacle_free"] {
        let s = Scenario::load(&repo(&format!("data/scenarios/{name}.json"))).map_err(|e| e.to_string())?;
        let log = run_simulation(&s).map_err(|e| e.to_string())?;
        let bound = s.cfg.obstacle_fail_safe_dis - s.mav.speed / s.tick_hz;
        let world = replan_core::sim::World::new(&s).map_err(|e| e.to_string())?;
        let mut min = f64::INFINITY;
        for r in &log.records {
            let cloud = world.cloud_at(r.time);
            let d = oracles::linear_nearest(&cloud.points, &r.pose.position).map_or(f64::INFINITY, |(_, d)| d);
            ensure!(d >= bound, "{name}: t={:.3} distance {d:.3} < {bound:.3}", r.time);
            ensure!(r.mode != Mode::HoveringReplan || r.velocity == Point3::ORIGIN, "{name}: moving while replanning");
            min = min.min(d);
        }
        let sm = &log.summary;
        ensure!(sm.completed, "{name}: ended {}", sm.final_mode);
        if name == "obstacle_free" {
            ensure!(sm.replans == 0, "obstacle_free replanned {} times", sm.replans);
            let cost = sm.path_cost.ok_or("no path cost")?;
            ensure!(cost < 1.0, "obstacle_free path_cost {cost}");
            lines.push(format!("{name}: 0 replans, path_cost {cost:.3}"));
        } else {
            lines.push(format!("{name}: {} replans, min distance {min:.3} >= {bound:.3}", sm.replans));
        }
    }
    Ok(lines.join("; "))
}

fn cli_outputs(args: &[&str], file: &str) -> Result<Vec<u8>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = Command::new(env!("CARGO_BIN_EXE_replan"))
        .arg("--out-dir")
        .arg(dir.path())
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "replan {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    std::fs::read(dir.path().join(file)).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let scene = repo("data/scenes/reference.json");
    let scene = scene.to_str().unwrap();
    let bench = ["--seed", "11", "bench-planner", "--scene", scene, "--trials", "3"];
    let a = cli_outputs(&bench, "trials.csv")?;
    ensure!(a == cli_outputs(&bench, "trials.csv")?, "bench-planner trials.csv differs between runs");
    let mut rows = a.iter().filter(|&&c| c == b'\n').count() - 1;
    for name in ["static_wall", "dynamic_crossing", "obstacle_free"] {
        let path = repo(&format!("data/scenarios/{name}.json"));
        let sim = ["--seed", "11", "simulate", path.to_str().unwrap()];
        let a = cli_outputs(&sim, "sim_log.csv")?;
        ensure!(a == cli_outputs(&sim, "sim_log.csv")?, "simulate {name} sim_log.csv differs between runs");
        rows += a.iter().filter(|&&c| c == b'\n').count() - 1;
    }
    Ok(format!("bench-planner and 3 simulations identical across two runs ({rows} rows)"))
}

fn insertion_harness() -> Outcome {
    let opts = MapBenchOptions::default();
    ensure!(
        opts.points == 10_000 && opts.resolution == 0.2 && opts.radius == 5.0,
        "unexpected defaults {opts:?}"
    );
    let scans = synthetic_scans(&opts);
    let rows = run_map_bench(&scans, &opts);
    let mut ring = oracles::VoxelRing::new(opts.resolution, opts.capacity);
    for (scan, row) in scans.iter().zip(&rows) {
        let cropped = oracles::crop(&scan.cloud.points, &scan.origin, opts.radius);
        let want = ring.insert(&cropped);
        ensure!(
            (row.cropped, row.inserted, row.deduplicated) == (cropped.len(), want.inserted, want.deduplicated),
            "cloud {}: got {}/{}/{} want {}/{}/{}",
            row.cloud,
            row.cropped,
            row.inserted,
            row.deduplicated,
            cropped.len(),
            want.inserted,
            want.deduplicated
        );
    }
    let times: Vec<f64> = rows.iter().map(|r| r.elapsed_us).collect();
    ensure!(times.iter().all(|t| t.is_finite() && *t > 0.0), "non-positive timing");
    let h = histogram(&times, opts.buckets);
    let counted: usize = h.iter().map(|b| b.count).sum();
    ensure!(h.len() == opts.buckets && counted == rows.len(), "histogram holds {counted} of {}", rows.len());
    let mut sorted = times.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(format!(
        "{} clouds x {} points, dedup counts exact, histogram {} buckets / {counted} clouds, median {:.0} us",
        rows.len(),
        opts.points,
        h.len(),
        sorted[sorted.len() / 2]
    ))
}

fn main() -> ExitCode {
    let checks: [Check; 10] = [
        ("planner speed ordering", planner_speed),
        ("path-cost ordering", path_cost_order),
        ("B-spline oracle equivalence", bspline_equivalence),
        ("sampler correctness", sampler_correctness),
        ("rotation alignment", rotation_alignment),
        ("gradient check", gradient_check),
        ("map-query oracle equivalence", map_queries),
        ("simulation safety", simulation_safety),
        ("determinism", determinism),
        ("insertion benchmark harness", insertion_harness),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in checks.into_iter().enumerate() {
        let n = i + 1;
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail}"),
            Err(why) => {
                println!("criterion {n:>2} FAIL  {name}: {why}");
                failed.push(n);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 10 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
