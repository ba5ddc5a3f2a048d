//! `replan`: smoothing, single plans, closed-loop simulation and the two
//! benchmark suites.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure (including a
//! failed plan or an incomplete simulation).

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use replan_core::bench::{
    histogram, run_map_bench, run_planner_bench, synthetic_scans, BenchSetup, InsertionRow, MapBenchOptions,
    PlannerBenchOptions, Scan,
};
use replan_core::bspline::smooth_trajectory;
use replan_core::estimator::densify_all;
use replan_core::exec::Execution;
use replan_core::obstacle_map::{read_cloud_file, read_xyz_text, CloudFormat, PointCloud};
use replan_core::planners::{plan_astar_grid, plan_baseline_rrtstar, plan_improved_rrtstar, Algorithm, PlanResult};
use replan_core::scene::Scene;
use replan_core::sim::{run_simulation, Scenario};
use replan_core::{Point3, PlannerConfig, Trajectory};

#[derive(Debug, Parser)]
#[command(name = "replan", version, about = "Local trajectory replanning toolkit")]
struct Cli {
    /// Seed for every random choice (planner trials, generated scenes, synthetic clouds).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON file with planner configuration overrides.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files; without it the main result goes to stdout.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Smooth a waypoint file (one `x,y,z` per line) with the quadratic B-spline.
    Smooth {
        input: PathBuf,
        #[arg(long)]
        samples_per_segment: Option<usize>,
    },
    /// Run one planner on a scene.
    Plan {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long, default_value = "improved")]
        algorithm: Algorithm,
        /// A* voxel edge, meters.
        #[arg(long, default_value_t = 0.1)]
        voxel: f64,
    },
    /// Compare A*, RRT* and improved RRT* over seeded trials.
    BenchPlanner {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0.1)]
        voxel: f64,
        /// Skip the discarded warm-up trial.
        #[arg(long)]
        no_warmup: bool,
        /// Run trials on all cores; timings become noisier.
        #[arg(long)]
        parallel: bool,
    },
    /// Time cloud insertion into the obstacle map.
    BenchMap {
        /// Directory of cloud files (sorted by name); synthetic scans when omitted.
        #[arg(long)]
        clouds_dir: Option<PathBuf>,
        #[arg(long, value_parser = parse_cloud_format, default_value = "text")]
        cloud_format: CloudFormat,
        /// Sensor position used to crop clouds read from a directory.
        #[arg(long, value_parser = parse_point, default_value = "0,0,0")]
        origin: Point3,
        #[arg(long, default_value_t = 100)]
        clouds: usize,
        #[arg(long, default_value_t = 10_000)]
        points: usize,
        #[arg(long, default_value_t = 5.0)]
        radius: f64,
        #[arg(long, default_value_t = 0.2)]
        resolution: f64,
        /// Clouds kept in the ring buffer.
        #[arg(long, default_value_t = 10)]
        capacity: usize,
        #[arg(long, default_value_t = 20)]
        buckets: usize,
    },
    /// Closed-loop simulation of a scenario file.
    Simulate { scenario: PathBuf },
}

#[derive(Debug, Args)]
struct SceneArgs {
    /// Scene JSON; a generated cluttered 10 m cube when omitted.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Obstacle count for generated scenes.
    #[arg(long, default_value_t = replan_core::scene::DEFAULT_CLUTTER)]
    clutter: usize,
}

impl SceneArgs {
    fn load(&self, seed: u64) -> Result<Scene> {
        match &self.scene {
            Some(p) => Ok(Scene::load(p)?),
            None => Ok(Scene::generate_with(seed, self.clutter)),
        }
    }
}

fn parse_cloud_format(s: &str) -> Result<CloudFormat, String> {
    s.parse()
}

fn parse_point(s: &str) -> Result<Point3, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|f| f.trim().parse::<f64>().map_err(|e| format!("'{f}': {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, z] => Ok(Point3::new(x, y, z)),
        _ => Err(format!("expected x,y,z, got '{s}'")),
    }
}

/// Where results go: files under `--out-dir`, or stdout for the main one.
struct Output {
    dir: Option<PathBuf>,
    format: Format,
}

impl Output {
    fn file(&self, name: &str) -> Result<Option<BufWriter<File>>> {
        let Some(dir) = &self.dir else { return Ok(None) };
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(name);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Some(BufWriter::new(f)))
    }

    /// The command's main table: a file when `--out-dir` is set, stdout otherwise.
    fn primary(&self, stem: &str, csv: impl FnOnce(&mut dyn Write) -> io::Result<()>, json: &impl Serialize) -> Result<()> {
        let ext = match self.format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        let mut w: Box<dyn Write> = match self.file(&format!("{stem}.{ext}"))? {
            Some(f) => Box::new(f),
            None => Box::new(io::stdout().lock()),
        };
        match self.format {
            Format::Csv => csv(&mut w)?,
            Format::Json => {
                serde_json::to_writer_pretty(&mut w, json)?;
                writeln!(w)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Side files that only exist with `--out-dir`.
    fn extra(&self, name: &str, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
        if let Some(mut f) = self.file(name)? {
            write(&mut f)?;
            f.flush()?;
        }
        Ok(())
    }
}

fn json_to(value: &impl Serialize) -> impl FnOnce(&mut dyn Write) -> io::Result<()> + '_ {
    move |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    }
}

fn write_points(w: &mut dyn Write, points: &[Point3]) -> io::Result<()> {
    writeln!(w, "x,y,z")?;
    for p in points {
        writeln!(w, "{:.6},{:.6},{:.6}", p.x, p.y, p.z)?;
    }
    Ok(())
}

fn load_config(path: Option<&Path>) -> Result<PlannerConfig> {
    let base = PlannerConfig::default();
    let cfg = match path {
        None => base,
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let overrides: serde_json::Value =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            base.merged_with(&overrides)
                .with_context(|| format!("applying overrides from {}", p.display()))?
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Waypoint file: the text cloud format, optionally headed by `x,y,z`.
fn read_waypoints(path: &Path) -> Result<Vec<Point3>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    // Blank the header rather than dropping it so error line numbers stay right.
    let body: String = text
        .lines()
        .enumerate()
        .map(|(i, l)| if i == 0 && l.trim().eq_ignore_ascii_case("x,y,z") { "" } else { l })
        .collect::<Vec<_>>()
        .join("\n");
    read_xyz_text(body.as_bytes()).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_smooth(out: &Output, cfg: &PlannerConfig, input: &Path, samples: Option<usize>) -> Result<()> {
    let pts = read_waypoints(input)?;
    if pts.len() < 3 {
        bail!("{}: need at least 3 waypoints, found {}", input.display(), pts.len());
    }
    let samples = samples.unwrap_or(cfg.samples_per_segment);
    if samples == 0 {
        bail!("--samples-per-segment must be at least 1");
    }
    let smoothed = smooth_trajectory(&Trajectory::new(pts), samples);
    out.primary("trajectory", |w| write_points(w, &smoothed.waypoints), &smoothed.waypoints)
}

#[derive(Serialize)]
struct PlanSummary<'a> {
    algorithm: Algorithm,
    seed: u64,
    success: bool,
    iterations: usize,
    elapsed_ms: f64,
    path_cost: f64,
    result: &'a PlanResult,
}

fn cmd_plan(out: &Output, cfg: &PlannerConfig, seed: u64, scene: &SceneArgs, algorithm: Algorithm, voxel: f64) -> Result<bool> {
    let scene = scene.load(seed)?;
    let map = scene.build_map(0.1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let res = match algorithm {
        Algorithm::Improved => {
            let guide = Trajectory::new(densify_all(&[scene.start, scene.goal], 1.0));
            plan_improved_rrtstar(scene.start, scene.goal, &map, &guide, cfg, &mut rng)?
        }
        Algorithm::Rrtstar => plan_baseline_rrtstar(scene.start, scene.goal, &map, &scene.bounds, cfg, &mut rng)?,
        Algorithm::Astar => plan_astar_grid(scene.start, scene.goal, &map, voxel, &scene.bounds, cfg)?,
    };
    let summary = PlanSummary {
        algorithm,
        seed,
        success: res.success,
        iterations: res.iterations,
        elapsed_ms: res.elapsed_s * 1e3,
        path_cost: res.cost,
        result: &res,
    };
    out.primary("path", |w| write_points(w, &res.smoothed.waypoints), &summary)?;
    out.extra("raw_path.csv", |w| write_points(w, &res.path.waypoints))?;
    out.extra("plan.json", json_to(&summary))?;
    eprintln!(
        "{algorithm}: success={} iterations={} elapsed={:.3} ms cost={:.4}",
        res.success,
        res.iterations,
        res.elapsed_s * 1e3,
        res.cost
    );
    Ok(res.success)
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench_planner(
    out: &Output,
    cfg: PlannerConfig,
    seed: u64,
    scene: &SceneArgs,
    trials: usize,
    voxel: f64,
    warmup: bool,
    parallel: bool,
) -> Result<()> {
    if trials == 0 {
        bail!("--trials must be at least 1");
    }
    let opts = PlannerBenchOptions {
        trials,
        seed,
        voxel,
        warmup,
        execution: if parallel { Execution::Parallel } else { Execution::Sequential },
        ..PlannerBenchOptions::default()
    };
    let setup = BenchSetup::new(scene.load(seed)?, cfg, &opts)?;
    let report = run_planner_bench(&setup, &opts);
    out.primary("trials", |w| report.write_trials_csv(w), &report.rows)?;
    out.extra("timings.csv", |w| report.write_timings_csv(w))?;
    out.extra("summary.json", json_to(&report.summary))?;
    for s in &report.summary {
        eprintln!(
            "{:>9}: {}/{} ok, median {:.3} ms, median cost {:.4}",
            s.algorithm, s.successes, s.trials, s.elapsed_ms.median, s.path_cost.median
        );
    }
    Ok(())
}

fn load_scans(dir: &Path, format: CloudFormat, origin: Point3) -> Result<Vec<Scan>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<io::Result<_>>()?;
    files.retain(|p| p.is_file());
    files.sort();
    files
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let points = read_cloud_file(p, format).with_context(|| format!("reading {}", p.display()))?;
            Ok(Scan {
                cloud: PointCloud::new(points, i as f64),
                origin,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct MapBenchSummary {
    clouds: usize,
    resolution: f64,
    radius: f64,
    elapsed_us: replan_core::bench::Stats,
    histogram: Vec<replan_core::bench::Bucket>,
}

fn cmd_bench_map(out: &Output, opts: MapBenchOptions, clouds_dir: Option<&Path>, format: CloudFormat, origin: Point3) -> Result<()> {
    if !(opts.resolution > 0.0 && opts.radius > 0.0) {
        bail!("--resolution and --radius must be positive");
    }
    let scans = match clouds_dir {
        Some(dir) => load_scans(dir, format, origin)?,
        None => synthetic_scans(&opts),
    };
    if scans.is_empty() {
        bail!("no clouds to insert");
    }
    let rows = run_map_bench(&scans, &opts);
    let times: Vec<f64> = rows.iter().map(|r| r.elapsed_us).collect();
    let summary = MapBenchSummary {
        clouds: rows.len(),
        resolution: opts.resolution,
        radius: opts.radius,
        elapsed_us: replan_core::bench::describe(&times),
        histogram: histogram(&times, opts.buckets),
    };
    out.primary(
        "insertion",
        |w| {
            writeln!(w, "{}", InsertionRow::HEADER)?;
            for r in &rows {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{:.3}",
                    r.cloud, r.received, r.cropped, r.inserted, r.deduplicated, r.evicted, r.map_size, r.elapsed_us
                )?;
            }
            Ok(())
        },
        &rows,
    )?;
    out.extra("histogram.csv", |w| {
        writeln!(w, "lo_us,hi_us,count")?;
        for b in &summary.histogram {
            writeln!(w, "{:.3},{:.3},{}", b.lo, b.hi, b.count)?;
        }
        Ok(())
    })?;
    out.extra("map_summary.json", json_to(&summary))?;
    eprintln!(
        "{} clouds: median {:.1} us, mean {:.1} us",
        summary.clouds, summary.elapsed_us.median, summary.elapsed_us.mean
    );
    Ok(())
}

fn cmd_simulate(out: &Output, cli: &Cli, path: &Path) -> Result<bool> {
    let mut scenario = Scenario::load(path)?;
    if let Some(p) = &cli.config {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let overrides: serde_json::Value = serde_json::from_str(&text)?;
        scenario.cfg = scenario.cfg.merged_with(&overrides)?;
    }
    if let Some(seed) = cli.seed {
        scenario.rng_seed = seed;
    }
    let log = run_simulation(&scenario)?;
    let records: Vec<serde_json::Value> = log
        .records
        .iter()
        .map(|r| {
            serde_json::json!({
                "time": r.time, "position": r.pose.position, "yaw": r.pose.yaw,
                "velocity": r.velocity, "yaw_rate": r.yaw_rate, "mode": r.mode,
                "replans": r.replans, "min_obstacle_dis": r.min_obstacle_dis.is_finite().then_some(r.min_obstacle_dis),
            })
        })
        .collect();
    out.primary("sim_log", |w| log.write_csv(w), &records)?;
    out.extra("sim_summary.json", |w| {
        log.write_summary_json(&mut *w)?;
        writeln!(w)
    })?;
    let s = &log.summary;
    eprintln!(
        "{}: {} after {:.2} s, {} replans, min obstacle distance {}",
        if s.scenario.is_empty() { "scenario" } else { &s.scenario },
        s.final_mode,
        s.sim_time_s,
        s.replans,
        s.min_obstacle_dis.map_or("n/a".to_string(), |d| format!("{d:.3} m"))
    );
    Ok(s.completed)
}

fn run(cli: &Cli) -> Result<bool> {
    let out = Output {
        dir: cli.out_dir.clone(),
        format: cli.format,
    };
    let mut cfg = load_config(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.rng_seed = seed;
    }
    let seed = cfg.rng_seed;
    match &cli.command {
        Command::Smooth {
            input,
            samples_per_segment,
        } => cmd_smooth(&out, &cfg, input, *samples_per_segment).map(|_| true),
        Command::Plan { scene, algorithm, voxel } => cmd_plan(&out, &cfg, seed, scene, *algorithm, *voxel),
        Command::BenchPlanner {
            scene,
            trials,
            voxel,
            no_warmup,
            parallel,
        } => cmd_bench_planner(&out, cfg, seed, scene, *trials, *voxel, !no_warmup, *parallel).map(|_| true),
        Command::BenchMap {
            clouds_dir,
            cloud_format,
            origin,
            clouds,
            points,
            radius,
            resolution,
            capacity,
            buckets,
        } => {
            let opts = MapBenchOptions {
                clouds: *clouds,
                points: *points,
                radius: *radius,
                resolution: *resolution,
                capacity: *capacity,
                seed,
                buckets: *buckets,
            };
            cmd_bench_map(&out, opts, clouds_dir.as_deref(), *cloud_format, *origin).map(|_| true)
        }
        Command::Simulate { scenario } => cmd_simulate(&out, cli, scenario),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
