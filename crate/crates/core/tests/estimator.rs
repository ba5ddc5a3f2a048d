use proptest::prelude::*;
use replan_core::estimator::{densify, densify_all, needs_replan, split_target, EstimatorState};
use replan_core::geometry::{normalize_yaw, trajectory_total_length};
use replan_core::{MapConfig, ObstacleMap, Point3, Pose, Trajectory};

fn point() -> impl Strategy<Value = Point3> {
    (-30.0f64..30.0, -30.0f64..30.0, -30.0f64..30.0).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

fn max_gap(pts: &[Point3]) -> f64 {
    pts.windows(2).map(|w| w[0].distance(&w[1])).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy)]
enum Step {
    Consume(f64),
    Refill,
}

fn step() -> impl Strategy<Value = Step> {
    prop_oneof![(0.0f64..1.0).prop_map(Step::Consume), Just(Step::Refill)]
}

fn is_suffix(tail: &[Point3], whole: &[Point3]) -> bool {
    tail.len() <= whole.len() && whole[whole.len() - tail.len()..] == *tail
}

proptest! {
    #[test]
    fn densify_bounds_gaps(a in point(), b in point(), d in 0.2f64..8.0) {
        let out = densify(a, b, d);
        prop_assert_eq!(out[0], a);
        prop_assert_eq!(*out.last().unwrap(), b);
        prop_assert!(max_gap(&out) <= d + 1e-9, "gap {} > {d}", max_gap(&out));
    }

    #[test]
    fn densify_all_bounds_gaps(pts in prop::collection::vec(point(), 2..8), d in 0.5f64..8.0) {
        let out = densify_all(&pts, d);
        prop_assert!(max_gap(&out) <= d + 1e-9);
        for p in &pts {
            prop_assert!(out.contains(p));
        }
    }

    #[test]
    fn window_plus_rest_stays_a_suffix(
        pts in prop::collection::vec(point(), 2..40),
        dis in 1.0f64..20.0,
        steps in prop::collection::vec(step(), 0..60),
    ) {
        let target = Trajectory::new(pts.clone());
        let mut est = EstimatorState::new(&target, Pose::at(pts[0]), dis, 0.5);
        for s in steps {
            match s {
                Step::Consume(f) => {
                    // Put the vehicle near the window front so some waypoints are consumed.
                    if let Some(front) = est.t_online.front().copied() {
                        est.p_current = Pose::at(front + Point3::new(f * 0.6, 0.0, 0.0));
                    }
                    est.consume_reached();
                }
                Step::Refill => est.refill_online(),
            }
            let joined: Vec<Point3> = est.t_online.waypoints.iter().chain(&est.t_rest.waypoints).copied().collect();
            prop_assert!(is_suffix(&joined, &pts));
            // The window overshoots the replanning distance by at most its last gap.
            let w = &est.t_online.waypoints;
            if w.len() >= 2 {
                let last_gap = w[w.len() - 2].distance(&w[w.len() - 1]);
                prop_assert!(trajectory_total_length(&est.t_online) - last_gap <= dis + 1e-9);
            }
        }
    }

    #[test]
    fn split_is_a_partition(pts in prop::collection::vec(point(), 1..30), dis in 0.5f64..30.0) {
        let (online, rest) = split_target(&Trajectory::new(pts.clone()), dis);
        let joined: Vec<Point3> = online.waypoints.iter().chain(&rest.waypoints).copied().collect();
        prop_assert_eq!(joined, pts);
        let w = &online.waypoints;
        if w.len() >= 2 {
            prop_assert!(online.total_length() - w[w.len() - 2].distance(&w[w.len() - 1]) <= dis + 1e-9);
        }
    }

    #[test]
    fn total_length_is_rigid_invariant(
        pts in prop::collection::vec(point(), 1..30),
        axis in point(),
        angle in -3.0f64..3.0,
        t in point(),
    ) {
        let Some(axis) = axis.normalized() else { return Ok(()) };
        let r = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_unchecked(axis.to_vector()), angle);
        let moved: Vec<Point3> = pts.iter().map(|p| Point3::from_vector(&(r * p.to_vector())) + t).collect();
        let a = trajectory_total_length(&Trajectory::new(pts));
        let b = trajectory_total_length(&Trajectory::new(moved));
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn normalize_yaw_is_idempotent(a in -1e3f64..1e3) {
        let once = normalize_yaw(a).unwrap();
        prop_assert!(once > -std::f64::consts::PI && once <= std::f64::consts::PI);
        prop_assert_eq!(normalize_yaw(once).unwrap(), once);
    }
}

#[test]
fn replan_trigger_is_strict() {
    let map = ObstacleMap::from_points(&[Point3::new(5.0, 0.0, 0.0)], MapConfig::default());
    assert!(!needs_replan(&Pose::at(Point3::ORIGIN), &map, 5.0));
    assert!(needs_replan(&Pose::at(Point3::new(0.01, 0.0, 0.0)), &map, 5.0));
    assert!(!needs_replan(&Pose::at(Point3::ORIGIN), &ObstacleMap::default(), 5.0));
}

#[test]
fn replacement_tolerances() {
    let target = Trajectory::new((0..10).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect());
    let mut est = EstimatorState::new(&target, Pose::at(Point3::ORIGIN), 5.0, 0.2);
    let end = *est.t_online.back().unwrap();
    let off = Trajectory::new(vec![Point3::ORIGIN, end + Point3::new(0.0, 1.0, 0.0)]);
    assert!(est.replace_online(off, 0.3).is_err());
    let ok = Trajectory::new(vec![Point3::ORIGIN, Point3::new(2.0, 1.0, 0.0), end]);
    est.replace_online(ok.clone(), 0.3).unwrap();
    assert_eq!(est.t_online, ok);
}
