mod common;

use replan_core::bench::{histogram, run_map_bench, synthetic_scans, MapBenchOptions};

use common::{crop, VoxelRing};

#[test]
fn insertion_counts_match_voxel_hash() {
    let opts = MapBenchOptions {
        clouds: 25,
        capacity: 4,
        ..MapBenchOptions::default()
    };
    let scans = synthetic_scans(&opts);
    let rows = run_map_bench(&scans, &opts);
    let mut oracle = VoxelRing::new(opts.resolution, opts.capacity);
    let mut live = std::collections::VecDeque::new();
    for (scan, row) in scans.iter().zip(&rows) {
        let cropped = crop(&scan.cloud.points, &scan.origin, opts.radius);
        let want = oracle.insert(&cropped);
        assert_eq!(row.received, opts.points);
        assert_eq!(row.cropped, cropped.len());
        assert_eq!(row.inserted, want.inserted, "cloud {}", row.cloud);
        assert_eq!(row.deduplicated, want.deduplicated, "cloud {}", row.cloud);
        assert_eq!(row.evicted, want.evicted, "cloud {}", row.cloud);
        live.push_back(want.inserted);
        if live.len() > opts.capacity {
            live.pop_front();
        }
        assert_eq!(row.map_size, live.iter().sum::<usize>());
        assert!(row.elapsed_us > 0.0);
    }
}

#[test]
fn histogram_covers_every_cloud() {
    let opts = MapBenchOptions {
        clouds: 12,
        ..MapBenchOptions::default()
    };
    let rows = run_map_bench(&synthetic_scans(&opts), &opts);
    let times: Vec<f64> = rows.iter().map(|r| r.elapsed_us).collect();
    let h = histogram(&times, opts.buckets);
    assert_eq!(h.len(), opts.buckets);
    assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), rows.len());
    let lo = times.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(h[0].lo, lo);
    assert!((h.last().unwrap().hi - hi).abs() <= 1e-9 * hi);
    assert!(h.windows(2).all(|w| w[0].hi == w[1].lo));
}
