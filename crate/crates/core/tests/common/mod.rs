//! Brute-force reference implementations the library is checked against.
//! Nothing here calls into the code under test except for plain data types.

#![allow(dead_code)]

use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};

use nalgebra::DMatrix;
use replan_core::Point3;

/// Quadratic B-spline value on span `[t_k, t_{k+1})` by de Boor's algorithm.
/// `ctrl` holds the three active coefficients `c_{k-2}, c_{k-1}, c_k`.
pub fn de_boor_quadratic(knots: &[f64], k: usize, ctrl: [f64; 3], t: f64) -> f64 {
    const P: usize = 2;
    let mut d = ctrl;
    for r in 1..=P {
        for j in (r..=P).rev() {
            let lo = knots[j + k - P];
            let hi = knots[j + 1 + k - r];
            let alpha = (t - lo) / (hi - lo);
            d[j] = (1.0 - alpha) * d[j - 1] + alpha * d[j];
        }
    }
    d[P]
}

/// The three blending weights of span `k` at `t`, one unit coefficient at a time.
pub fn de_boor_weights(knots: &[f64], k: usize, t: f64) -> [f64; 3] {
    [
        de_boor_quadratic(knots, k, [1.0, 0.0, 0.0], t),
        de_boor_quadratic(knots, k, [0.0, 1.0, 0.0], t),
        de_boor_quadratic(knots, k, [0.0, 0.0, 1.0], t),
    ]
}

pub fn point_segment_distance(p: &Point3, a: &Point3, b: &Point3) -> f64 {
    let ab = [b.x - a.x, b.y - a.y, b.z - a.z];
    let ap = [p.x - a.x, p.y - a.y, p.z - a.z];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2];
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((ap[0] * ab[0] + ap[1] * ab[1] + ap[2] * ab[2]) / len2).clamp(0.0, 1.0)
    };
    let c = [a.x + t * ab[0], a.y + t * ab[1], a.z + t * ab[2]];
    ((p.x - c[0]).powi(2) + (p.y - c[1]).powi(2) + (p.z - c[2]).powi(2)).sqrt()
}

pub fn dist(a: &Point3, b: &Point3) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2) + (a.z - b.z).powi(2)).sqrt()
}

pub fn linear_nearest(points: &[Point3], q: &Point3) -> Option<(Point3, f64)> {
    points
        .iter()
        .map(|p| (*p, dist(p, q)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

pub fn linear_point_clear(points: &[Point3], q: &Point3, clearance: f64) -> bool {
    points.iter().all(|p| dist(p, q) >= clearance)
}

pub fn linear_segment_free(points: &[Point3], a: &Point3, b: &Point3, clearance: f64) -> bool {
    points.iter().all(|p| point_segment_distance(p, a, b) >= clearance)
}

fn key(p: &Point3, res: f64) -> (i64, i64, i64) {
    (
        (p.x / res).floor() as i64,
        (p.y / res).floor() as i64,
        (p.z / res).floor() as i64,
    )
}

type Key = (i64, i64, i64);

/// Ring of deduplicated clouds: a point survives when its voxel is not held
/// by any retained cloud nor by an earlier point of its own cloud.
pub struct VoxelRing {
    res: f64,
    capacity: usize,
    clouds: VecDeque<Vec<(Key, Point3)>>,
    occupied: HashSet<Key>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RingCounts {
    pub inserted: usize,
    pub deduplicated: usize,
    pub evicted: usize,
}

impl VoxelRing {
    pub fn new(res: f64, capacity: usize) -> Self {
        Self {
            res,
            capacity: capacity.max(1),
            clouds: VecDeque::new(),
            occupied: HashSet::new(),
        }
    }

    pub fn insert(&mut self, points: &[Point3]) -> RingCounts {
        let mut evicted = 0;
        while self.clouds.len() >= self.capacity {
            let old = self.clouds.pop_front().unwrap();
            evicted += old.len();
            for (k, _) in old {
                self.occupied.remove(&k);
            }
        }
        let mut kept = Vec::new();
        let mut dup = 0;
        for p in points {
            let k = key(p, self.res);
            if self.occupied.insert(k) {
                kept.push((k, *p));
            } else {
                dup += 1;
            }
        }
        let inserted = kept.len();
        self.clouds.push_back(kept);
        RingCounts {
            inserted,
            deduplicated: dup,
            evicted,
        }
    }

    pub fn points(&self) -> Vec<Point3> {
        self.clouds.iter().flatten().map(|(_, p)| *p).collect()
    }
}

pub fn crop(points: &[Point3], center: &Point3, radius: f64) -> Vec<Point3> {
    points.iter().copied().filter(|p| dist(p, center) <= radius).collect()
}

/// Dense tridiagonal (2, −1) matrix.
pub fn second_difference(n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = 2.0;
        if i + 1 < n {
            a[(i, i + 1)] = -1.0;
            a[(i + 1, i)] = -1.0;
        }
    }
    a
}

/// `½ Σ_dims qᵀAq` with the dense matrix.
pub fn dense_u_path(points: &[Point3]) -> f64 {
    let a = second_difference(points.len());
    let mut total = 0.0;
    for axis in 0..3 {
        let q = DMatrix::from_iterator(points.len(), 1, points.iter().map(|p| p.as_array()[axis]));
        total += (q.transpose() * &a * &q)[(0, 0)];
    }
    0.5 * total
}

/// Cells of a regular grid, blocked when some obstacle is strictly closer
/// than `clearance` to the cell center.
pub struct BruteGrid {
    pub origin: Point3,
    pub voxel: f64,
    pub dims: [usize; 3],
    pub blocked: Vec<bool>,
}

impl BruteGrid {
    pub fn new(origin: Point3, extent: Point3, voxel: f64, obstacles: &[Point3], clearance: f64) -> Self {
        let dims = [extent.x, extent.y, extent.z].map(|e| ((e / voxel).ceil() as usize).max(1));
        let mut g = Self {
            origin,
            voxel,
            dims,
            blocked: Vec::new(),
        };
        g.blocked = (0..dims[0] * dims[1] * dims[2])
            .map(|i| {
                let c = g.center(i);
                obstacles.iter().any(|o| dist(o, &c) < clearance)
            })
            .collect();
        g
    }

    pub fn coords(&self, i: usize) -> [usize; 3] {
        [
            i % self.dims[0],
            (i / self.dims[0]) % self.dims[1],
            i / (self.dims[0] * self.dims[1]),
        ]
    }

    pub fn center(&self, i: usize) -> Point3 {
        let c = self.coords(i);
        Point3::new(
            self.origin.x + (c[0] as f64 + 0.5) * self.voxel,
            self.origin.y + (c[1] as f64 + 0.5) * self.voxel,
            self.origin.z + (c[2] as f64 + 0.5) * self.voxel,
        )
    }

    pub fn index_of(&self, p: &Point3) -> usize {
        let c = [p.x - self.origin.x, p.y - self.origin.y, p.z - self.origin.z]
            .map(|v| (v / self.voxel).floor() as usize);
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    /// Shortest 26-connected path length between two free cells.
    pub fn dijkstra(&self, s: usize, t: usize) -> Option<f64> {
        #[derive(PartialEq)]
        struct Item(f64, usize);
        impl Eq for Item {}
        impl PartialOrd for Item {
            fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(o))
            }
        }
        impl Ord for Item {
            fn cmp(&self, o: &Self) -> std::cmp::Ordering {
                o.0.total_cmp(&self.0)
            }
        }
        let mut best: HashMap<usize, f64> = HashMap::new();
        let mut heap = BinaryHeap::new();
        best.insert(s, 0.0);
        heap.push(Item(0.0, s));
        while let Some(Item(d, u)) = heap.pop() {
            if u == t {
                return Some(d);
            }
            if d > best[&u] {
                continue;
            }
            let c = self.coords(u).map(|v| v as i64);
            for dz in -1i64..=1 {
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if (dx, dy, dz) == (0, 0, 0) {
                            continue;
                        }
                        let n = [c[0] + dx, c[1] + dy, c[2] + dz];
                        if n.iter().zip(self.dims).any(|(&v, d)| v < 0 || v >= d as i64) {
                            continue;
                        }
                        let j = n[0] as usize + self.dims[0] * (n[1] as usize + self.dims[1] * n[2] as usize);
                        if self.blocked[j] {
                            continue;
                        }
                        let step = self.voxel * ((dx.abs() + dy.abs() + dz.abs()) as f64).sqrt();
                        let nd = d + step;
                        if best.get(&j).is_none_or(|&old| nd < old) {
                            best.insert(j, nd);
                            heap.push(Item(nd, j));
                        }
                    }
                }
            }
        }
        None
    }
}

/// Pearson statistic of observed counts against equal expected counts.
pub fn chi_square_uniform(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum()
}
