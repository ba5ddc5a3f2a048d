//! Path smoothness energy with the tridiagonal (2, −1) matrix and the
//! energy-ratio path cost.

use std::f64::consts::PI;

use crate::geometry::{resample_by_arc_length, Point3, Trajectory};

pub const DEFAULT_COST_SAMPLES: usize = 50;
const ENERGY_FLOOR: f64 = 1e-12;

/// Implicit `n × n` matrix with 2 on the diagonal and −1 on both off-diagonals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SecondDifferenceMatrix {
    pub n: usize,
}

impl SecondDifferenceMatrix {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn apply(&self, q: &[f64]) -> Vec<f64> {
        assert_eq!(q.len(), self.n, "dimension mismatch");
        (0..self.n)
            .map(|i| {
                let prev = if i > 0 { q[i - 1] } else { 0.0 };
                let next = if i + 1 < self.n { q[i + 1] } else { 0.0 };
                2.0 * q[i] - prev - next
            })
            .collect()
    }

    /// `qᵀ A q`.
    pub fn quadratic_form(&self, q: &[f64]) -> f64 {
        self.apply(q).iter().zip(q).map(|(a, b)| a * b).sum()
    }

    /// Closed-form spectrum `2 − 2 cos(kπ/(n+1))`, `k = 1..n`.
    pub fn eigenvalues(&self) -> Vec<f64> {
        (1..=self.n)
            .map(|k| 2.0 - 2.0 * (k as f64 * PI / (self.n + 1) as f64).cos())
            .collect()
    }

    pub fn dense(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| {
            if i == j {
                2.0
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        })
    }
}

fn coord(points: &[Point3], axis: usize) -> Vec<f64> {
    points.iter().map(|p| p.component(axis)).collect()
}

/// `Σ_dims qᵀAq` over the full waypoint list; 0 for fewer than 3 waypoints.
pub fn path_energy(q: &Trajectory) -> f64 {
    energy_of(&q.waypoints)
}

fn energy_of(points: &[Point3]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let a = SecondDifferenceMatrix::new(points.len());
    (0..3).map(|ax| a.quadratic_form(&coord(points, ax))).sum()
}

/// `U_path = ½ Σ_dims qᵀAq`, the potential whose gradient is `Aq`.
pub fn u_path(q: &Trajectory) -> f64 {
    0.5 * path_energy(q)
}

/// `∂U_path/∂q_i = 2q_i − q_{i+1} − q_{i−1}` per waypoint (missing neighbours are 0).
pub fn u_path_gradient(q: &Trajectory) -> Vec<Point3> {
    let pts = &q.waypoints;
    let n = pts.len();
    (0..n)
        .map(|i| {
            let prev = if i > 0 { pts[i - 1] } else { Point3::ORIGIN };
            let next = if i + 1 < n { pts[i + 1] } else { Point3::ORIGIN };
            pts[i] * 2.0 - prev - next
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathCost {
    pub value: f64,
    /// The reference energy was below the floor and was clamped.
    pub floored: bool,
}

/// Energy ratio of `q` against `reference` after resampling both to
/// [`DEFAULT_COST_SAMPLES`] points by arc length.
pub fn path_cost(q: &Trajectory, reference: &Trajectory) -> PathCost {
    path_cost_with(q, reference, DEFAULT_COST_SAMPLES)
}

/// Both paths are expressed relative to the reference's first waypoint, so
/// the ratio is unchanged by any rigid motion applied to both.
pub fn path_cost_with(q: &Trajectory, reference: &Trajectory, n: usize) -> PathCost {
    let origin = reference.front().or(q.front()).copied().unwrap_or_default();
    let shift = |pts: &[Point3]| -> Vec<Point3> {
        resample_by_arc_length(pts, n).into_iter().map(|p| p - origin).collect()
    };
    let num = energy_of(&shift(&q.waypoints));
    let den = energy_of(&shift(&reference.waypoints));
    let floored = den < ENERGY_FLOOR;
    PathCost {
        value: num / den.max(ENERGY_FLOOR),
        floored,
    }
}
