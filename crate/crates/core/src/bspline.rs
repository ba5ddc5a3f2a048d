//! Quadratic (order 3) B-splines: Cox-de Boor basis, per-span basis matrices
//! and waypoint smoothing.
//!
//! Blending is written as `[1 u u²] · M(i) · [p_{i-2} p_{i-1} p_i]ᵀ` with
//! `u = (t - t_i) / (t_{i+1} - t_i)`. The matrix form is checked against the
//! recursion in the tests; the recursion is the ground truth.

use nalgebra::{Matrix3, RowVector3};
use thiserror::Error;

use crate::geometry::{polyline_length, Point3, Trajectory};

pub const DEFAULT_SAMPLES_PER_SEGMENT: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BsplineError {
    #[error("knot vector must be non-decreasing and finite")]
    NotMonotone,
    #[error("need knot index {needed} but only {available} knots exist")]
    InsufficientKnots { needed: usize, available: usize },
    #[error("order must be 1, 2 or 3 (got {0})")]
    UnsupportedOrder(usize),
    #[error("degenerate knot span at index {0}")]
    DegenerateSpan(usize),
    #[error("segment index {0} must be at least 1")]
    SegmentIndex(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector(Vec<f64>);

impl KnotVector {
    pub fn new(knots: Vec<f64>) -> Result<Self, BsplineError> {
        let finite = knots.iter().all(|k| k.is_finite());
        if !finite || knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(BsplineError::NotMonotone);
        }
        Ok(Self(knots))
    }

    pub fn uniform(n: usize) -> Self {
        Self((0..n).map(|i| i as f64).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn get(&self, i: usize) -> Result<f64, BsplineError> {
        self.0.get(i).copied().ok_or(BsplineError::InsufficientKnots {
            needed: i,
            available: self.0.len(),
        })
    }
}

/// Ratio with the 0/0 := 0 convention used by the recursion.
fn safe_ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Normalized basis function `q_{j,k}(t)` by the Cox-de Boor recursion.
pub fn basis_coxdeboor(j: usize, k: usize, t: f64, knots: &KnotVector) -> Result<f64, BsplineError> {
    if !(1..=3).contains(&k) {
        return Err(BsplineError::UnsupportedOrder(k));
    }
    knots.get(j + k)?;
    Ok(coxdeboor_rec(j, k, t, knots.as_slice()))
}

fn coxdeboor_rec(j: usize, k: usize, t: f64, kn: &[f64]) -> f64 {
    if k == 1 {
        return if kn[j] <= t && t < kn[j + 1] { 1.0 } else { 0.0 };
    }
    let left = safe_ratio(t - kn[j], kn[j + k - 1] - kn[j]) * coxdeboor_rec(j, k - 1, t, kn);
    let right = safe_ratio(kn[j + k] - t, kn[j + k] - kn[j + 1]) * coxdeboor_rec(j + 1, k - 1, t, kn);
    left + right
}

/// Basis matrix of span `[t_i, t_{i+1})`; rows are the `1, u, u²` coefficients,
/// columns the control points `p_{i-2}, p_{i-1}, p_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisMatrix(pub Matrix3<f64>);

impl BasisMatrix {
    /// The three blending weights at `u`.
    pub fn weights(&self, u: f64) -> [f64; 3] {
        let w = RowVector3::new(1.0, u, u * u) * self.0;
        [w[0], w[1], w[2]]
    }

    pub fn evaluate(&self, ctrl: [Point3; 3], u: f64) -> Point3 {
        let w = self.weights(u);
        ctrl[0] * w[0] + ctrl[1] * w[1] + ctrl[2] * w[2]
    }
}

/// Basis matrix for span `i` of a quadratic spline. Needs `t_{i-1}..t_{i+2}`
/// and a non-empty span.
pub fn basis_matrix(i: usize, knots: &KnotVector) -> Result<BasisMatrix, BsplineError> {
    if i == 0 {
        return Err(BsplineError::SegmentIndex(i));
    }
    let a = knots.get(i - 1)?;
    let b = knots.get(i)?;
    let c = knots.get(i + 1)?;
    let d = knots.get(i + 2)?;
    let span = c - b;
    if span <= 0.0 {
        return Err(BsplineError::DegenerateSpan(i));
    }
    // span > 0 implies both denominators are positive.
    let left = span / (c - a);
    let right = span / (d - b);
    #[rustfmt::skip]
    let m = Matrix3::new(
        left,        (b - a) / (c - a), 0.0,
        -2.0 * left, 2.0 * left,        0.0,
        left,        -(left + right),   right,
    );
    Ok(BasisMatrix(m))
}

/// Clamped knots from chord-length parameters averaged over the degree.
///
/// Returns `n + 3` knots for `n` control points, normalized to `[0, 1]`, or
/// `None` when all control points coincide.
pub fn chord_length_knots(ctrl: &[Point3]) -> Option<KnotVector> {
    let n = ctrl.len();
    if n < 3 {
        return None;
    }
    let total = polyline_length(ctrl);
    if total <= 0.0 {
        return None;
    }
    let mut params = Vec::with_capacity(n);
    let mut acc = 0.0;
    params.push(0.0);
    for w in ctrl.windows(2) {
        acc += w[0].distance(&w[1]);
        params.push(acc / total);
    }
    let mut knots = vec![0.0; 3];
    for j in 1..=(n - 3) {
        knots.push(0.5 * (params[j] + params[j + 1]));
    }
    knots.extend_from_slice(&[1.0, 1.0, 1.0]);
    KnotVector::new(knots).ok()
}

/// Samples the quadratic B-spline whose control polygon is `waypoints`.
///
/// Output holds `(spans * samples_per_segment) + 1` points where `spans` is
/// the number of non-empty knot spans (`n - 2` for `n` distinct-parameter
/// control points). First and last points equal the first and last
/// waypoints. Inputs with fewer than three waypoints (or all coincident) are
/// returned unchanged.
pub fn smooth_trajectory(waypoints: &Trajectory, samples_per_segment: usize) -> Trajectory {
    let ctrl = &waypoints.waypoints;
    let samples = samples_per_segment.max(1);
    let Some(knots) = chord_length_knots(ctrl) else {
        return waypoints.clone();
    };
    let kn = knots.as_slice();
    let mut out = Vec::with_capacity((ctrl.len() - 2) * samples + 1);
    for i in 2..=ctrl.len() - 1 {
        if kn[i + 1] <= kn[i] {
            continue;
        }
        let m = basis_matrix(i, &knots).expect("clamped knots cover every span");
        let cp = [ctrl[i - 2], ctrl[i - 1], ctrl[i]];
        for s in 0..samples {
            out.push(m.evaluate(cp, s as f64 / samples as f64));
        }
    }
    out.push(*ctrl.last().unwrap());
    out[0] = ctrl[0];
    Trajectory::new(out)
}
