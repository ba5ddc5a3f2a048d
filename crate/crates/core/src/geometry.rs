//! Geometric primitives shared by every other module.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("non-finite value: {0}")]
    NonFinite(f64),
    #[error("non-finite point ({0}, {1}, {2})")]
    NonFinitePoint(f64, f64, f64),
    #[error("timestamps must be strictly increasing and match the waypoint count")]
    BadTimestamps,
}

/// A position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Checked constructor for data coming from outside the process.
    pub fn try_new(x: f64, y: f64, z: f64) -> Result<Self, GeomError> {
        let p = Self::new(x, y, z);
        if p.is_finite() {
            Ok(p)
        } else {
            Err(GeomError::NonFinitePoint(x, y, z))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(&self, o: &Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(&self, o: &Point3) -> Point3 {
        Point3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(&self, o: &Point3) -> f64 {
        (*self - *o).norm()
    }

    pub fn distance_squared(&self, o: &Point3) -> f64 {
        (*self - *o).norm_squared()
    }

    /// Unit vector in the same direction, or `None` for (near) zero vectors.
    pub fn normalized(&self) -> Option<Point3> {
        let n = self.norm();
        if n > 1e-12 {
            Some(*self / n)
        } else {
            None
        }
    }

    pub fn lerp(&self, o: &Point3, t: f64) -> Point3 {
        *self + (*o - *self) * t
    }

    pub fn midpoint(&self, o: &Point3) -> Point3 {
        self.lerp(o, 0.5)
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn component(&self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            2 => self.z,
            _ => panic!("axis {axis} out of range"),
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        p.as_array()
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Point3 {
    fn add_assign(&mut self, o: Point3) {
        *self = *self + o;
    }
}

impl SubAssign for Point3 {
    fn sub_assign(&mut self, o: Point3) {
        *self = *self - o;
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Point3 {
    type Output = Point3;
    fn div(self, s: f64) -> Point3 {
        Point3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn normalize_yaw(a: f64) -> Result<f64, GeomError> {
    if !a.is_finite() {
        return Err(GeomError::NonFinite(a));
    }
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    // rem_euclid maps -π to +π already; this catches the rounding edge.
    if r <= -PI {
        r += 2.0 * PI;
    }
    Ok(r)
}

/// Position plus heading. Yaw is kept in `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub position: Point3,
    #[serde(default)]
    pub yaw: f64,
}

impl Pose {
    pub fn new(position: Point3, yaw: f64) -> Result<Self, GeomError> {
        Ok(Self {
            position,
            yaw: normalize_yaw(yaw)?,
        })
    }

    pub fn at(position: Point3) -> Self {
        Self { position, yaw: 0.0 }
    }
}

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn new(min: Point3, max: Point3) -> Self {
        Self { min, max }
    }

    pub fn from_point(p: Point3) -> Self {
        Self { min: p, max: p }
    }

    pub fn from_points<'a, I: IntoIterator<Item = &'a Point3>>(pts: I) -> Option<Self> {
        let mut it = pts.into_iter();
        let first = *it.next()?;
        Some(it.fold(Aabb::from_point(first), |b, p| b.union_point(p)))
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb {
            min: Point3::new(
                self.min.x.min(o.min.x),
                self.min.y.min(o.min.y),
                self.min.z.min(o.min.z),
            ),
            max: Point3::new(
                self.max.x.max(o.max.x),
                self.max.y.max(o.max.y),
                self.max.z.max(o.max.z),
            ),
        }
    }

    pub fn union_point(&self, p: &Point3) -> Aabb {
        self.union(&Aabb::from_point(*p))
    }

    pub fn inflate(&self, r: f64) -> Aabb {
        let d = Point3::new(r, r, r);
        Aabb {
            min: self.min - d,
            max: self.max + d,
        }
    }

    pub fn extent(&self) -> Point3 {
        self.max - self.min
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e.x * e.y * e.z
    }

    pub fn center(&self) -> Point3 {
        self.min.midpoint(&self.max)
    }

    pub fn contains(&self, p: &Point3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    pub fn contains_box(&self, o: &Aabb) -> bool {
        self.contains(&o.min) && self.contains(&o.max)
    }

    pub fn intersects(&self, o: &Aabb) -> bool {
        self.min.x <= o.max.x
            && self.max.x >= o.min.x
            && self.min.y <= o.max.y
            && self.max.y >= o.min.y
            && self.min.z <= o.max.z
            && self.max.z >= o.min.z
    }

    /// Squared distance from `p` to the closest point of the box (0 inside).
    pub fn distance_squared(&self, p: &Point3) -> f64 {
        let dx = (self.min.x - p.x).max(0.0).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(0.0).max(p.y - self.max.y);
        let dz = (self.min.z - p.z).max(0.0).max(p.z - self.max.z);
        dx * dx + dy * dy + dz * dz
    }
}

/// Euclidean distance from `p` to the closed segment `a`–`b`.
pub fn point_segment_distance(p: &Point3, a: &Point3, b: &Point3) -> f64 {
    let ab = *b - *a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((*p - *a).dot(&ab) / len2).clamp(0.0, 1.0);
    p.distance(&(*a + ab * t))
}

/// Sum of Euclidean distances between consecutive points.
pub fn polyline_length(points: &[Point3]) -> f64 {
    points.windows(2).map(|w| w[0].distance(&w[1])).sum()
}

/// An ordered waypoint sequence.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub waypoints: Vec<Point3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamps: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn new(waypoints: Vec<Point3>) -> Self {
        Self {
            waypoints,
            timestamps: None,
        }
    }

    pub fn with_timestamps(waypoints: Vec<Point3>, timestamps: Vec<f64>) -> Result<Self, GeomError> {
        let increasing = timestamps.windows(2).all(|w| w[1] > w[0]);
        if timestamps.len() != waypoints.len() || !increasing {
            return Err(GeomError::BadTimestamps);
        }
        Ok(Self {
            waypoints,
            timestamps: Some(timestamps),
        })
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn front(&self) -> Option<&Point3> {
        self.waypoints.first()
    }

    pub fn back(&self) -> Option<&Point3> {
        self.waypoints.last()
    }

    pub fn total_length(&self) -> f64 {
        trajectory_total_length(self)
    }

    pub fn points(&self) -> &[Point3] {
        &self.waypoints
    }

    pub fn push(&mut self, p: Point3) {
        self.waypoints.push(p);
        self.timestamps = None;
    }

    pub fn pop_front(&mut self) -> Option<Point3> {
        if self.waypoints.is_empty() {
            return None;
        }
        if let Some(ts) = self.timestamps.as_mut() {
            ts.remove(0);
        }
        Some(self.waypoints.remove(0))
    }

    /// Resamples to `n` points evenly spaced in arc length. Endpoints are kept.
    pub fn resample(&self, n: usize) -> Trajectory {
        Trajectory::new(resample_by_arc_length(&self.waypoints, n))
    }
}

impl From<Vec<Point3>> for Trajectory {
    fn from(v: Vec<Point3>) -> Self {
        Trajectory::new(v)
    }
}

/// Σ‖w_{i+1} − w_i‖; zero for fewer than two waypoints.
pub fn trajectory_total_length(t: &Trajectory) -> f64 {
    polyline_length(&t.waypoints)
}

pub fn resample_by_arc_length(points: &[Point3], n: usize) -> Vec<Point3> {
    if n == 0 || points.is_empty() {
        return Vec::new();
    }
    if points.len() == 1 || n == 1 {
        return vec![points[0]; n];
    }
    let mut cum = Vec::with_capacity(points.len());
    cum.push(0.0);
    for w in points.windows(2) {
        let last = *cum.last().unwrap();
        cum.push(last + w[0].distance(&w[1]));
    }
    let total = *cum.last().unwrap();
    if total == 0.0 {
        return vec![points[0]; n];
    }
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for k in 0..n {
        let s = total * k as f64 / (n - 1) as f64;
        while seg + 2 < cum.len() && cum[seg + 1] < s {
            seg += 1;
        }
        let span = cum[seg + 1] - cum[seg];
        let t = if span > 0.0 { ((s - cum[seg]) / span).clamp(0.0, 1.0) } else { 0.0 };
        out.push(points[seg].lerp(&points[seg + 1], t));
    }
    out[0] = points[0];
    out[n - 1] = *points.last().unwrap();
    out
}
