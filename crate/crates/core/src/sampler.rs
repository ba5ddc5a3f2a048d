//! Reduced search space: a prolate ellipsoid spanning start and goal.
//!
//! The ellipsoid is stored as a center plus `Σ = R · diag(a², b², c²) · Rᵀ`
//! where `a, b, c` are semi-axes in the local frame and `R` maps the local
//! `z` axis onto the start→goal direction. With this convention a point is
//! inside iff `(x − c)ᵀ Σ⁻¹ (x − c) ≤ 1`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::geometry::Point3;
use crate::obstacle_map::ObstacleMap;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("cannot align to a zero vector")]
    ZeroVector,
    #[error("start and goal coincide")]
    CoincidentEndpoints,
    #[error("conjugate diameter must be > 0 (got {0})")]
    BadConjugate(f64),
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    #[rustfmt::skip]
    let m = Matrix3::new(
        0.0, -v.z, v.y,
        v.z, 0.0, -v.x,
        -v.y, v.x, 0.0,
    );
    m
}

/// Rotation taking `(0, 0, 1)` onto the direction of `p`.
///
/// Rodrigues form `I + [v]ₓ + [v]ₓ² / (1 + c)` with `v = z × p̂`, `c = z · p̂`.
/// The aligned case returns the identity and the antipodal case a rotation
/// by π about the x axis.
pub fn rotation_align(p: &Point3) -> Result<Matrix3<f64>, SamplerError> {
    let dir = p.normalized().ok_or(SamplerError::ZeroVector)?.to_vector();
    let z = Vector3::z();
    let c = z.dot(&dir);
    if 1.0 + c < 1e-12 {
        return Ok(Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0)));
    }
    let v = z.cross(&dir);
    let k = skew(&v);
    Ok(Matrix3::identity() + k + k * k / (1.0 + c))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidRegion {
    pub center: Point3,
    pub sigma: Matrix3<f64>,
    pub rotation: Matrix3<f64>,
    /// Local-frame semi-axes `(d/2, d/2, L/2)`.
    pub semi_axes: Vector3<f64>,
    /// `L = ‖goal − start‖`.
    pub transverse: f64,
    pub conjugate: f64,
}

impl EllipsoidRegion {
    /// `(x − c)ᵀ Σ⁻¹ (x − c)`, evaluated in the local frame.
    pub fn quadratic_form(&self, x: &Point3) -> f64 {
        let local = self.rotation.transpose() * (*x - self.center).to_vector();
        local.component_div(&self.semi_axes).norm_squared()
    }

    pub fn contains(&self, x: &Point3) -> bool {
        self.quadratic_form(x) <= 1.0
    }

    pub fn volume(&self) -> f64 {
        4.0 / 3.0 * PI * self.semi_axes.x * self.semi_axes.y * self.semi_axes.z
    }

    /// Maps a point of the unit ball into the ellipsoid.
    pub fn from_unit_ball(&self, u: &Vector3<f64>) -> Point3 {
        let local = u.component_mul(&self.semi_axes);
        self.center + Point3::from_vector(&(self.rotation * local))
    }

    /// Uniform sample, ignoring obstacles.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point3 {
        self.from_unit_ball(&unit_ball_sample(rng))
    }

    /// A ball of radius `r` around `center` expressed as a region.
    pub fn ball(center: Point3, r: f64) -> Self {
        let semi = Vector3::new(r, r, r);
        Self {
            center,
            sigma: Matrix3::from_diagonal(&semi.component_mul(&semi)),
            rotation: Matrix3::identity(),
            semi_axes: semi,
            transverse: 2.0 * r,
            conjugate: 2.0 * r,
        }
    }
}

/// Ellipsoid centered between `x_start` and `x_goal` with semi-axes
/// `L/2` along goal − start and `d/2` across; both endpoints sit on its surface.
pub fn build_region(x_start: Point3, x_goal: Point3, d: f64) -> Result<EllipsoidRegion, SamplerError> {
    if !(d.is_finite() && d > 0.0) {
        return Err(SamplerError::BadConjugate(d));
    }
    let axis = x_goal - x_start;
    let l = axis.norm();
    if l <= 1e-12 {
        return Err(SamplerError::CoincidentEndpoints);
    }
    let rotation = rotation_align(&axis)?;
    let semi_axes = Vector3::new(d / 2.0, d / 2.0, l / 2.0);
    let diag = Matrix3::from_diagonal(&semi_axes.component_mul(&semi_axes));
    let sigma = rotation * diag * rotation.transpose();
    // Symmetrize away rounding.
    let sigma = (sigma + sigma.transpose()) * 0.5;
    Ok(EllipsoidRegion {
        center: x_start.midpoint(&x_goal),
        sigma,
        rotation,
        semi_axes,
        transverse: l,
        conjugate: d,
    })
}

/// Uniform point in the unit ball: normalized Gaussian direction scaled by `U^(1/3)`.
pub fn unit_ball_sample<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    loop {
        let g = Vector3::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        let n = g.norm();
        if n > 1e-12 {
            let r = rng.random::<f64>().cbrt();
            return g * (r / n);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub points: Vec<Point3>,
    /// Set when the retry budget ran out before `npts` free points were found.
    pub short: bool,
    pub rejected: usize,
}

/// Up to `npts` uniform samples inside `region` that keep `clearance` from
/// every obstacle in `map`. Each requested point gets `retries` attempts.
pub fn sample_free<R: Rng + ?Sized>(
    region: &EllipsoidRegion,
    npts: usize,
    rng: &mut R,
    map: &ObstacleMap,
    clearance: f64,
    retries: usize,
) -> SampleBatch {
    let mut points = Vec::with_capacity(npts);
    let mut rejected = 0;
    let mut short = false;
    for _ in 0..npts {
        let mut found = None;
        for _ in 0..retries.max(1) {
            let x = region.sample(rng);
            if map.point_clear(&x, clearance) {
                found = Some(x);
                break;
            }
            rejected += 1;
        }
        match found {
            Some(x) => points.push(x),
            None => {
                short = true;
                break;
            }
        }
    }
    if short {
        log::warn!("free-space sampling returned {} of {} points", points.len(), npts);
    }
    SampleBatch {
        points,
        short,
        rejected,
    }
}

/// `λ(ellipsoid) / λ(free space)` with the exact volume `(π/6)·L·d²`.
pub fn volume_ratio(region: &EllipsoidRegion, free_space_volume: f64) -> f64 {
    PI / 6.0 * region.transverse * region.conjugate * region.conjugate / free_space_volume
}
