//! Kinematic waypoint follower: constant-speed velocity toward the next
//! waypoint plus a proportional, rate-limited yaw controller.

use serde::{Deserialize, Serialize};

use crate::geometry::{normalize_yaw, Point3, Pose, Trajectory};

/// Waypoints closer than this to the vehicle are skipped when picking a heading.
const AT_WAYPOINT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FollowerGains {
    /// Proportional yaw gain, 1/s.
    pub k_yaw: f64,
    /// rad/s.
    pub max_yaw_rate: f64,
}

impl Default for FollowerGains {
    fn default() -> Self {
        Self {
            k_yaw: 1.5,
            max_yaw_rate: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowerCommand {
    /// Pose after integrating the command over one step.
    pub pose: Pose,
    pub velocity: Point3,
    pub yaw_rate: f64,
}

impl FollowerCommand {
    pub fn hover(pose: Pose) -> Self {
        Self {
            pose,
            velocity: Point3::ORIGIN,
            yaw_rate: 0.0,
        }
    }
}

/// [`step_follower_with`] using the default gains.
pub fn step_follower(pose: &Pose, t_online: &Trajectory, speed: f64, dt: f64) -> FollowerCommand {
    step_follower_with(pose, t_online, speed, dt, &FollowerGains::default())
}

/// One explicit Euler step toward the first waypoint of `t_online` that is
/// not already under the vehicle. Hovers when there is none.
pub fn step_follower_with(
    pose: &Pose,
    t_online: &Trajectory,
    speed: f64,
    dt: f64,
    gains: &FollowerGains,
) -> FollowerCommand {
    let Some(next) = t_online.waypoints.iter().find(|w| w.distance(&pose.position) > AT_WAYPOINT) else {
        return FollowerCommand::hover(*pose);
    };
    let dir = (*next - pose.position) / next.distance(&pose.position);
    let velocity = dir * speed;
    let yaw_rate = if dir.x.hypot(dir.y) > AT_WAYPOINT {
        let err = normalize_yaw(dir.y.atan2(dir.x) - pose.yaw).unwrap_or(0.0);
        (gains.k_yaw * err).clamp(-gains.max_yaw_rate, gains.max_yaw_rate)
    } else {
        // Pure climb or descent: keep the heading.
        0.0
    };
    let yaw = normalize_yaw(pose.yaw + yaw_rate * dt).unwrap_or(pose.yaw);
    FollowerCommand {
        pose: Pose {
            position: pose.position + velocity * dt,
            yaw,
        },
        velocity,
        yaw_rate,
    }
}
