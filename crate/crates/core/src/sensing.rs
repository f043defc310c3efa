//! Simulated range-bearing sensor and noisy odometry.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::geometry::{distance, wrap_angle, Point2D, Pose2D};
use crate::slam::{Control, LandmarkId, Measurement};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorParams {
    /// Meters; infinite by default.
    pub max_range: f64,
    /// Full cone width, radians.
    pub fov: f64,
    pub sigma_r: f64,
    pub sigma_b: f64,
}

impl Default for SensorParams {
    fn default() -> Self {
        Self {
            max_range: f64::INFINITY,
            fov: std::f64::consts::TAU,
            sigma_r: 0.02,
            sigma_b: 1f64.to_radians(),
        }
    }
}

/// Observes every landmark within range and field of view (both bounds
/// inclusive). Output is sorted by id; one range and one bearing draw are
/// consumed per visible landmark, in id order.
pub fn sense<R: Rng + ?Sized>(
    true_pose: Pose2D,
    world: &[(LandmarkId, Point2D)],
    params: &SensorParams,
    rng: &mut R,
) -> Vec<Measurement> {
    let mut order: Vec<&(LandmarkId, Point2D)> = world.iter().collect();
    order.sort_by_key(|(id, _)| *id);
    let origin = true_pose.position();
    let half_fov = 0.5 * params.fov;
    let mut out = Vec::new();
    for &(id, lm) in order {
        let range = distance(origin, lm);
        if range > params.max_range {
            continue;
        }
        let bearing = wrap_angle((lm.y - origin.y).atan2(lm.x - origin.x) - true_pose.theta);
        if bearing.abs() > half_fov {
            continue;
        }
        let er: f64 = rng.sample(StandardNormal);
        let eb: f64 = rng.sample(StandardNormal);
        out.push(Measurement {
            id,
            range: (range + params.sigma_r * er).max(0.0),
            bearing: wrap_angle(bearing + params.sigma_b * eb),
        });
    }
    out
}

pub fn noisy_control<R: Rng + ?Sized>(u: &Control, sigma_v: f64, sigma_omega: f64, rng: &mut R) -> Control {
    let ev: f64 = rng.sample(StandardNormal);
    let ew: f64 = rng.sample(StandardNormal);
    Control {
        v: u.v + sigma_v * ev,
        omega: u.omega + sigma_omega * ew,
        dt: u.dt,
    }
}
