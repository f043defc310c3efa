//! UKF-SLAM over a joint Gaussian of the robot pose and stationary landmarks.
//!
//! The state vector is laid out as `[x, y, theta, m1x, m1y, ..., mnx, mny]`
//! and the covariance follows the same block order. Data association is by
//! known landmark identifier.
//!
//! The motion model accumulates: `x' = x + v cos(theta) dt`, and likewise for
//! `y` and `theta`. Landmarks are untouched by prediction.

use std::fmt;

use nalgebra::{DMatrix, DVector, DVectorView, Matrix2, Matrix3};

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Point2D, Pose2D};
use crate::unscented::{
    covariance_center, reconstruct_with_angles, residuals, sigma_points, symmetrized, unscented_update, weighted_mean,
    weighted_outer, AngularSlots, GaussianState, Scaling, UpdateTrace,
};

/// Heading slot of the state vector.
const HEADING: usize = 2;
const POSE_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LandmarkId(pub u32);

impl fmt::Display for LandmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Velocity command held for `dt` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Control {
    pub v: f64,
    pub omega: f64,
    pub dt: f64,
}

impl Control {
    pub fn new(v: f64, omega: f64, dt: f64) -> Self {
        Self { v, omega, dt }
    }
}

/// A range-bearing observation of a known landmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub id: LandmarkId,
    pub range: f64,
    pub bearing: f64,
}

/// Additive process noise on the pose block and per-measurement noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub q_pose: Matrix3<f64>,
    pub r_meas: Matrix2<f64>,
}

impl NoiseParams {
    /// Maps velocity noise onto a per-step pose covariance
    /// `diag((sigma_v dt)^2, (sigma_v dt)^2, (sigma_omega dt)^2)`.
    pub fn from_sigmas(sigma_v: f64, sigma_omega: f64, sigma_r: f64, sigma_b: f64, dt: f64) -> Self {
        let sp = (sigma_v * dt).powi(2);
        let sh = (sigma_omega * dt).powi(2);
        Self {
            q_pose: Matrix3::from_diagonal(&nalgebra::Vector3::new(sp, sp, sh)),
            r_meas: Matrix2::from_diagonal(&nalgebra::Vector2::new(sigma_r * sigma_r, sigma_b * sigma_b)),
        }
    }
}

/// Predicted measurement, innovation covariance, cross-covariance and gain
/// of one correction.
pub type CorrectionTrace = UpdateTrace;

pub fn motion_model(pose: Pose2D, u: &Control) -> Pose2D {
    Pose2D::new(
        pose.x + u.v * pose.theta.cos() * u.dt,
        pose.y + u.v * pose.theta.sin() * u.dt,
        pose.theta + u.omega * u.dt,
    )
}

/// Range and bearing of `lm` as seen from `pose`.
pub fn observation_model(pose: Pose2D, lm: Point2D) -> Result<(f64, f64)> {
    let (r, b) = range_bearing(pose.x, pose.y, pose.theta, lm.x, lm.y);
    if r <= 1e-12 {
        return Err(Error::ZeroRange);
    }
    Ok((r, b))
}

#[inline]
fn range_bearing(x: f64, y: f64, theta: f64, lx: f64, ly: f64) -> (f64, f64) {
    let dx = lx - x;
    let dy = ly - y;
    (dx.hypot(dy), wrap_angle(dy.atan2(dx) - theta))
}

/// Landmark position implied by a range-bearing reading from `pose`.
pub fn inverse_observation(pose: Pose2D, range: f64, bearing: f64) -> Point2D {
    let a = pose.theta + bearing;
    Point2D::new(pose.x + range * a.cos(), pose.y + range * a.sin())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlamState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    ids: Vec<LandmarkId>,
}

impl SlamState {
    /// Pose-only state with the given pose covariance.
    pub fn new(pose: Pose2D, pose_cov: Matrix3<f64>) -> Self {
        let mean = DVector::from_vec(vec![pose.x, pose.y, pose.theta]);
        let cov = DMatrix::from_fn(3, 3, |r, c| pose_cov[(r, c)]);
        Self {
            mean,
            cov,
            ids: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn pose(&self) -> Pose2D {
        Pose2D {
            x: self.mean[0],
            y: self.mean[1],
            theta: self.mean[HEADING],
        }
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn landmark_ids(&self) -> &[LandmarkId] {
        &self.ids
    }

    pub fn landmark_count(&self) -> usize {
        self.ids.len()
    }

    pub fn contains(&self, id: LandmarkId) -> bool {
        self.ids.contains(&id)
    }

    /// Index of the landmark's x component in the state vector.
    pub fn slot_of(&self, id: LandmarkId) -> Option<usize> {
        self.ids.iter().position(|&i| i == id).map(|k| POSE_DIM + 2 * k)
    }

    pub fn landmark(&self, id: LandmarkId) -> Option<Point2D> {
        self.slot_of(id).map(|s| Point2D::new(self.mean[s], self.mean[s + 1]))
    }

    pub fn landmarks(&self) -> impl Iterator<Item = (LandmarkId, Point2D)> + '_ {
        self.ids
            .iter()
            .enumerate()
            .map(|(k, &id)| (id, Point2D::new(self.mean[POSE_DIM + 2 * k], self.mean[POSE_DIM + 2 * k + 1])))
    }

    pub fn pose_cov(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|r, c| self.cov[(r, c)])
    }

    pub fn as_gaussian(&self) -> GaussianState {
        GaussianState {
            mean: self.mean.clone(),
            cov: self.cov.clone(),
        }
    }

    /// Unscented prediction through the motion model with additive pose noise.
    /// Landmark means are carried over unchanged.
    pub fn predict(&mut self, u: &Control, noise: &NoiseParams, scaling: Scaling) -> Result<()> {
        let lambda = scaling.lambda_for(self.dim());
        let sigma = sigma_points(&self.as_gaussian(), lambda)?;
        let moved = sigma.map(|c| {
            let p = motion_model(
                Pose2D {
                    x: c[0],
                    y: c[1],
                    theta: c[HEADING],
                },
                u,
            );
            let mut out = c.clone_owned();
            out[0] = p.x;
            out[1] = p.y;
            out[HEADING] = p.theta;
            out
        });
        let mut next = reconstruct_with_angles(&moved, &[HEADING]);
        next.mean
            .rows_mut(POSE_DIM, self.dim() - POSE_DIM)
            .copy_from(&self.mean.rows(POSE_DIM, self.dim() - POSE_DIM));
        for r in 0..3 {
            for c in 0..3 {
                next.cov[(r, c)] += noise.q_pose[(r, c)];
            }
        }
        if next.mean.iter().chain(next.cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::CholeskyFailure);
        }
        self.mean = next.mean;
        self.cov = next.cov;
        Ok(())
    }

    /// Joint unscented correction with every measurement stacked into one
    /// innovation vector.
    pub fn correct(
        &mut self,
        measurements: &[Measurement],
        noise: &NoiseParams,
        scaling: Scaling,
    ) -> Result<CorrectionTrace> {
        let slots = measurements
            .iter()
            .map(|m| self.slot_of(m.id).ok_or(Error::UnknownLandmark(m.id)))
            .collect::<Result<Vec<_>>>()?;
        let n = self.dim();
        if measurements.is_empty() {
            return Ok(UpdateTrace {
                z_hat: DVector::zeros(0),
                innovation_cov: DMatrix::zeros(0, 0),
                cross_cov: DMatrix::zeros(n, 0),
                gain: DMatrix::zeros(n, 0),
                innovation: DVector::zeros(0),
            });
        }
        let m = measurements.len();
        let z = DVector::from_iterator(2 * m, measurements.iter().flat_map(|mm| [mm.range, mm.bearing]));
        let mut r = DMatrix::zeros(2 * m, 2 * m);
        for k in 0..m {
            r.view_mut((2 * k, 2 * k), (2, 2)).copy_from(&noise.r_meas);
        }
        let bearing_slots: Vec<usize> = (0..m).map(|k| 2 * k + 1).collect();
        let observe = |c: DVectorView<'_, f64>| {
            let mut out = DVector::zeros(2 * m);
            for (k, &s) in slots.iter().enumerate() {
                let (rg, b) = range_bearing(c[0], c[1], c[HEADING], c[s], c[s + 1]);
                out[2 * k] = rg;
                out[2 * k + 1] = b;
            }
            out
        };
        let lambda = scaling.lambda_for(n);
        let (post, trace) = unscented_update(
            &self.as_gaussian(),
            lambda,
            observe,
            &z,
            &r,
            AngularSlots {
                state: &[HEADING],
                measurement: &bearing_slots,
            },
        )?;
        self.mean = post.mean;
        self.cov = post.cov;
        Ok(trace)
    }

    /// Adds a landmark initialized from a measurement. The new mean is the
    /// inverse projection at the current pose; its covariance and
    /// cross-covariances come from unscented propagation of the joint
    /// Gaussian of the state and the measurement noise.
    pub fn augment(&mut self, m: &Measurement, noise: &NoiseParams, scaling: Scaling) -> Result<()> {
        if self.contains(m.id) {
            return Err(Error::DuplicateLandmark(m.id));
        }
        let n = self.dim();
        let mut joint_mean = DVector::zeros(n + 2);
        joint_mean.rows_mut(0, n).copy_from(&self.mean);
        let mut joint_cov = DMatrix::zeros(n + 2, n + 2);
        joint_cov.view_mut((0, 0), (n, n)).copy_from(&self.cov);
        joint_cov.view_mut((n, n), (2, 2)).copy_from(&noise.r_meas);
        let joint = GaussianState {
            mean: joint_mean,
            cov: joint_cov,
        };
        let sigma = sigma_points(&joint, scaling.lambda_for(n + 2))?;
        let images = sigma.map(|c| {
            let p = inverse_observation(
                Pose2D {
                    x: c[0],
                    y: c[1],
                    theta: c[HEADING],
                },
                m.range + c[n],
                m.bearing + c[n + 1],
            );
            DVector::from_vec(vec![p.x, p.y])
        });
        let img_mean = weighted_mean(&images.points, &images.weights, &[]);
        let d_img = residuals(
            &images.points,
            &covariance_center(&images.points, &images.weights, &img_mean),
            &[],
        );
        let d_state = residuals(&sigma.points.rows(0, n).clone_owned(), &self.mean, &[HEADING]);
        let block = symmetrized(&weighted_outer(&d_img, &sigma.weights, &d_img));
        let cross = weighted_outer(&d_state, &sigma.weights, &d_img);

        let lm = inverse_observation(self.pose(), m.range, m.bearing);
        let mut mean = self.mean.clone().insert_rows(n, 2, 0.0);
        mean[n] = lm.x;
        mean[n + 1] = lm.y;
        let mut cov = self.cov.clone().insert_rows(n, 2, 0.0).insert_columns(n, 2, 0.0);
        cov.view_mut((0, n), (n, 2)).copy_from(&cross);
        cov.view_mut((n, 0), (2, n)).copy_from(&cross.transpose());
        cov.view_mut((n, n), (2, 2)).copy_from(&block);
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::CholeskyFailure);
        }
        self.mean = mean;
        self.cov = cov;
        self.ids.push(m.id);
        Ok(())
    }

    /// Marginalizes a landmark out of the state.
    pub fn remove_landmark(&mut self, id: LandmarkId) -> Result<()> {
        let k = self
            .ids
            .iter()
            .position(|&i| i == id)
            .ok_or(Error::UnknownLandmark(id))?;
        let s = POSE_DIM + 2 * k;
        self.mean = std::mem::replace(&mut self.mean, DVector::zeros(0)).remove_rows(s, 2);
        self.cov = std::mem::replace(&mut self.cov, DMatrix::zeros(0, 0))
            .remove_rows(s, 2)
            .remove_columns(s, 2);
        self.ids.remove(k);
        Ok(())
    }
}
