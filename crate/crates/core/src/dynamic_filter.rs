//! Moving-landmark rejection by range consistency between two snapshots.
//!
//! For a landmark seen at range `d_k` from the previous pose, the robot
//! travels a chord of length `d_s`; if the landmark did not move, the law of
//! cosines predicts the new range `d_hat`. A measurement whose range differs
//! from `d_hat` by more than `epsilon` marks the landmark as moving.
//!
//! The test only sees the radial component of landmark motion: a landmark
//! that moves along the circle of radius `d_hat` around the new robot
//! position is indistinguishable from a stationary one.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::geometry::{distance, wrap_angle, Pose2D};
use crate::slam::{LandmarkId, Measurement};

/// Displacements shorter than this carry no direction.
const MIN_DISPLACEMENT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierParams {
    /// Range-consistency threshold, meters.
    pub epsilon: f64,
    /// Tracks unseen for more than this many observation steps are dropped.
    pub staleness_limit: usize,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        Self {
            epsilon: 0.2,
            staleness_limit: 10,
        }
    }
}

/// What the gate remembers about a landmark from its last sighting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandmarkTrack {
    pub id: LandmarkId,
    pub prev_range: f64,
    pub prev_bearing: f64,
    pub prev_pose: Pose2D,
    pub last_seen_step: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Stationary,
    Moving,
    Unknown,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Stationary => "stationary",
            Verdict::Moving => "moving",
            Verdict::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub id: LandmarkId,
    pub verdict: Verdict,
    /// Range predicted under the stationary hypothesis; NaN when not computed.
    pub d_hat: f64,
    pub d_meas: f64,
}

/// Third side of the triangle with sides `d_s`, `d_k` and included angle `alpha`.
pub fn predicted_distance(d_s: f64, d_k: f64, alpha: f64) -> f64 {
    let radicand = d_s * d_s + d_k * d_k - 2.0 * d_s * d_k * alpha.cos();
    radicand.max(0.0).sqrt()
}

/// Angle at the previous robot position between the direction of travel and
/// the previous line of sight to the landmark, in [0, pi].
pub fn compute_alpha(prev_pose: Pose2D, new_pose: Pose2D, prev_bearing: f64) -> Result<f64> {
    let dx = new_pose.x - prev_pose.x;
    let dy = new_pose.y - prev_pose.y;
    if dx.hypot(dy) < MIN_DISPLACEMENT {
        return Err(Error::ZeroDisplacement);
    }
    Ok(wrap_angle(dy.atan2(dx) - (prev_pose.theta + prev_bearing)).abs())
}

/// Classifies one measurement against its track.
///
/// A robot that did not move predicts the previous range unchanged.
pub fn classify(
    track: &LandmarkTrack,
    m: &Measurement,
    new_pose: Pose2D,
    step: usize,
    params: &ClassifierParams,
) -> Result<Classification> {
    debug_assert_eq!(track.id, m.id);
    if step.saturating_sub(track.last_seen_step) > params.staleness_limit {
        return Err(Error::StaleTrack(track.id));
    }
    let d_s = distance(track.prev_pose.position(), new_pose.position());
    let alpha = match compute_alpha(track.prev_pose, new_pose, track.prev_bearing) {
        Ok(a) => a,
        Err(Error::ZeroDisplacement) => 0.0,
        Err(e) => return Err(e),
    };
    let d_hat = predicted_distance(d_s, track.prev_range, alpha);
    let verdict = if (d_hat - m.range).abs() <= params.epsilon {
        Verdict::Stationary
    } else {
        Verdict::Moving
    };
    Ok(Classification {
        id: m.id,
        verdict,
        d_hat,
        d_meas: m.range,
    })
}

/// Which pipeline the gate serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateMode {
    /// Classify every re-sighted landmark and reject movers.
    Proposed,
    /// Admit every re-sighted landmark; same first-sighting delay and
    /// staleness bookkeeping as `Proposed`, but no classification.
    Conventional,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GateOutcome {
    pub admitted: Vec<Measurement>,
    /// Landmarks classified moving this step, plus blacklisted ones re-sighted.
    pub rejected: Vec<LandmarkId>,
    /// Landmarks newly classified moving this step.
    pub newly_moving: Vec<LandmarkId>,
    pub log: Vec<Classification>,
}

/// Track store and blacklist for one filter run.
#[derive(Debug, Clone)]
pub struct MotionGate {
    mode: GateMode,
    params: ClassifierParams,
    tracks: BTreeMap<LandmarkId, LandmarkTrack>,
    blacklist: BTreeSet<LandmarkId>,
}

impl MotionGate {
    pub fn new(mode: GateMode, params: ClassifierParams) -> Self {
        Self {
            mode,
            params,
            tracks: BTreeMap::new(),
            blacklist: BTreeSet::new(),
        }
    }

    pub fn mode(&self) -> GateMode {
        self.mode
    }

    pub fn track(&self, id: LandmarkId) -> Option<&LandmarkTrack> {
        self.tracks.get(&id)
    }

    pub fn is_blacklisted(&self, id: LandmarkId) -> bool {
        self.blacklist.contains(&id)
    }

    pub fn blacklist(&self) -> impl Iterator<Item = LandmarkId> + '_ {
        self.blacklist.iter().copied()
    }

    /// Gates one observation step. `new_pose` is the filter's predicted pose
    /// at this step. First sightings and stale re-sightings are withheld and
    /// start a fresh track; re-sightings are classified.
    pub fn step_filter(&mut self, measurements: &[Measurement], new_pose: Pose2D, step: usize) -> GateOutcome {
        let mut out = GateOutcome::default();
        for m in measurements {
            if self.blacklist.contains(&m.id) {
                out.rejected.push(m.id);
                continue;
            }
            let class = match (self.mode, self.tracks.get(&m.id)) {
                (_, None) => unknown(m),
                (GateMode::Proposed, Some(track)) => {
                    classify(track, m, new_pose, step, &self.params).unwrap_or_else(|_| unknown(m))
                }
                (GateMode::Conventional, Some(track)) => {
                    if step.saturating_sub(track.last_seen_step) > self.params.staleness_limit {
                        unknown(m)
                    } else {
                        Classification {
                            id: m.id,
                            verdict: Verdict::Stationary,
                            d_hat: f64::NAN,
                            d_meas: m.range,
                        }
                    }
                }
            };
            match class.verdict {
                Verdict::Stationary => out.admitted.push(*m),
                Verdict::Moving => {
                    out.rejected.push(m.id);
                    out.newly_moving.push(m.id);
                    self.blacklist.insert(m.id);
                }
                Verdict::Unknown => {}
            }
            out.log.push(class);
            if class.verdict == Verdict::Moving {
                self.tracks.remove(&m.id);
            } else {
                self.tracks.insert(
                    m.id,
                    LandmarkTrack {
                        id: m.id,
                        prev_range: m.range,
                        prev_bearing: m.bearing,
                        prev_pose: new_pose,
                        last_seen_step: step,
                    },
                );
            }
        }
        self.tracks
            .retain(|_, t| step.saturating_sub(t.last_seen_step) <= self.params.staleness_limit);
        out
    }

    /// Re-anchors the tracks refreshed at `step` on the corrected pose, so the
    /// next displacement is pure odometry.
    pub fn commit_pose(&mut self, step: usize, pose: Pose2D) {
        for t in self.tracks.values_mut() {
            if t.last_seen_step == step {
                t.prev_pose = pose;
            }
        }
    }
}

fn unknown(m: &Measurement) -> Classification {
    Classification {
        id: m.id,
        verdict: Verdict::Unknown,
        d_hat: f64::NAN,
        d_meas: m.range,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2D;
    use crate::slam::observation_model;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn sight(pose: Pose2D, id: u32, lm: Point2D) -> Measurement {
        let (range, bearing) = observation_model(pose, lm).unwrap();
        Measurement {
            id: LandmarkId(id),
            range,
            bearing,
        }
    }

    fn track_from(pose: Pose2D, m: &Measurement, step: usize) -> LandmarkTrack {
        LandmarkTrack {
            id: m.id,
            prev_range: m.range,
            prev_bearing: m.bearing,
            prev_pose: pose,
            last_seen_step: step,
        }
    }

    #[test]
    fn predicted_distance_examples() {
        assert_eq!(predicted_distance(0.0, 4.0, 1.234), 4.0);
        assert_abs_diff_eq!(predicted_distance(3.0, 4.0, FRAC_PI_2), 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(predicted_distance(1.0, 4.0, 0.0), 3.0, epsilon = 1e-12);
        // degenerate triangle clamps round-off instead of returning NaN
        assert_eq!(predicted_distance(2.0, 2.0, 0.0), 0.0);
    }

    #[test]
    fn alpha_examples() {
        let a = Pose2D::new(0.0, 0.0, 0.0);
        let b = Pose2D::new(1.0, 0.0, 0.0);
        assert_abs_diff_eq!(compute_alpha(a, b, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(compute_alpha(a, b, FRAC_PI_2).unwrap(), FRAC_PI_2);
        assert_abs_diff_eq!(compute_alpha(a, b, PI).unwrap(), PI);
        assert!(matches!(compute_alpha(a, a, 0.3), Err(Error::ZeroDisplacement)));
    }

    #[test]
    fn stationary_noiseless_step() {
        let p0 = Pose2D::new(0.0, 0.0, 0.2);
        let p1 = Pose2D::new(1.4, 0.5, 0.35);
        let lm = Point2D::new(6.0, 4.0);
        let t = track_from(p0, &sight(p0, 1, lm), 0);
        let c = classify(&t, &sight(p1, 1, lm), p1, 1, &ClassifierParams::default()).unwrap();
        assert_eq!(c.verdict, Verdict::Stationary);
        assert_abs_diff_eq!(c.d_hat, c.d_meas, epsilon = 1e-9);
    }

    #[test]
    fn boundary_is_inclusive() {
        // robot does not turn, landmark dead ahead: d_hat = d_k - d_s exactly
        let p0 = Pose2D::new(0.0, 0.0, 0.0);
        let p1 = Pose2D::new(1.0, 0.0, 0.0);
        let t = LandmarkTrack {
            id: LandmarkId(1),
            prev_range: 5.0,
            prev_bearing: 0.0,
            prev_pose: p0,
            last_seen_step: 0,
        };
        let params = ClassifierParams {
            epsilon: 0.25,
            staleness_limit: 10,
        };
        let m = Measurement {
            id: LandmarkId(1),
            range: 4.25,
            bearing: 0.0,
        };
        let c = classify(&t, &m, p1, 1, &params).unwrap();
        assert_eq!(c.d_hat, 4.0);
        assert_eq!((c.d_hat - m.range).abs(), params.epsilon);
        assert_eq!(c.verdict, Verdict::Stationary);
        let m = Measurement { range: 4.2500001, ..m };
        assert_eq!(classify(&t, &m, p1, 1, &params).unwrap().verdict, Verdict::Moving);
    }

    #[test]
    fn radial_mover_twice_epsilon() {
        let params = ClassifierParams::default();
        let p0 = Pose2D::new(0.0, 0.0, 0.0);
        let p1 = Pose2D::new(1.0, 0.5, 0.1);
        let lm0 = Point2D::new(5.0, 3.0);
        // oracle: push the landmark away from the new robot position by 2 eps
        let (ux, uy) = (lm0.x - p1.x, lm0.y - p1.y);
        let norm = ux.hypot(uy);
        let delta = 2.0 * params.epsilon;
        let lm1 = Point2D::new(lm0.x + delta * ux / norm, lm0.y + delta * uy / norm);
        let expected_d = norm + delta;
        let t = track_from(p0, &sight(p0, 1, lm0), 0);
        let c = classify(&t, &sight(p1, 1, lm1), p1, 1, &params).unwrap();
        assert_abs_diff_eq!(c.d_hat, norm, epsilon = 1e-9);
        assert_abs_diff_eq!(c.d_meas, expected_d, epsilon = 1e-9);
        assert_eq!(c.verdict, Verdict::Moving);
    }

    #[test]
    fn circular_mover_is_missed() {
        // moving along the circle of radius d_hat around the new position
        let params = ClassifierParams::default();
        let p0 = Pose2D::new(0.0, 0.0, 0.0);
        let p1 = Pose2D::new(3.0, 1.0, 0.0);
        let lm0 = Point2D::new(1.0, 4.0);
        let r = distance(p1.position(), lm0);
        let phi = (lm0.y - p1.y).atan2(lm0.x - p1.x) - 1.0;
        let lm1 = Point2D::new(p1.x + r * phi.cos(), p1.y + r * phi.sin());
        assert!(distance(lm0, lm1) > 1.0);
        let t = track_from(p0, &sight(p0, 1, lm0), 0);
        let c = classify(&t, &sight(p1, 1, lm1), p1, 1, &params).unwrap();
        assert_eq!(c.verdict, Verdict::Stationary);
    }

    #[test]
    fn stale_track_is_reported() {
        let p0 = Pose2D::new(0.0, 0.0, 0.0);
        let lm = Point2D::new(4.0, 1.0);
        let t = track_from(p0, &sight(p0, 1, lm), 0);
        let p1 = Pose2D::new(1.0, 0.0, 0.0);
        let err = classify(&t, &sight(p1, 1, lm), p1, 11, &ClassifierParams::default());
        assert!(matches!(err, Err(Error::StaleTrack(LandmarkId(1)))));
        assert!(classify(&t, &sight(p1, 1, lm), p1, 10, &ClassifierParams::default()).is_ok());
    }

    #[test]
    fn gate_withholds_first_sightings() {
        let mut gate = MotionGate::new(GateMode::Proposed, ClassifierParams::default());
        let p0 = Pose2D::new(0.0, 0.0, 0.0);
        let ms: Vec<_> = (0..4).map(|i| sight(p0, i, Point2D::new(5.0 + i as f64, 2.0))).collect();
        let out = gate.step_filter(&ms, p0, 0);
        assert!(out.admitted.is_empty());
        assert!(out.log.iter().all(|c| c.verdict == Verdict::Unknown));
        assert!((0..4).all(|i| gate.track(LandmarkId(i)).is_some()));
    }

    #[test]
    fn gate_admits_noiseless_stationary_and_blacklists_mover() {
        let mut gate = MotionGate::new(GateMode::Proposed, ClassifierParams::default());
        let p0 = Pose2D::new(0.0, 0.0, 0.0);
        let p1 = Pose2D::new(1.5, 0.2, 0.1);
        let fixed = Point2D::new(5.0, 5.0);
        let mover0 = Point2D::new(-3.0, 4.0);
        let mover1 = Point2D::new(-3.0, 8.0);
        gate.step_filter(&[sight(p0, 1, fixed), sight(p0, 2, mover0)], p0, 0);
        gate.commit_pose(0, p0);
        let out = gate.step_filter(&[sight(p1, 1, fixed), sight(p1, 2, mover1)], p1, 1);
        assert_eq!(out.admitted.len(), 1);
        assert_eq!(out.admitted[0].id, LandmarkId(1));
        assert_eq!(out.newly_moving, vec![LandmarkId(2)]);
        assert!(gate.is_blacklisted(LandmarkId(2)));
        // blacklisted for good, even if it stops
        let out = gate.step_filter(&[sight(p1, 2, mover1)], p1, 2);
        assert_eq!(out.rejected, vec![LandmarkId(2)]);
        assert!(out.newly_moving.is_empty());
    }

    #[test]
    fn conventional_gate_never_rejects() {
        let mut gate = MotionGate::new(GateMode::Conventional, ClassifierParams::default());
        let p0 = Pose2D::new(0.0, 0.0, 0.0);
        let p1 = Pose2D::new(1.5, 0.2, 0.1);
        gate.step_filter(&[sight(p0, 2, Point2D::new(-3.0, 4.0))], p0, 0);
        let out = gate.step_filter(&[sight(p1, 2, Point2D::new(-3.0, 14.0))], p1, 1);
        assert_eq!(out.admitted.len(), 1);
        assert!(out.rejected.is_empty());
    }

    #[test]
    fn stale_resighting_restarts_protocol() {
        let params = ClassifierParams {
            epsilon: 0.2,
            staleness_limit: 3,
        };
        let mut gate = MotionGate::new(GateMode::Proposed, params);
        let lm = Point2D::new(5.0, 1.0);
        let p0 = Pose2D::new(0.0, 0.0, 0.0);
        gate.step_filter(&[sight(p0, 1, lm)], p0, 0);
        let p1 = Pose2D::new(1.0, 0.0, 0.0);
        let out = gate.step_filter(&[sight(p1, 1, lm)], p1, 4);
        assert!(out.admitted.is_empty());
        assert_eq!(out.log[0].verdict, Verdict::Unknown);
        let p2 = Pose2D::new(2.0, 0.0, 0.0);
        gate.commit_pose(4, p1);
        let out = gate.step_filter(&[sight(p2, 1, lm)], p2, 5);
        assert_eq!(out.admitted.len(), 1);
    }

    proptest! {
        #[test]
        fn noiseless_stationary_never_moving(
            x0 in -20.0f64..20.0, y0 in -20.0f64..20.0, t0 in -3.1f64..3.1,
            step in 0.05f64..3.0, turn in -1.0f64..1.0,
            lx in -30.0f64..30.0, ly in -30.0f64..30.0,
        ) {
            let p0 = Pose2D::new(x0, y0, t0);
            let p1 = Pose2D::new(x0 + step * (t0 + turn).cos(), y0 + step * (t0 + turn).sin(), t0 + 2.0 * turn);
            let lm = Point2D::new(lx, ly);
            prop_assume!(distance(p0.position(), lm) > 1e-3 && distance(p1.position(), lm) > 1e-3);
            let t = track_from(p0, &sight(p0, 1, lm), 0);
            let c = classify(&t, &sight(p1, 1, lm), p1, 1, &ClassifierParams::default()).unwrap();
            prop_assert!((c.d_hat - c.d_meas).abs() <= 1e-9 * (1.0 + c.d_meas));
            prop_assert_eq!(c.verdict, Verdict::Stationary);
        }

        #[test]
        fn radial_motion_beyond_epsilon_detected(
            x0 in -20.0f64..20.0, y0 in -20.0f64..20.0, t0 in -3.1f64..3.1,
            step in 0.05f64..3.0, turn in -1.0f64..1.0,
            lx in -30.0f64..30.0, ly in -30.0f64..30.0,
            excess in 1e-6f64..2.0, outward in any::<bool>(),
        ) {
            let params = ClassifierParams::default();
            let p0 = Pose2D::new(x0, y0, t0);
            let p1 = Pose2D::new(x0 + step * (t0 + turn).cos(), y0 + step * (t0 + turn).sin(), t0);
            let lm0 = Point2D::new(lx, ly);
            let r = distance(p1.position(), lm0);
            prop_assume!(distance(p0.position(), lm0) > 1e-3 && r > 3.0);
            let delta = (params.epsilon + excess) * if outward { 1.0 } else { -1.0 };
            let k = (r + delta) / r;
            let lm1 = Point2D::new(p1.x + k * (lm0.x - p1.x), p1.y + k * (lm0.y - p1.y));
            let t = track_from(p0, &sight(p0, 1, lm0), 0);
            let c = classify(&t, &sight(p1, 1, lm1), p1, 1, &params).unwrap();
            prop_assert_eq!(c.verdict, Verdict::Moving);
        }
    }
}
