//! Seeded benchmark worlds: waypoint tours, landmark placement, mover
//! scripts and the waypoint-following controller that produces ground truth.

use std::collections::BTreeMap;

use rand::Rng;

use crate::dynamic_filter::ClassifierParams;
use crate::error::{Error, Result};
use crate::geometry::{distance, wrap_angle, Point2D, Pose2D};
use crate::rng::{stream, Stream};
use crate::sensing::{noisy_control, SensorParams};
use crate::slam::{motion_model, Control, LandmarkId, NoiseParams};
use crate::unscented::Scaling;

/// Rejection-sampling budget per stationary landmark.
pub const PLACEMENT_ATTEMPTS: usize = 10_000;

/// Standard deviations of the injected noise. The filter models the same
/// values, floored so its innovation covariance stays invertible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSigmas {
    /// m/s
    pub sigma_v: f64,
    /// rad/s
    pub sigma_omega: f64,
    /// m
    pub sigma_r: f64,
    /// rad
    pub sigma_b: f64,
}

impl Default for NoiseSigmas {
    fn default() -> Self {
        Self {
            sigma_v: 0.1,
            sigma_omega: 3f64.to_radians(),
            sigma_r: 0.02,
            sigma_b: 1f64.to_radians(),
        }
    }
}

impl NoiseSigmas {
    pub fn zero() -> Self {
        Self {
            sigma_v: 0.0,
            sigma_omega: 0.0,
            sigma_r: 0.0,
            sigma_b: 0.0,
        }
    }

    /// Noise model handed to the filter.
    pub fn filter_noise(&self, dt: f64) -> NoiseParams {
        const MIN_SIGMA_R: f64 = 1e-3;
        const MIN_SIGMA_B: f64 = 1e-4;
        NoiseParams::from_sigmas(
            self.sigma_v,
            self.sigma_omega,
            self.sigma_r.max(MIN_SIGMA_R),
            self.sigma_b.max(MIN_SIGMA_B),
            dt,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Waypoint count (M).
    pub waypoints: usize,
    /// Total landmark count (N), movers included.
    pub landmarks: usize,
    /// Moving landmark count (N_d).
    pub movers: usize,
    pub area_width: f64,
    pub area_height: f64,
    pub landmark_radius: f64,
    pub robot_speed: f64,
    /// rad/s
    pub max_turn_rate: f64,
    pub dt: f64,
    /// Control steps per observation.
    pub obs_every: usize,
    pub mover_speed: f64,
    pub mover_tether: f64,
    pub switch_radius: f64,
    pub laps: usize,
    pub noise: NoiseSigmas,
    pub max_range: f64,
    /// rad, full cone
    pub fov: f64,
    pub classifier: ClassifierParams,
    pub scaling: Scaling,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            waypoints: 20,
            landmarks: 10,
            movers: 3,
            area_width: 100.0,
            area_height: 100.0,
            landmark_radius: 15.0,
            robot_speed: 3.0,
            max_turn_rate: 45f64.to_radians(),
            dt: 0.1,
            obs_every: 5,
            mover_speed: 1.0,
            mover_tether: 20.0,
            switch_radius: 1.0,
            laps: 1,
            noise: NoiseSigmas::default(),
            max_range: f64::INFINITY,
            fov: std::f64::consts::TAU,
            classifier: ClassifierParams::default(),
            scaling: Scaling::Classic,
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.waypoints < 2 {
            return bad("waypoints must be at least 2");
        }
        if self.movers > self.landmarks {
            return bad("movers must not exceed landmarks");
        }
        let positive = [
            ("area_width", self.area_width),
            ("area_height", self.area_height),
            ("landmark_radius", self.landmark_radius),
            ("dt", self.dt),
            ("switch_radius", self.switch_radius),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be positive and finite")));
            }
        }
        let non_negative = [
            ("robot_speed", self.robot_speed),
            ("max_turn_rate", self.max_turn_rate),
            ("mover_speed", self.mover_speed),
            ("mover_tether", self.mover_tether),
            ("sigma_v", self.noise.sigma_v),
            ("sigma_omega", self.noise.sigma_omega),
            ("sigma_range", self.noise.sigma_r),
            ("sigma_bearing", self.noise.sigma_b),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be non-negative and finite")));
            }
        }
        if !(self.max_range > 0.0) {
            return bad("max_range must be positive");
        }
        if !(self.fov > 0.0 && self.fov <= std::f64::consts::TAU) {
            return bad("fov must lie in (0, 360] degrees");
        }
        if self.obs_every == 0 {
            return bad("obs_every must be at least 1");
        }
        if self.laps == 0 {
            return bad("laps must be at least 1");
        }
        if !(self.classifier.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if self.classifier.staleness_limit == 0 {
            return bad("staleness_limit must be at least 1");
        }
        if let Scaling::Fixed(l) = self.scaling {
            if !l.is_finite() {
                return bad("ut_lambda must be finite");
            }
        }
        Ok(())
    }

    pub fn sensor(&self) -> SensorParams {
        SensorParams {
            max_range: self.max_range,
            fov: self.fov,
            sigma_r: self.noise.sigma_r,
            sigma_b: self.noise.sigma_b,
        }
    }

    /// Seconds between observations.
    pub fn obs_period(&self) -> f64 {
        self.obs_every as f64 * self.dt
    }

    /// Distance a mover covers between observations.
    pub fn mover_step(&self) -> f64 {
        self.mover_speed * self.obs_period()
    }

    fn contains(&self, p: Point2D) -> bool {
        (0.0..=self.area_width).contains(&p.x) && (0.0..=self.area_height).contains(&p.y)
    }

    fn clamp(&self, p: Point2D) -> Point2D {
        Point2D::new(p.x.clamp(0.0, self.area_width), p.y.clamp(0.0, self.area_height))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LandmarkKind {
    Stationary,
    Moving,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandmarkSpec {
    pub id: LandmarkId,
    pub kind: LandmarkKind,
    pub initial: Point2D,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scenario {
    /// In tour order.
    pub waypoints: Vec<Point2D>,
    pub landmarks: Vec<LandmarkSpec>,
    /// Position of each mover at every observation step.
    pub mover_paths: BTreeMap<LandmarkId, Vec<Point2D>>,
}

impl Scenario {
    /// Every landmark's position at observation step `j`.
    pub fn world_at(&self, j: usize) -> Vec<(LandmarkId, Point2D)> {
        self.landmarks
            .iter()
            .map(|l| {
                let p = match self.mover_paths.get(&l.id) {
                    Some(path) if !path.is_empty() => path[j.min(path.len() - 1)],
                    _ => l.initial,
                };
                (l.id, p)
            })
            .collect()
    }

    pub fn stationary(&self) -> impl Iterator<Item = &LandmarkSpec> {
        self.landmarks.iter().filter(|l| l.kind == LandmarkKind::Stationary)
    }
}

/// Ground truth per control step. `poses[0]` is the start pose and
/// `poses[k]` the pose after applying control `k - 1`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TruthLog {
    pub poses: Vec<Pose2D>,
    pub commanded: Vec<Control>,
    pub applied: Vec<Control>,
}

impl TruthLog {
    pub fn control_steps(&self) -> usize {
        self.commanded.len()
    }

    /// Number of observation steps, counting the one at the start pose.
    pub fn observation_steps(&self, obs_every: usize) -> usize {
        self.control_steps() / obs_every + 1
    }
}

/// Builds the scenario and its ground truth for `config.seed`.
pub fn generate(config: &ScenarioConfig) -> Result<(Scenario, TruthLog)> {
    config.validate()?;
    let seed = config.seed;
    let mut wp_rng = stream(seed, Stream::Waypoints);
    let raw: Vec<Point2D> = (0..config.waypoints)
        .map(|_| {
            Point2D::new(
                wp_rng.random::<f64>() * config.area_width,
                wp_rng.random::<f64>() * config.area_height,
            )
        })
        .collect();
    let waypoints: Vec<Point2D> = tsp_order(&raw).into_iter().map(|i| raw[i]).collect();

    let mut lm_rng = stream(seed, Stream::Landmarks);
    let n_stationary = config.landmarks - config.movers;
    let mut landmarks = Vec::with_capacity(config.landmarks);
    for index in 0..n_stationary {
        let p = place_near_waypoints(&waypoints, config, &mut lm_rng)
            .ok_or(Error::PlacementExhausted {
                index,
                attempts: PLACEMENT_ATTEMPTS,
            })?;
        landmarks.push(LandmarkSpec {
            id: LandmarkId(index as u32),
            kind: LandmarkKind::Stationary,
            initial: p,
        });
    }

    let mut scenario = Scenario {
        waypoints,
        landmarks,
        mover_paths: BTreeMap::new(),
    };
    let truth = drive(&scenario, config);
    for k in 0..config.movers {
        let id = LandmarkId((n_stationary + k) as u32);
        let mut rng = stream(seed, Stream::Mover(k as u32));
        let start = draw_near(truth.poses[0].position(), config, &mut rng);
        let path = moving_path(start, &truth, config, &mut rng);
        scenario.landmarks.push(LandmarkSpec {
            id,
            kind: LandmarkKind::Moving,
            initial: start,
        });
        scenario.mover_paths.insert(id, path);
    }
    Ok((scenario, truth))
}

pub fn generate_scenario(config: &ScenarioConfig) -> Result<Scenario> {
    generate(config).map(|(s, _)| s)
}

fn place_near_waypoints<R: Rng + ?Sized>(
    waypoints: &[Point2D],
    config: &ScenarioConfig,
    rng: &mut R,
) -> Option<Point2D> {
    (0..PLACEMENT_ATTEMPTS).find_map(|_| {
        let p = Point2D::new(
            rng.random::<f64>() * config.area_width,
            rng.random::<f64>() * config.area_height,
        );
        waypoints
            .iter()
            .any(|w| distance(*w, p) <= config.landmark_radius)
            .then_some(p)
    })
}

pub fn tour_length(points: &[Point2D], order: &[usize]) -> f64 {
    let n = order.len();
    (0..n)
        .map(|i| distance(points[order[i]], points[order[(i + 1) % n]]))
        .sum()
}

/// Closed-tour visiting order starting at point 0: nearest-neighbour
/// construction, then 2-opt until no exchange shortens the tour.
pub fn tsp_order(points: &[Point2D]) -> Vec<usize> {
    let n = points.len();
    if n <= 3 {
        return (0..n).collect();
    }
    let d = |a: usize, b: usize| distance(points[a], points[b]);

    let mut tour = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    let mut current = 0;
    visited[0] = true;
    tour.push(0);
    for _ in 1..n {
        let next = (0..n)
            .filter(|&j| !visited[j])
            .min_by(|&a, &b| d(current, a).total_cmp(&d(current, b)))
            .expect("unvisited point remains");
        visited[next] = true;
        tour.push(next);
        current = next;
    }

    loop {
        let mut best = 0.0;
        let mut swap = None;
        for i in 0..n - 1 {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (tour[i], tour[i + 1]);
                let (c, e) = (tour[j], tour[(j + 1) % n]);
                let gain = d(a, b) + d(c, e) - d(a, c) - d(b, e);
                if gain > best + 1e-12 {
                    best = gain;
                    swap = Some((i + 1, j));
                }
            }
        }
        match swap {
            Some((lo, hi)) => tour[lo..=hi].reverse(),
            None => break,
        }
    }
    tour
}

/// A uniformly random point within the tether disk around `center`, pulled
/// into the area.
fn draw_near<R: Rng + ?Sized>(center: Point2D, config: &ScenarioConfig, rng: &mut R) -> Point2D {
    let r = config.mover_tether * rng.random::<f64>().sqrt();
    let phi = rng.random::<f64>() * std::f64::consts::TAU;
    config.clamp(Point2D::new(center.x + r * phi.cos(), center.y + r * phi.sin()))
}

/// Fixed-speed mover script: one position per observation step, each exactly
/// one mover step from the last, heading for a random target kept within the
/// tether disk of the robot's true position. A mover outside the disk heads
/// for the robot itself, so a mover at least as fast as the robot never ends
/// up more than one step outside the disk.
pub fn moving_path<R: Rng + ?Sized>(
    start: Point2D,
    truth: &TruthLog,
    config: &ScenarioConfig,
    rng: &mut R,
) -> Vec<Point2D> {
    let steps = truth.observation_steps(config.obs_every);
    let step_len = config.mover_step();
    let robot_at = |j: usize| truth.poses[j * config.obs_every].position();
    let mut pos = config.clamp(start);
    let mut path = Vec::with_capacity(steps);
    path.push(pos);
    if step_len == 0.0 {
        path.resize(steps, pos);
        return path;
    }
    let mut target = draw_near(robot_at(0), config, rng);
    for j in 1..steps {
        let robot = robot_at(j);
        if distance(pos, robot) > config.mover_tether {
            // fallen behind: head straight for the robot
            target = robot;
        } else {
            let mut tries = 0;
            while distance(pos, target) < step_len || distance(target, robot) > config.mover_tether {
                tries += 1;
                if tries > 100 {
                    target = fallback_target(pos, step_len, config);
                    break;
                }
                target = draw_near(robot, config, rng);
            }
        }
        let dist = distance(pos, target);
        pos = Point2D::new(
            pos.x + step_len * (target.x - pos.x) / dist,
            pos.y + step_len * (target.y - pos.y) / dist,
        );
        debug_assert!(config.contains(config.clamp(pos)));
        path.push(config.clamp(pos));
    }
    path
}

fn fallback_target(pos: Point2D, step_len: f64, config: &ScenarioConfig) -> Point2D {
    let center = Point2D::new(0.5 * config.area_width, 0.5 * config.area_height);
    if distance(pos, center) >= step_len {
        center
    } else {
        config.clamp(center.translate(2.0 * step_len, 0.0))
    }
}

/// Drives the tour with a proportional heading controller at constant speed,
/// `laps` times around and back to the first waypoint. A waypoint that the
/// turn-rate limit keeps out of reach is abandoned after a generous budget.
pub fn drive(scenario: &Scenario, config: &ScenarioConfig) -> TruthLog {
    let wps = &scenario.waypoints;
    let mut rng = stream(config.seed, Stream::ControlNoise);
    let heading = if wps.len() >= 2 {
        (wps[1].y - wps[0].y).atan2(wps[1].x - wps[0].x)
    } else {
        0.0
    };
    let mut pose = Pose2D::new(wps[0].x, wps[0].y, heading);
    let mut log = TruthLog {
        poses: vec![pose],
        ..Default::default()
    };
    let targets = (0..config.laps).flat_map(|_| (1..wps.len()).chain(std::iter::once(0)));
    for t in targets {
        let target = wps[t];
        let turn_time = if config.max_turn_rate > 0.0 {
            std::f64::consts::TAU / config.max_turn_rate
        } else {
            0.0
        };
        let straight = distance(pose.position(), target) / config.robot_speed.max(1e-9);
        let budget = (2.0 * (straight + turn_time) / config.dt).ceil() as usize + 10;
        for _ in 0..budget {
            if distance(pose.position(), target) <= config.switch_radius {
                break;
            }
            let bearing = (target.y - pose.y).atan2(target.x - pose.x);
            let omega = (wrap_angle(bearing - pose.theta) / config.dt)
                .clamp(-config.max_turn_rate, config.max_turn_rate);
            let cmd = Control::new(config.robot_speed, omega, config.dt);
            let applied = noisy_control(&cmd, config.noise.sigma_v, config.noise.sigma_omega, &mut rng);
            pose = motion_model(pose, &applied);
            log.poses.push(pose);
            log.commanded.push(cmd);
            log.applied.push(applied);
        }
    }
    log
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn square() -> Vec<Point2D> {
        vec![
            Point2D::new(0.0, 0.0),
            Point2D::new(1.0, 1.0),
            Point2D::new(1.0, 0.0),
            Point2D::new(0.0, 1.0),
        ]
    }

    fn brute_force(points: &[Point2D]) -> f64 {
        fn permute(rest: &mut Vec<usize>, k: usize, points: &[Point2D], best: &mut f64) {
            if k == rest.len() {
                let mut order = vec![0];
                order.extend_from_slice(rest);
                *best = best.min(tour_length(points, &order));
                return;
            }
            for i in k..rest.len() {
                rest.swap(k, i);
                permute(rest, k + 1, points, best);
                rest.swap(k, i);
            }
        }
        let mut rest: Vec<usize> = (1..points.len()).collect();
        let mut best = f64::INFINITY;
        permute(&mut rest, 0, points, &mut best);
        best
    }

    fn is_two_opt_local_minimum(points: &[Point2D], tour: &[usize]) -> bool {
        let n = tour.len();
        let d = |a: usize, b: usize| distance(points[a], points[b]);
        for i in 0..n - 1 {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let gain = d(tour[i], tour[i + 1]) + d(tour[j], tour[(j + 1) % n])
                    - d(tour[i], tour[j])
                    - d(tour[i + 1], tour[(j + 1) % n]);
                if gain > 1e-9 {
                    return false;
                }
            }
        }
        true
    }

    fn nearest_neighbour_length(points: &[Point2D]) -> f64 {
        let n = points.len();
        let mut visited = vec![false; n];
        let mut order = vec![0];
        visited[0] = true;
        for _ in 1..n {
            let cur = *order.last().unwrap();
            let next = (0..n)
                .filter(|&j| !visited[j])
                .min_by(|&a, &b| distance(points[cur], points[a]).total_cmp(&distance(points[cur], points[b])))
                .unwrap();
            visited[next] = true;
            order.push(next);
        }
        tour_length(points, &order)
    }

    #[test]
    fn tsp_two_points_identity() {
        assert_eq!(tsp_order(&[Point2D::new(0.0, 0.0), Point2D::new(3.0, 1.0)]), vec![0, 1]);
    }

    #[test]
    fn tsp_square_perimeter() {
        let pts = square();
        let order = tsp_order(&pts);
        assert!((tour_length(&pts, &order) - 4.0).abs() < 1e-12);
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2, 3]);
    }

    #[test]
    fn tsp_seven_points_near_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let pts: Vec<Point2D> = (0..7)
            .map(|_| Point2D::new(rng.random::<f64>() * 100.0, rng.random::<f64>() * 100.0))
            .collect();
        let order = tsp_order(&pts);
        let opt = brute_force(&pts);
        assert!(tour_length(&pts, &order) <= opt * 1.05);
    }

    #[test]
    fn tsp_local_minimum_and_no_worse_than_nearest_neighbour() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [5usize, 12, 25, 40] {
            let pts: Vec<Point2D> = (0..n)
                .map(|_| Point2D::new(rng.random::<f64>() * 100.0, rng.random::<f64>() * 100.0))
                .collect();
            let order = tsp_order(&pts);
            assert!(is_two_opt_local_minimum(&pts, &order));
            assert!(tour_length(&pts, &order) <= nearest_neighbour_length(&pts) + 1e-9);
            assert_eq!(order[0], 0);
        }
    }

    #[test]
    fn no_movers_no_paths() {
        let cfg = ScenarioConfig {
            movers: 0,
            ..Default::default()
        };
        let s = generate_scenario(&cfg).unwrap();
        assert!(s.mover_paths.is_empty());
        assert_eq!(s.landmarks.len(), cfg.landmarks);
    }

    #[test]
    fn vacuous_radius_places_every_landmark() {
        let cfg = ScenarioConfig {
            landmark_radius: 200.0,
            movers: 0,
            landmarks: 25,
            ..Default::default()
        };
        let s = generate_scenario(&cfg).unwrap();
        assert_eq!(s.landmarks.len(), 25);
    }

    #[test]
    fn placement_exhaustion_is_reported() {
        let cfg = ScenarioConfig {
            landmark_radius: 1e-9,
            ..Default::default()
        };
        assert!(matches!(generate(&cfg), Err(Error::PlacementExhausted { index: 0, .. })));
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = ScenarioConfig::default();
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let other = ScenarioConfig { seed: 2, ..cfg.clone() };
        assert_ne!(generate(&cfg).unwrap().0, generate(&other).unwrap().0);
    }

    #[test]
    fn adding_movers_does_not_perturb_other_streams() {
        let a = generate(&ScenarioConfig {
            landmarks: 10,
            movers: 0,
            ..Default::default()
        })
        .unwrap();
        let b = generate(&ScenarioConfig {
            landmarks: 13,
            movers: 3,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(a.0.waypoints, b.0.waypoints);
        assert_eq!(a.1, b.1);
        assert_eq!(a.0.landmarks, b.0.landmarks[..10]);
    }

    #[test]
    fn stationary_landmarks_near_waypoints_and_inside_area() {
        for seed in 0..20 {
            let cfg = ScenarioConfig {
                seed,
                ..Default::default()
            };
            let (s, _) = generate(&cfg).unwrap();
            for l in s.stationary() {
                let nearest = s.waypoints.iter().map(|w| distance(*w, l.initial)).fold(f64::INFINITY, f64::min);
                assert!(nearest <= cfg.landmark_radius);
                assert!(cfg.contains(l.initial));
            }
            for path in s.mover_paths.values() {
                assert!(path.iter().all(|p| cfg.contains(*p)));
            }
        }
    }

    #[test]
    fn mover_paths_fixed_speed() {
        let cfg = ScenarioConfig::default();
        let (s, truth) = generate(&cfg).unwrap();
        assert_eq!(s.mover_paths.len(), cfg.movers);
        for path in s.mover_paths.values() {
            assert_eq!(path.len(), truth.observation_steps(cfg.obs_every));
            for w in path.windows(2) {
                assert!((distance(w[0], w[1]) - 0.5).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn stationary_mover_when_speed_zero() {
        let cfg = ScenarioConfig {
            mover_speed: 0.0,
            ..Default::default()
        };
        let (s, _) = generate(&cfg).unwrap();
        for (id, path) in &s.mover_paths {
            let start = s.landmarks.iter().find(|l| l.id == *id).unwrap().initial;
            assert!(path.iter().all(|p| *p == start));
        }
    }

    #[test]
    fn mover_stays_tethered_when_it_can_keep_pace() {
        // a mover at least as fast as the robot stays within one step of its tether disk
        let cfg = ScenarioConfig {
            robot_speed: 1.0,
            mover_speed: 1.0,
            max_turn_rate: 90f64.to_radians(),
            ..Default::default()
        };
        let (s, truth) = generate(&cfg).unwrap();
        for path in s.mover_paths.values() {
            for (j, p) in path.iter().enumerate() {
                let robot = truth.poses[j * cfg.obs_every].position();
                assert!(distance(*p, robot) <= cfg.mover_tether + cfg.mover_step() + 1e-9, "step {j}");
            }
        }
    }

    #[test]
    fn aligned_segment_commands_no_turn() {
        let cfg = ScenarioConfig {
            noise: NoiseSigmas::zero(),
            ..Default::default()
        };
        let s = Scenario {
            waypoints: vec![Point2D::new(10.0, 10.0), Point2D::new(40.0, 10.0)],
            ..Default::default()
        };
        let truth = drive(&s, &ScenarioConfig { laps: 1, ..cfg.clone() });
        // first leg runs straight along +x
        let first_leg = truth
            .poses
            .iter()
            .position(|p| distance(p.position(), s.waypoints[1]) <= cfg.switch_radius)
            .unwrap();
        assert!(truth.commanded[..first_leg].iter().all(|c| c.omega == 0.0));
    }

    #[test]
    fn noiseless_drive_finishes_at_start() {
        let cfg = ScenarioConfig {
            noise: NoiseSigmas::zero(),
            ..Default::default()
        };
        let (s, truth) = generate(&cfg).unwrap();
        let last = truth.poses.last().unwrap().position();
        assert!(distance(last, s.waypoints[0]) <= cfg.switch_radius);
    }

    #[test]
    fn truth_replays_exactly() {
        let cfg = ScenarioConfig::default();
        let (_, truth) = generate(&cfg).unwrap();
        let mut pose = truth.poses[0];
        for (k, u) in truth.applied.iter().enumerate() {
            pose = motion_model(pose, u);
            let want = truth.poses[k + 1];
            assert!((pose.x - want.x).abs() <= 1e-12);
            assert!((pose.y - want.y).abs() <= 1e-12);
            assert!((pose.theta - want.theta).abs() <= 1e-12);
        }
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let base = ScenarioConfig::default();
        assert!(ScenarioConfig { waypoints: 1, ..base.clone() }.validate().is_err());
        assert!(ScenarioConfig { movers: 11, ..base.clone() }.validate().is_err());
        assert!(ScenarioConfig { dt: 0.0, ..base.clone() }.validate().is_err());
        assert!(ScenarioConfig { landmark_radius: -1.0, ..base.clone() }.validate().is_err());
        assert!(base.validate().is_ok());
    }
}
