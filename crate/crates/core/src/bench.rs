//! Paired trial runner, experiment sweeps, the room-mapping scenario and the
//! CSV writers behind the command-line tool.
//!
//! Both algorithms share one pipeline. Each observation step senses the
//! world, gates the measurements, removes landmarks newly classified as
//! moving, corrects with admitted measurements of mapped landmarks and then
//! augments the state with admitted first-time landmarks. The conventional
//! baseline uses the same gate with classification switched off, so it also
//! waits for a second sighting before mapping a landmark.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::time::Instant;

use nalgebra::Matrix3;
use rayon::prelude::*;

use crate::dynamic_filter::{Classification, GateMode, MotionGate};
use crate::error::{Error, Result};
use crate::geometry::{distance, Point2D, Pose2D};
use crate::metrics::{iae, mean_std, TrialResult};
use crate::rng::{stream, trial_seed, Stream};
use crate::scenario::{drive, generate, LandmarkKind, LandmarkSpec, Scenario, ScenarioConfig, TruthLog};
use crate::sensing::sense;
use crate::slam::{LandmarkId, Measurement, SlamState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Conventional,
    Proposed,
}

impl Algorithm {
    pub const BOTH: [Algorithm; 2] = [Algorithm::Conventional, Algorithm::Proposed];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Conventional => "conventional",
            Algorithm::Proposed => "proposed",
        }
    }

    fn gate_mode(&self) -> GateMode {
        match self {
            Algorithm::Conventional => GateMode::Conventional,
            Algorithm::Proposed => GateMode::Proposed,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "conventional" => Ok(Algorithm::Conventional),
            "proposed" => Ok(Algorithm::Proposed),
            other => Err(Error::InvalidConfig(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Everything one filter run produces.
#[derive(Debug, Clone)]
pub struct TrialOutput {
    pub result: TrialResult,
    /// Gate decisions, tagged with their observation step.
    pub classifications: Vec<(usize, Classification)>,
    /// Landmarks in the state at the end of the run.
    pub final_map: Vec<(LandmarkId, Point2D)>,
    pub control_steps: usize,
}

/// Runs one filter over a scenario and its ground truth.
///
/// The filter predicts with the commanded controls while the truth moved
/// under the noisy applied ones. Observation steps fall on every
/// `obs_every`-th control step, starting at the initial pose.
pub fn run_trial(
    scenario: &Scenario,
    truth: &TruthLog,
    config: &ScenarioConfig,
    algorithm: Algorithm,
) -> Result<TrialOutput> {
    let noise = config.noise.filter_noise(config.dt);
    let sensor = config.sensor();
    let scaling = config.scaling;
    let mut meas_rng = stream(config.seed, Stream::MeasurementNoise);
    let mut state = SlamState::new(truth.poses[0], Matrix3::zeros());
    let mut gate = MotionGate::new(algorithm.gate_mode(), config.classifier);
    let diverged = |e: Error| Error::FilterDiverged(Box::new(e));

    let obs_steps = truth.observation_steps(config.obs_every);
    let mut result = TrialResult {
        seed: config.seed,
        ..Default::default()
    };
    result.estimated.reserve(obs_steps);
    result.truth.reserve(obs_steps);
    let mut classifications = Vec::new();
    let mut busy = std::time::Duration::ZERO;

    let k_max = truth.control_steps();
    for k in 0..=k_max {
        if k > 0 {
            let t0 = Instant::now();
            state
                .predict(&truth.commanded[k - 1], &noise, scaling)
                .map_err(diverged)?;
            busy += t0.elapsed();
        }
        if k % config.obs_every != 0 {
            continue;
        }
        let j = k / config.obs_every;
        let true_pose = truth.poses[k];
        let zs = sense(true_pose, &scenario.world_at(j), &sensor, &mut meas_rng);

        let t0 = Instant::now();
        let out = gate.step_filter(&zs, state.pose(), j);
        for id in &out.newly_moving {
            if state.contains(*id) {
                state.remove_landmark(*id)?;
            }
        }
        let (mapped, fresh): (Vec<Measurement>, Vec<Measurement>) =
            out.admitted.iter().partition(|m| state.contains(m.id));
        state.correct(&mapped, &noise, scaling).map_err(diverged)?;
        for m in &fresh {
            state.augment(m, &noise, scaling).map_err(diverged)?;
        }
        gate.commit_pose(j, state.pose());
        busy += t0.elapsed();

        result.estimated.push(state.pose());
        result.truth.push(true_pose);
        result.admitted.push(out.admitted.len());
        result.rejected.push(out.rejected.len());
        classifications.extend(out.log.into_iter().map(|c| (j, c)));
    }
    result.iae = if result.estimated.len() >= 2 {
        iae(&result.estimated, &result.truth)?
    } else {
        0.0
    };
    result.ms_per_step = busy.as_secs_f64() * 1e3 / k_max.max(1) as f64;
    Ok(TrialOutput {
        result,
        classifications,
        final_map: state.landmarks().collect(),
        control_steps: k_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    VaryMovers,
    VaryLandmarks,
    VaryWaypoints,
    Timing,
    Mapping,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::VaryMovers => "vary_movers",
            ExperimentKind::VaryLandmarks => "vary_landmarks",
            ExperimentKind::VaryWaypoints => "vary_waypoints",
            ExperimentKind::Timing => "timing",
            ExperimentKind::Mapping => "mapping",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "vary_movers" => ExperimentKind::VaryMovers,
            "vary_landmarks" => ExperimentKind::VaryLandmarks,
            "vary_waypoints" => ExperimentKind::VaryWaypoints,
            "timing" => ExperimentKind::Timing,
            "mapping" => ExperimentKind::Mapping,
            other => return Err(Error::InvalidConfig(format!("unknown experiment kind `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub kind: ExperimentKind,
    pub values: Vec<u64>,
    pub trials: usize,
    pub base: ScenarioConfig,
    pub algorithms: Vec<Algorithm>,
    /// Write measured wall-clock timings. Timings vary between runs, so
    /// leaving this off keeps the output files reproducible byte for byte.
    pub record_timing: bool,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, values: Vec<u64>, base: ScenarioConfig) -> Self {
        Self {
            name: kind.as_str().to_string(),
            kind,
            values,
            trials: 100,
            base,
            algorithms: Algorithm::BOTH.to_vec(),
            record_timing: kind == ExperimentKind::Timing,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidConfig("experiment needs at least one sweep value".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidConfig("no algorithms selected".into()));
        }
        for &v in &self.values {
            self.config_for(v, 0).validate()?;
        }
        Ok(())
    }

    /// Scenario configuration of one cell of the sweep.
    ///
    /// `vary_landmarks` sweeps the stationary count, so the total landmark
    /// count is the value plus the configured mover count.
    pub fn config_for(&self, value: u64, trial: usize) -> ScenarioConfig {
        let mut cfg = self.base.clone();
        let v = value as usize;
        match self.kind {
            ExperimentKind::VaryMovers | ExperimentKind::Timing => cfg.movers = v,
            ExperimentKind::VaryLandmarks => cfg.landmarks = v + cfg.movers,
            ExperimentKind::VaryWaypoints => cfg.waypoints = v,
            ExperimentKind::Mapping => {}
        }
        cfg.seed = trial_seed(self.base.seed, value, trial as u64);
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub param_value: u64,
    pub trial: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    /// NaN for a diverged trial.
    pub iae: f64,
    pub steps: usize,
    pub ms_per_step: f64,
    pub admitted: usize,
    pub rejected: usize,
}

impl ResultRow {
    pub fn failed(&self) -> bool {
        self.iae.is_nan()
    }
}

pub const RESULTS_HEADER: &str = "experiment,param_value,trial,seed,algorithm,iae,steps,ms_per_step,admitted,rejected";
pub const SUMMARY_HEADER: &str = "param,algo,mean_iae,std_iae,mean_ms";

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub param_value: u64,
    pub algorithm: Algorithm,
    pub mean_iae: f64,
    pub std_iae: f64,
    pub mean_ms: f64,
    pub completed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    /// Sorted by (sweep position, trial, algorithm).
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentReport {
    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| r.failed()).count()
    }

    pub fn all_failed(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.failed())
    }

    pub fn cell(&self, value: u64, algorithm: Algorithm) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|s| s.param_value == value && s.algorithm == algorithm)
    }

    /// Per-trial IAE pairs `(conventional, proposed)` at one sweep value,
    /// skipping trials where either run failed.
    pub fn paired(&self, value: u64) -> Vec<(f64, f64)> {
        let mut by_trial: BTreeMap<usize, [f64; 2]> = BTreeMap::new();
        for r in self.rows.iter().filter(|r| r.param_value == value) {
            let slot = by_trial.entry(r.trial).or_insert([f64::NAN; 2]);
            slot[r.algorithm as usize] = r.iae;
        }
        by_trial
            .values()
            .filter(|p| p.iter().all(|v| !v.is_nan()))
            .map(|p| (p[0], p[1]))
            .collect()
    }
}

/// Runs one (value, trial) cell for every selected algorithm on the same
/// scenario and noise streams.
fn run_cell(spec: &ExperimentSpec, value: u64, trial: usize) -> Vec<ResultRow> {
    let cfg = spec.config_for(value, trial);
    let world = match spec.kind {
        ExperimentKind::Mapping => Ok(mapping_world(&cfg, &MappingWorld::default())),
        _ => generate(&cfg),
    };
    spec.algorithms
        .iter()
        .map(|&algorithm| {
            let outcome = world
                .as_ref()
                .map_err(|e| Error::InvalidConfig(e.to_string()))
                .and_then(|(scenario, truth)| run_trial(scenario, truth, &cfg, algorithm));
            let (iae, steps, ms, admitted, rejected) = match outcome {
                Ok(o) => (
                    o.result.iae,
                    o.result.estimated.len(),
                    o.result.ms_per_step,
                    o.result.admitted_total(),
                    o.result.rejected_total(),
                ),
                Err(_) => (f64::NAN, 0, f64::NAN, 0, 0),
            };
            ResultRow {
                experiment: spec.name.clone(),
                param_value: value,
                trial,
                seed: cfg.seed,
                algorithm,
                iae,
                steps,
                ms_per_step: ms,
                admitted,
                rejected,
            }
        })
        .collect()
}

/// Runs every sweep value and trial, on up to `jobs` threads. The result is
/// independent of `jobs`.
pub fn run_experiment(spec: &ExperimentSpec, jobs: usize) -> Result<ExperimentReport> {
    spec.validate()?;
    let cells: Vec<(usize, u64, usize)> = spec
        .values
        .iter()
        .enumerate()
        .flat_map(|(i, &v)| (0..spec.trials).map(move |t| (i, v, t)))
        .collect();
    let run = || -> Vec<(usize, Vec<ResultRow>)> {
        cells
            .par_iter()
            .map(|&(i, v, t)| (i, run_cell(spec, v, t)))
            .collect()
    };
    let mut nested = if jobs <= 1 {
        cells.iter().map(|&(i, v, t)| (i, run_cell(spec, v, t))).collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(run)
    };
    nested.sort_by_key(|(i, rows)| (*i, rows.first().map_or(0, |r| r.trial)));
    let mut rows: Vec<ResultRow> = nested.into_iter().flat_map(|(_, r)| r).collect();
    if !spec.record_timing {
        for r in &mut rows {
            if !r.failed() {
                r.ms_per_step = 0.0;
            }
        }
    }

    let mut summary = Vec::new();
    for &v in &spec.values {
        for &algorithm in &spec.algorithms {
            let cell: Vec<&ResultRow> = rows
                .iter()
                .filter(|r| r.param_value == v && r.algorithm == algorithm)
                .collect();
            let ok: Vec<&ResultRow> = cell.iter().copied().filter(|r| !r.failed()).collect();
            let iaes: Vec<f64> = ok.iter().map(|r| r.iae).collect();
            let ms: Vec<f64> = ok.iter().map(|r| r.ms_per_step).collect();
            let (mean_iae, std_iae) = mean_std(&iaes);
            summary.push(SummaryRow {
                param_value: v,
                algorithm,
                mean_iae,
                std_iae,
                mean_ms: mean_std(&ms).0,
                completed: ok.len(),
                failed: cell.len() - ok.len(),
            });
        }
    }
    Ok(ExperimentReport { rows, summary })
}

pub fn write_results_csv<W: Write>(rows: &[ResultRow], mut w: W) -> io::Result<()> {
    writeln!(w, "{RESULTS_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.experiment, r.param_value, r.trial, r.seed, r.algorithm, r.iae, r.steps, r.ms_per_step, r.admitted, r.rejected
        )?;
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(summary: &[SummaryRow], mut w: W) -> io::Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for s in summary {
        writeln!(
            w,
            "{},{},{},{},{}",
            s.param_value, s.algorithm, s.mean_iae, s.std_iae, s.mean_ms
        )?;
    }
    Ok(())
}

pub const TRAJECTORY_HEADER: &str = "step,est_x,est_y,est_theta,true_x,true_y,true_theta,admitted,rejected";

pub fn write_trajectory_csv<W: Write>(result: &TrialResult, mut w: W) -> io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for (j, (e, t)) in result.estimated.iter().zip(&result.truth).enumerate() {
        writeln!(
            w,
            "{j},{},{},{},{},{},{},{},{}",
            e.x, e.y, e.theta, t.x, t.y, t.theta, result.admitted[j], result.rejected[j]
        )?;
    }
    Ok(())
}

pub const CLASSIFICATION_HEADER: &str = "step,landmark_id,verdict,d_hat,d_meas";

pub fn write_classification_csv<W: Write>(log: &[(usize, Classification)], mut w: W) -> io::Result<()> {
    writeln!(w, "{CLASSIFICATION_HEADER}")?;
    for (j, c) in log {
        writeln!(w, "{j},{},{},{},{}", c.id, c.verdict.as_str(), c.d_hat, c.d_meas)?;
    }
    Ok(())
}

/// Geometry of the room-mapping scenario: a rectangular room whose walls
/// are dense point landmarks, a robot circling inside it, and one rigid
/// object of a few points shuttling across the room.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingWorld {
    pub room_width: f64,
    pub room_height: f64,
    pub wall_spacing: f64,
    /// Inset of the robot's rectangular route from the walls.
    pub route_inset: f64,
    pub robot_speed: f64,
    pub max_turn_rate: f64,
    pub switch_radius: f64,
    pub object_from: Point2D,
    pub object_to: Point2D,
    pub object_speed: f64,
    /// Half-size of the object's square footprint; points at centre and corners.
    pub object_half_size: f64,
}

impl Default for MappingWorld {
    fn default() -> Self {
        Self {
            room_width: 6.0,
            room_height: 4.0,
            wall_spacing: 0.25,
            route_inset: 1.0,
            robot_speed: 0.5,
            max_turn_rate: 90f64.to_radians(),
            switch_radius: 0.3,
            object_from: Point2D::new(1.5, 2.0),
            object_to: Point2D::new(4.5, 2.0),
            object_speed: 1.0,
            object_half_size: 0.15,
        }
    }
}

/// First id used for the moving object's points.
pub const OBJECT_ID_BASE: u32 = 100_000;

/// Points every `spacing` meters around the rectangle perimeter.
fn wall_points(w: f64, h: f64, spacing: f64) -> Vec<Point2D> {
    let mut pts = Vec::new();
    let nx = (w / spacing).round() as usize;
    let ny = (h / spacing).round() as usize;
    for i in 0..nx {
        pts.push(Point2D::new(i as f64 * w / nx as f64, 0.0));
    }
    for i in 0..ny {
        pts.push(Point2D::new(w, i as f64 * h / ny as f64));
    }
    for i in 0..nx {
        pts.push(Point2D::new(w - i as f64 * w / nx as f64, h));
    }
    for i in 0..ny {
        pts.push(Point2D::new(0.0, h - i as f64 * h / ny as f64));
    }
    pts
}

/// Position along a back-and-forth shuttle after travelling `s` meters.
fn shuttle(from: Point2D, to: Point2D, s: f64) -> Point2D {
    let len = distance(from, to);
    if len == 0.0 {
        return from;
    }
    let phase = s.rem_euclid(2.0 * len);
    let t = if phase <= len { phase } else { 2.0 * len - phase } / len;
    Point2D::new(from.x + t * (to.x - from.x), from.y + t * (to.y - from.y))
}

/// Builds the room scenario. Noise, sensing, classifier, timing and seed
/// come from `config`; the geometry from `world`.
pub fn mapping_world(config: &ScenarioConfig, world: &MappingWorld) -> (Scenario, TruthLog) {
    let (w, h, inset) = (world.room_width, world.room_height, world.route_inset);
    let waypoints = vec![
        Point2D::new(inset, inset),
        Point2D::new(w - inset, inset),
        Point2D::new(w - inset, h - inset),
        Point2D::new(inset, h - inset),
    ];
    let landmarks: Vec<LandmarkSpec> = wall_points(w, h, world.wall_spacing)
        .into_iter()
        .enumerate()
        .map(|(i, p)| LandmarkSpec {
            id: LandmarkId(i as u32),
            kind: LandmarkKind::Stationary,
            initial: p,
        })
        .collect();
    let mut scenario = Scenario {
        waypoints,
        landmarks,
        mover_paths: BTreeMap::new(),
    };
    let drive_cfg = ScenarioConfig {
        robot_speed: world.robot_speed,
        max_turn_rate: world.max_turn_rate,
        switch_radius: world.switch_radius,
        area_width: w,
        area_height: h,
        ..config.clone()
    };
    let truth = drive(&scenario, &drive_cfg);
    let steps = truth.observation_steps(config.obs_every);
    let step_len = world.object_speed * config.obs_period();
    let d = world.object_half_size;
    let offsets = [(0.0, 0.0), (-d, -d), (d, -d), (d, d), (-d, d)];
    for (k, (ox, oy)) in offsets.into_iter().enumerate() {
        let id = LandmarkId(OBJECT_ID_BASE + k as u32);
        let path: Vec<Point2D> = (0..steps)
            .map(|j| shuttle(world.object_from, world.object_to, j as f64 * step_len).translate(ox, oy))
            .collect();
        scenario.landmarks.push(LandmarkSpec {
            id,
            kind: LandmarkKind::Moving,
            initial: path[0],
        });
        scenario.mover_paths.insert(id, path);
    }
    (scenario, truth)
}

#[derive(Debug, Clone)]
pub struct MappingReport {
    pub output: TrialOutput,
    pub wall_points: usize,
    pub wall_points_in_map: usize,
    /// Root-mean-square position error of the wall points kept in the map.
    pub wall_rmse: f64,
    pub object_points_in_map: usize,
    /// True position of every landmark that made it into the map.
    pub truth: BTreeMap<LandmarkId, Point2D>,
}

pub fn run_mapping(config: &ScenarioConfig, algorithm: Algorithm) -> Result<MappingReport> {
    config.validate()?;
    let (scenario, truth) = mapping_world(config, &MappingWorld::default());
    let output = run_trial(&scenario, &truth, config, algorithm)?;
    let walls: BTreeMap<LandmarkId, Point2D> = scenario
        .stationary()
        .map(|l| (l.id, l.initial))
        .collect();
    let mut sq = 0.0;
    let mut kept = 0;
    let mut objects = 0;
    let mut seen = BTreeMap::new();
    let last = truth.observation_steps(config.obs_every) - 1;
    let world_end: BTreeMap<LandmarkId, Point2D> = scenario.world_at(last).into_iter().collect();
    for (id, est) in &output.final_map {
        match walls.get(id) {
            Some(t) => {
                sq += (est.x - t.x).powi(2) + (est.y - t.y).powi(2);
                kept += 1;
            }
            None => objects += 1,
        }
        seen.insert(*id, world_end[id]);
    }
    Ok(MappingReport {
        wall_points: walls.len(),
        wall_points_in_map: kept,
        wall_rmse: if kept > 0 { (sq / kept as f64).sqrt() } else { f64::NAN },
        object_points_in_map: objects,
        truth: seen,
        output,
    })
}

pub const MAP_HEADER: &str = "id,kind,x,y,true_x,true_y";

pub fn write_map_csv<W: Write>(report: &MappingReport, mut w: W) -> io::Result<()> {
    writeln!(w, "{MAP_HEADER}")?;
    for (id, p) in &report.output.final_map {
        let kind = if id.0 >= OBJECT_ID_BASE { "object" } else { "wall" };
        let t = report.truth[id];
        writeln!(w, "{id},{kind},{},{},{},{}", p.x, p.y, t.x, t.y)?;
    }
    Ok(())
}

pub fn write_map_report<W: Write>(report: &MappingReport, mut w: W) -> io::Result<()> {
    writeln!(w, "wall_points = {}", report.wall_points)?;
    writeln!(w, "wall_points_in_map = {}", report.wall_points_in_map)?;
    writeln!(w, "wall_rmse = {}", report.wall_rmse)?;
    writeln!(w, "object_points_in_map = {}", report.object_points_in_map)?;
    writeln!(w, "iae = {}", report.output.result.iae)?;
    writeln!(w, "final_position_error = {}", report.output.result.final_position_error())?;
    Ok(())
}

/// Pose of the last observation step, for quick reporting.
pub fn final_pose(output: &TrialOutput) -> Option<Pose2D> {
    output.result.estimated.last().copied()
}
