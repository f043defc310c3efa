//! Plain-text run configuration.
//!
//! ```text
//! # comment
//! [scenario]
//! waypoints = 20
//! movers = 3
//!
//! [noise]
//! sigma_range = 0.02
//!
//! [classifier]
//! epsilon = inf
//!
//! [experiment]
//! kind = vary_movers
//! values = 1, 2, 3
//! ```
//!
//! Every key belongs to a section; unknown sections, unknown keys and
//! repeated keys are rejected. Angles are given in degrees.

use std::collections::BTreeSet;
use std::path::Path;

use crate::bench::{Algorithm, ExperimentKind, ExperimentSpec};
use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;
use crate::unscented::Scaling;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSettings {
    pub name: Option<String>,
    pub kind: Option<ExperimentKind>,
    pub values: Vec<u64>,
    pub trials: usize,
    pub algorithms: Vec<Algorithm>,
    /// `None` leaves the choice to the experiment kind.
    pub record_timing: Option<bool>,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            name: None,
            kind: None,
            values: Vec::new(),
            trials: 100,
            algorithms: Algorithm::BOTH.to_vec(),
            record_timing: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub scenario: ScenarioConfig,
    pub experiment: ExperimentSettings,
}

impl Config {
    /// The experiment described by the `[experiment]` section.
    pub fn experiment_spec(&self) -> Result<ExperimentSpec> {
        let e = &self.experiment;
        let kind = e
            .kind
            .ok_or_else(|| Error::InvalidConfig("[experiment] kind is required".into()))?;
        let values = match (kind, e.values.is_empty()) {
            (ExperimentKind::Mapping, true) => vec![0],
            (_, true) => return Err(Error::InvalidConfig("[experiment] values is required".into())),
            _ => e.values.clone(),
        };
        let mut spec = ExperimentSpec::new(kind, values, self.scenario.clone());
        spec.trials = e.trials;
        spec.algorithms = e.algorithms.clone();
        if let Some(name) = &e.name {
            spec.name = name.clone();
        }
        if let Some(t) = e.record_timing {
            spec.record_timing = t;
        }
        spec.validate()?;
        Ok(spec)
    }
}

pub fn load(path: &Path) -> Result<Config> {
    parse_str(&std::fs::read_to_string(path)?)
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Scenario,
    Noise,
    Classifier,
    Experiment,
}

/// Parses and validates a configuration.
pub fn parse_str(text: &str) -> Result<Config> {
    let mut cfg = Config::default();
    let mut section = None;
    let mut seen = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |msg: String| Error::ConfigParse { line: line_no, msg };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err("unterminated section header".into()))?
                .trim();
            section = Some(match name {
                "scenario" => Section::Scenario,
                "noise" => Section::Noise,
                "classifier" => Section::Classifier,
                "experiment" => Section::Experiment,
                other => return Err(err(format!("unknown section `{other}`"))),
            });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err("expected `key = value`".into()))?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section.ok_or_else(|| err(format!("key `{key}` outside any section")))?;
        if !seen.insert((sec, key.to_string())) {
            return Err(err(format!("duplicate key `{key}`")));
        }
        apply(&mut cfg, sec, key, value).map_err(err)?;
    }
    cfg.scenario.validate()?;
    let e = &cfg.experiment;
    if e.trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    if e.algorithms.is_empty() {
        return Err(Error::InvalidConfig("no algorithms selected".into()));
    }
    Ok(cfg)
}

fn apply(cfg: &mut Config, section: Section, key: &str, value: &str) -> std::result::Result<(), String> {
    let s = &mut cfg.scenario;
    match (section, key) {
        (Section::Scenario, "waypoints") => s.waypoints = count(value)?,
        (Section::Scenario, "landmarks") => s.landmarks = count(value)?,
        (Section::Scenario, "movers") => s.movers = count(value)?,
        (Section::Scenario, "area_width") => s.area_width = real(value)?,
        (Section::Scenario, "area_height") => s.area_height = real(value)?,
        (Section::Scenario, "landmark_radius") => s.landmark_radius = real(value)?,
        (Section::Scenario, "robot_speed") => s.robot_speed = real(value)?,
        (Section::Scenario, "max_turn_rate_deg") => s.max_turn_rate = real(value)?.to_radians(),
        (Section::Scenario, "dt") => s.dt = real(value)?,
        (Section::Scenario, "obs_every") => s.obs_every = count(value)?,
        (Section::Scenario, "mover_speed") => s.mover_speed = real(value)?,
        (Section::Scenario, "mover_tether") => s.mover_tether = real(value)?,
        (Section::Scenario, "switch_radius") => s.switch_radius = real(value)?,
        (Section::Scenario, "laps") => s.laps = count(value)?,
        (Section::Scenario, "max_range") => s.max_range = real(value)?,
        (Section::Scenario, "fov_deg") => s.fov = real(value)?.to_radians(),
        (Section::Scenario, "seed") => s.seed = value.parse().map_err(|_| format!("invalid seed `{value}`"))?,
        (Section::Scenario, "ut_lambda") => {
            s.scaling = match value {
                "classic" => Scaling::Classic,
                v => Scaling::Fixed(finite(v)?),
            }
        }
        (Section::Noise, "sigma_v") => s.noise.sigma_v = real(value)?,
        (Section::Noise, "sigma_omega_deg") => s.noise.sigma_omega = real(value)?.to_radians(),
        (Section::Noise, "sigma_range") => s.noise.sigma_r = real(value)?,
        (Section::Noise, "sigma_bearing_deg") => s.noise.sigma_b = real(value)?.to_radians(),
        (Section::Classifier, "epsilon") => s.classifier.epsilon = real(value)?,
        (Section::Classifier, "staleness_limit") => s.classifier.staleness_limit = count(value)?,
        (Section::Experiment, "name") => {
            if value.is_empty() || value.contains([',', '"', '\n']) {
                return Err(format!("invalid experiment name `{value}`"));
            }
            cfg.experiment.name = Some(value.to_string());
        }
        (Section::Experiment, "kind") => {
            cfg.experiment.kind = Some(value.parse().map_err(|e: Error| e.to_string())?)
        }
        (Section::Experiment, "values") => {
            cfg.experiment.values = value
                .split(',')
                .map(|v| v.trim().parse::<u64>().map_err(|_| format!("invalid sweep value `{}`", v.trim())))
                .collect::<std::result::Result<_, _>>()?
        }
        (Section::Experiment, "trials") => cfg.experiment.trials = count(value)?,
        (Section::Experiment, "algorithms") => {
            cfg.experiment.algorithms = parse_algorithms(value).map_err(|e| e.to_string())?
        }
        (Section::Experiment, "record_timing") => {
            cfg.experiment.record_timing = Some(match value {
                "true" => true,
                "false" => false,
                _ => return Err(format!("expected true or false, got `{value}`")),
            })
        }
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

/// `conventional`, `proposed`, `both`, or a comma-separated list.
pub fn parse_algorithms(value: &str) -> Result<Vec<Algorithm>> {
    if value.trim() == "both" {
        return Ok(Algorithm::BOTH.to_vec());
    }
    let mut out: Vec<Algorithm> = value.split(',').map(str::parse).collect::<Result<_>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

fn count(v: &str) -> std::result::Result<usize, String> {
    v.parse().map_err(|_| format!("expected a non-negative integer, got `{v}`"))
}

/// Any number except NaN; `inf` is allowed.
fn real(v: &str) -> std::result::Result<f64, String> {
    match v.parse::<f64>() {
        Ok(x) if !x.is_nan() => Ok(x),
        _ => Err(format!("expected a number, got `{v}`")),
    }
}

fn finite(v: &str) -> std::result::Result<f64, String> {
    real(v).and_then(|x| if x.is_finite() { Ok(x) } else { Err(format!("expected a finite number, got `{v}`")) })
}
