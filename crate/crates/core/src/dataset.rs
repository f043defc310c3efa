//! Line-oriented scenario files.
//!
//! ```text
//! dynaslam-scenario v1
//! W <idx> <x> <y>
//! L <id> <S|D> <x> <y>
//! P <id> <step> <x> <y>
//! T <step> <x> <y> <theta> <v_cmd> <w_cmd> <v_app> <w_app>
//! ```
//!
//! `T` lines hold the true pose after each control step together with the
//! control that led there; step 0 is the start pose with zero controls.
//! Floats are written with 17 significant digits so a round trip is exact.
//! Blank lines and lines starting with `#` are skipped.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Point2D, Pose2D};
use crate::scenario::{LandmarkKind, LandmarkSpec, Scenario, TruthLog};
use crate::slam::{Control, LandmarkId};

pub const HEADER: &str = "dynaslam-scenario v1";

pub fn write_dataset<W: Write>(scenario: &Scenario, truth: &TruthLog, mut w: W) -> io::Result<()> {
    writeln!(w, "{HEADER}")?;
    for (i, p) in scenario.waypoints.iter().enumerate() {
        writeln!(w, "W {i} {:.16e} {:.16e}", p.x, p.y)?;
    }
    for l in &scenario.landmarks {
        let kind = match l.kind {
            LandmarkKind::Stationary => 'S',
            LandmarkKind::Moving => 'D',
        };
        writeln!(w, "L {} {kind} {:.16e} {:.16e}", l.id, l.initial.x, l.initial.y)?;
    }
    for (id, path) in &scenario.mover_paths {
        for (j, p) in path.iter().enumerate() {
            writeln!(w, "P {id} {j} {:.16e} {:.16e}", p.x, p.y)?;
        }
    }
    for (k, pose) in truth.poses.iter().enumerate() {
        let (c, a) = if k == 0 {
            (Control::new(0.0, 0.0, 0.0), Control::new(0.0, 0.0, 0.0))
        } else {
            (truth.commanded[k - 1], truth.applied[k - 1])
        };
        writeln!(
            w,
            "T {k} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
            pose.x, pose.y, pose.theta, c.v, c.omega, a.v, a.omega
        )?;
    }
    Ok(())
}

/// Reads a scenario file. The format does not store the control time step,
/// so `dt` supplies it.
pub fn load(path: &Path, dt: f64) -> Result<(Scenario, TruthLog)> {
    parse_dataset(&std::fs::read_to_string(path)?, dt)
}

/// Parses a scenario file. Indices and steps must count up from zero
/// without gaps, landmark ids must be unique, and every moving landmark
/// needs a path (stationary ones must not have one).
pub fn parse_dataset(text: &str, dt: f64) -> Result<(Scenario, TruthLog)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some((_, HEADER)) => {}
        Some((line, _)) => return Err(parse_err(line, "missing `dynaslam-scenario v1` header")),
        None => return Err(parse_err(1, "empty file")),
    }

    let mut scenario = Scenario::default();
    let mut truth = TruthLog::default();
    let mut paths: BTreeMap<LandmarkId, Vec<Point2D>> = BTreeMap::new();
    for (line, text) in lines {
        let err = |msg: &str| parse_err(line, msg);
        let mut fields = text.split_whitespace();
        let tag = fields.next().unwrap_or_default();
        let rest: Vec<&str> = fields.collect();
        let arity = |n: usize| {
            if rest.len() == n {
                Ok(())
            } else {
                Err(err(&format!("`{tag}` record needs {n} fields, found {}", rest.len())))
            }
        };
        let num = |i: usize| -> Result<f64> {
            rest[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(&format!("invalid number `{}`", rest[i])))
        };
        let index = |i: usize| -> Result<usize> {
            rest[i]
                .parse::<usize>()
                .map_err(|_| err(&format!("invalid index `{}`", rest[i])))
        };
        let id = |i: usize| -> Result<LandmarkId> {
            rest[i]
                .parse::<u32>()
                .map(LandmarkId)
                .map_err(|_| err(&format!("invalid landmark id `{}`", rest[i])))
        };
        match tag {
            "W" => {
                arity(3)?;
                if index(0)? != scenario.waypoints.len() {
                    return Err(err("waypoint indices must count up from 0"));
                }
                scenario.waypoints.push(Point2D::new(num(1)?, num(2)?));
            }
            "L" => {
                arity(4)?;
                let id = id(0)?;
                if scenario.landmarks.iter().any(|l| l.id == id) {
                    return Err(err(&format!("duplicate landmark {id}")));
                }
                let kind = match rest[1] {
                    "S" => LandmarkKind::Stationary,
                    "D" => LandmarkKind::Moving,
                    other => return Err(err(&format!("landmark kind must be S or D, got `{other}`"))),
                };
                scenario.landmarks.push(LandmarkSpec {
                    id,
                    kind,
                    initial: Point2D::new(num(2)?, num(3)?),
                });
            }
            "P" => {
                arity(4)?;
                let path = paths.entry(id(0)?).or_default();
                if index(1)? != path.len() {
                    return Err(err("path steps must count up from 0"));
                }
                path.push(Point2D::new(num(2)?, num(3)?));
            }
            "T" => {
                arity(8)?;
                let k = index(0)?;
                if k != truth.poses.len() {
                    return Err(err("truth steps must count up from 0"));
                }
                let (x, y, theta) = (num(1)?, num(2)?, num(3)?);
                truth.poses.push(Pose2D { x, y, theta });
                if k > 0 {
                    truth.commanded.push(Control::new(num(4)?, num(5)?, dt));
                    truth.applied.push(Control::new(num(6)?, num(7)?, dt));
                }
            }
            other => return Err(err(&format!("unknown record `{other}`"))),
        }
    }

    let end = text.lines().count().max(1);
    for (id, _) in &paths {
        match scenario.landmarks.iter().find(|l| l.id == *id) {
            Some(l) if l.kind == LandmarkKind::Moving => {}
            _ => return Err(parse_err(end, &format!("path for landmark {id}, which is not moving"))),
        }
    }
    for l in &scenario.landmarks {
        if l.kind == LandmarkKind::Moving && !paths.contains_key(&l.id) {
            return Err(parse_err(end, &format!("moving landmark {} has no path", l.id)));
        }
    }
    scenario.mover_paths = paths;
    Ok((scenario, truth))
}

fn parse_err(line: usize, msg: &str) -> Error {
    Error::DatasetParse {
        line,
        msg: msg.to_string(),
    }
}
