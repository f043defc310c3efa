use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dynaslam::bench::{run_experiment, run_trial, Algorithm, ExperimentKind, ExperimentSpec, RESULTS_HEADER};
use dynaslam::dynamic_filter::ClassifierParams;
use dynaslam::scenario::{generate, ScenarioConfig};

fn cli(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynaslam"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn write_conf(dir: &Path, text: &str) -> String {
    let p = dir.join("test.conf");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn seeded_default_scenario_favours_rejection() {
    let cfg = ScenarioConfig::default();
    let (s, t) = generate(&cfg).unwrap();
    let conv = run_trial(&s, &t, &cfg, Algorithm::Conventional).unwrap();
    let prop = run_trial(&s, &t, &cfg, Algorithm::Proposed).unwrap();
    assert!(prop.result.iae < conv.result.iae);
    // values recorded from the first verified run of this seed
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-6 * b;
    assert!(close(conv.result.iae, CONVENTIONAL_IAE), "conventional {}", conv.result.iae);
    assert!(close(prop.result.iae, PROPOSED_IAE), "proposed {}", prop.result.iae);
}

const CONVENTIONAL_IAE: f64 = 6078.770718535858;
const PROPOSED_IAE: f64 = 190.571120;

#[test]
fn zero_mover_sweep_matches_baseline_row_for_row() {
    let base = ScenarioConfig {
        classifier: ClassifierParams {
            epsilon: f64::INFINITY,
            ..Default::default()
        },
        ..Default::default()
    };
    let spec = ExperimentSpec {
        trials: 5,
        ..ExperimentSpec::new(ExperimentKind::VaryMovers, vec![0], base)
    };
    let report = run_experiment(&spec, 1).unwrap();
    for pair in report.rows.chunks(2) {
        assert_eq!(pair[0].iae.to_bits(), pair[1].iae.to_bits());
        assert_eq!(pair[0].admitted, pair[1].admitted);
    }
}

#[test]
fn run_from_dataset_matches_generated_run() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(cli(&["gen", "--seed", "9"], &a).status.success());
    let dataset = a.join("scenario.txt").to_string_lossy().into_owned();
    assert!(cli(&["run", "--seed", "9", "--dataset", &dataset], &a).status.success());
    assert!(cli(&["run", "--seed", "9"], &b).status.success());
    for name in ["trajectory_proposed.csv", "classification_conventional.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn bench_writes_results_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_conf(
        dir.path(),
        "[scenario]\nwaypoints = 5\n[experiment]\nkind = vary_movers\nvalues = 1\ntrials = 2\n",
    );
    let out = cli(&["bench", "--config", &conf, "--algo", "proposed"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let results = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let mut lines = results.lines();
    assert_eq!(lines.next(), Some(RESULTS_HEADER));
    assert_eq!(lines.count(), 2);
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("param,algo,mean_iae,std_iae,mean_ms\n1,proposed,"));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_conf(dir.path(), "[scenario]\nwaypoint = 3\n");
    assert_eq!(cli(&["run", "--config", &unknown], dir.path()).status.code(), Some(1));
    assert_eq!(cli(&["run", "--algo", "neither"], dir.path()).status.code(), Some(1));
    assert_eq!(cli(&["bench"], dir.path()).status.code(), Some(1));
    assert_eq!(cli(&["launch"], dir.path()).status.code(), Some(1));
    let missing = dir.path().join("absent.conf").to_string_lossy().into_owned();
    assert_eq!(cli(&["gen", "--config", &missing], dir.path()).status.code(), Some(1));
}

#[test]
fn divergence_in_every_trial_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // N + lambda = 0 for the initial three-dimensional state
    let conf = write_conf(
        dir.path(),
        "[scenario]\nwaypoints = 4\nut_lambda = -3\n[experiment]\nkind = vary_movers\nvalues = 1\ntrials = 2\n",
    );
    assert_eq!(cli(&["run", "--config", &conf], dir.path()).status.code(), Some(2));
    assert_eq!(cli(&["bench", "--config", &conf], dir.path()).status.code(), Some(2));
    let results = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(results.lines().skip(1).all(|l| l.contains(",NaN,")));
}
