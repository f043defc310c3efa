use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dynaslam::bench::{
    run_experiment, run_mapping, run_trial, write_classification_csv, write_map_csv, write_map_report,
    write_results_csv, write_summary_csv, write_trajectory_csv, Algorithm,
};
use dynaslam::config::{self, parse_algorithms, Config};
use dynaslam::dataset;
use dynaslam::scenario::generate;
use dynaslam::Error;

/// UKF-SLAM benchmark with moving-landmark rejection.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scenario and write it as a dataset file.
    Gen(Common),
    /// Run one trial and write trajectory and classification logs.
    Run {
        #[command(flatten)]
        common: Common,
        /// Use this dataset file instead of generating a scenario.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Run the experiment described by the config file.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trials: Option<usize>,
        /// Worker threads; results do not depend on it.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Run the room-mapping scenario.
    Map(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// conventional, proposed or both.
    #[arg(long)]
    algo: Option<String>,
}

enum Failure {
    Config(Error),
    AllDiverged(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::FilterDiverged(_) => Failure::AllDiverged(e.to_string()),
            other => Failure::Config(other),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(e.into())
    }
}

impl Common {
    fn load(&self) -> Result<Config, Error> {
        let mut cfg = match &self.config {
            Some(path) => config::load(path)?,
            None => Config::default(),
        };
        if let Some(seed) = self.seed {
            cfg.scenario.seed = seed;
        }
        if let Some(algo) = &self.algo {
            cfg.experiment.algorithms = parse_algorithms(algo)?;
        }
        Ok(cfg)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, Error> {
        fs::create_dir_all(&self.out)?;
        Ok(BufWriter::new(File::create(self.out.join(name))?))
    }
}

fn write_with<F>(common: &Common, name: &str, f: F) -> Result<(), Failure>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let mut w = common.create(name)?;
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn gen(common: &Common) -> Result<(), Failure> {
    let cfg = common.load()?;
    let (scenario, truth) = generate(&cfg.scenario)?;
    write_with(common, "scenario.txt", |w| dataset::write_dataset(&scenario, &truth, w))?;
    println!(
        "wrote {} ({} waypoints, {} landmarks, {} control steps)",
        common.out.join("scenario.txt").display(),
        scenario.waypoints.len(),
        scenario.landmarks.len(),
        truth.control_steps()
    );
    Ok(())
}

fn run(common: &Common, dataset_path: Option<&Path>) -> Result<(), Failure> {
    let cfg = common.load()?;
    let (scenario, truth) = match dataset_path {
        Some(p) => dataset::load(p, cfg.scenario.dt)?,
        None => generate(&cfg.scenario)?,
    };
    if truth.poses.is_empty() {
        return Err(Failure::Config(Error::InvalidConfig("dataset has no truth poses".into())));
    }
    let mut diverged = Vec::new();
    for &algo in &cfg.experiment.algorithms {
        match run_trial(&scenario, &truth, &cfg.scenario, algo) {
            Ok(out) => {
                write_with(common, &format!("trajectory_{algo}.csv"), |w| {
                    write_trajectory_csv(&out.result, w)
                })?;
                write_with(common, &format!("classification_{algo}.csv"), |w| {
                    write_classification_csv(&out.classifications, w)
                })?;
                println!(
                    "{algo}: iae {:.6} m^2, final position error {:.6} m, {} admitted, {} rejected, {:.4} ms/step",
                    out.result.iae,
                    out.result.final_position_error(),
                    out.result.admitted_total(),
                    out.result.rejected_total(),
                    out.result.ms_per_step
                );
            }
            Err(e @ Error::FilterDiverged(_)) => {
                eprintln!("{algo}: {e}");
                diverged.push(e.to_string());
            }
            Err(e) => return Err(e.into()),
        }
    }
    if diverged.len() == cfg.experiment.algorithms.len() {
        return Err(Failure::AllDiverged(diverged.join("; ")));
    }
    Ok(())
}

fn bench(common: &Common, trials: Option<usize>, jobs: usize) -> Result<(), Failure> {
    if common.config.is_none() {
        return Err(Failure::Config(Error::InvalidConfig("bench needs --config".into())));
    }
    let mut cfg = common.load()?;
    if let Some(t) = trials {
        cfg.experiment.trials = t;
    }
    let spec = cfg.experiment_spec()?;
    let report = run_experiment(&spec, jobs.max(1))?;
    write_with(common, "results.csv", |w| write_results_csv(&report.rows, w))?;
    write_with(common, "summary.csv", |w| write_summary_csv(&report.summary, w))?;
    for s in &report.summary {
        println!(
            "{} = {:>4} {:<12} mean iae {:>12.4} std {:>12.4} ({} ok, {} diverged)",
            spec.kind.as_str(),
            s.param_value,
            s.algorithm.as_str(),
            s.mean_iae,
            s.std_iae,
            s.completed,
            s.failed
        );
    }
    if report.all_failed() {
        return Err(Failure::AllDiverged("every trial diverged".into()));
    }
    Ok(())
}

fn map(common: &Common) -> Result<(), Failure> {
    let cfg = common.load()?;
    let algos = if common.algo.is_some() {
        cfg.experiment.algorithms.clone()
    } else {
        vec![Algorithm::Proposed]
    };
    let mut diverged = 0;
    for algo in &algos {
        match run_mapping(&cfg.scenario, *algo) {
            Ok(report) => {
                write_with(common, &format!("map_{algo}.csv"), |w| write_map_csv(&report, w))?;
                write_with(common, &format!("map_report_{algo}.txt"), |w| write_map_report(&report, w))?;
                println!(
                    "{algo}: {}/{} wall points mapped, wall rmse {:.6} m, {} object points in map",
                    report.wall_points_in_map, report.wall_points, report.wall_rmse, report.object_points_in_map
                );
            }
            Err(e @ Error::FilterDiverged(_)) => {
                eprintln!("{algo}: {e}");
                diverged += 1;
            }
            Err(e) => return Err(e.into()),
        }
    }
    if diverged == algos.len() {
        return Err(Failure::AllDiverged("mapping run diverged".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Gen(c) => gen(c),
        Command::Run { common, dataset } => run(common, dataset.as_deref()),
        Command::Bench { common, trials, jobs } => bench(common, *trials, *jobs),
        Command::Map(c) => map(c),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::AllDiverged(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
