//! Experiment runner: resolves a configuration, runs one experiment and
//! writes `<experiment>.csv`, `<experiment>.json` and optionally
//! `<experiment>.svg` into the output directory.

pub mod config;
pub mod experiments;

use std::fs;
use std::path::PathBuf;

use kronlab_core::report::Summary;

pub use config::{Experiment, ExperimentConfig};
pub use experiments::{run_experiment, Outcome, RunError};

/// Exit status for a run whose checks all passed.
pub const EXIT_PASS: i32 = 0;
/// Exit status for a usage, configuration or computation error.
pub const EXIT_ERROR: i32 = 1;
/// Exit status when any check failed.
pub const EXIT_FAIL: i32 = 2;

#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub svg: Option<PathBuf>,
    pub pass: bool,
}

impl RunArtifacts {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    }
}

pub fn summary(cfg: &ExperimentConfig, outcome: &Outcome) -> Summary {
    Summary {
        experiment: cfg.experiment.name().to_string(),
        config_echo: cfg.echo.clone(),
        results: outcome.results.clone(),
        pass: outcome.pass,
    }
}

/// Runs the configured experiment and writes its artifacts.
pub fn run(cfg: &ExperimentConfig) -> Result<RunArtifacts, RunError> {
    let outcome = run_experiment(cfg)?;
    fs::create_dir_all(&cfg.out_dir).map_err(kronlab_core::Error::from)?;
    let name = cfg.experiment.name();
    let csv = cfg.out_dir.join(format!("{name}.csv"));
    let json = cfg.out_dir.join(format!("{name}.json"));
    outcome.table.write(&csv)?;
    summary(cfg, &outcome).write(&json)?;
    let svg = match (&outcome.plot, cfg.svg) {
        (Some(plot), true) => {
            let path = cfg.out_dir.join(format!("{name}.svg"));
            plot.write(&path)?;
            Some(path)
        }
        _ => None,
    };
    Ok(RunArtifacts {
        csv,
        json,
        svg,
        pass: outcome.pass,
    })
}

/// Sizes the global rayon pool from `KRONLAB_THREADS` when it is set.
pub fn init_thread_pool() -> Result<(), String> {
    match std::env::var("KRONLAB_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| format!("KRONLAB_THREADS must be a positive integer, got `{v}`"))?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| e.to_string())
        }
        Err(_) => Ok(()),
    }
}
