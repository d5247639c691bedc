//! The four reproduction experiments.
//!
//! Each experiment splits into independent cases (one per `N` and seed) that
//! run on the rayon pool. A failing case is recorded with its error and the
//! others proceed. Reports are assembled in case order, so output files do not
//! depend on scheduling.

pub mod exp1;
pub mod exp2;
pub mod exp3;
pub mod exp4;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, ExperimentId};
use crate::error::{HarnessError, Result};
use crate::io::ReportMeta;

#[derive(Clone, Debug, Serialize)]
pub struct Case<T> {
    pub n: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub outcome: Outcome<T>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome<T> {
    Ok { result: T },
    Error { message: String },
}

impl<T> Case<T> {
    pub fn result(&self) -> Option<&T> {
        match &self.outcome {
            Outcome::Ok { result } => Some(result),
            Outcome::Error { .. } => None,
        }
    }
}

/// Every `(N, seed)` pair in configuration order.
pub fn case_grid(config: &ExperimentConfig) -> Vec<(usize, u64)> {
    config
        .n_list
        .iter()
        .flat_map(|&n| config.seeds().map(move |s| (n, s)))
        .collect()
}

/// Runs `f` on every case in the pool, keeping configuration order.
pub fn run_cases<T, F>(cases: &[(usize, u64)], f: F) -> Vec<Case<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync,
{
    cases
        .par_iter()
        .map(|&(n, seed)| Case {
            n,
            seed,
            outcome: match f(n, seed) {
                Ok(result) => Outcome::Ok { result },
                Err(e) => Outcome::Error { message: e.to_string() },
            },
        })
        .collect()
}

/// Files written by one experiment and whether its checks held.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub experiment: ExperimentId,
    pub files: Vec<PathBuf>,
    pub failed_cases: usize,
    pub checks_passed: bool,
}

pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary> {
    config.validate()?;
    let meta = ReportMeta::for_config(config);
    match config.experiment {
        ExperimentId::Exp1 => exp1::run(config)?.write(&meta, out_dir),
        ExperimentId::Exp2 => exp2::run(config)?.write(&meta, out_dir),
        ExperimentId::Exp3 => exp3::run(config)?.write(&meta, out_dir),
        ExperimentId::Exp4 => exp4::run(config)?.write(&meta, out_dir),
        ExperimentId::Selftest => Err(HarnessError::Usage("use the selftest subcommand".into())),
    }
}

/// `(mean, standard error)`; the error is zero for fewer than two samples.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
