//! Distance between reflection velocities and the first-order law, in units
//! of the minimal spacing, as `N` grows.

use std::path::Path;

use serde::Serialize;

use sediment::dynamics::{solve_velocities, SolverKind};
use sediment::meanfield::linear_fit;
use sediment::reflections::{first_order_velocities, NeumannOptions};

use super::{case_grid, mean_and_stderr, run_cases, Case, RunSummary};
use crate::config::{ExperimentConfig, ExperimentId};
use crate::error::Result;
use crate::generate::generate_cloud;
use crate::io::{num, output_path, write_json, write_table, ReportMeta, Table};

/// Admissible band for the slope of `log(ratio)` against `log N`.
pub const SLOPE_BAND: f64 = 0.3;

#[derive(Clone, Debug, Serialize)]
pub struct VelocityCase {
    pub d_min: f64,
    pub max_difference: f64,
    /// `max_i |V_i^refl − V_i^first| / d_min`.
    pub ratio: f64,
    /// Particle attaining the maximum.
    pub argmax: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Exp4Report {
    pub cases: Vec<Case<VelocityCase>>,
    /// `(N, mean ratio, standard error)` over seeds.
    pub by_n: Vec<(usize, f64, f64)>,
    /// Least-squares slope of `log ratio` on `log N` over all cases.
    pub slope: f64,
    pub intercept: f64,
    pub fit_residual: f64,
    pub slope_ok: bool,
}

pub fn run_case(config: &ExperimentConfig, n: usize, seed: u64) -> Result<VelocityCase> {
    let g = generate_cloud(&config.generator, n, seed, config.physics.r0, config.lambda_policy)?;
    let gravity = config.physics.gravity();
    let solver = match config.solver {
        SolverKind::FirstOrder => SolverKind::Reflections(NeumannOptions {
            track_series: false,
            ..NeumannOptions::default()
        }),
        s => s,
    };
    let refl = solve_velocities(&g.cloud, &gravity, &solver)?;
    let first = first_order_velocities(&g.cloud, &gravity)?;
    let (argmax, max_difference) = refl
        .velocities
        .iter()
        .zip(&first.velocities)
        .map(|(a, b)| (a - b).norm())
        .enumerate()
        .fold((0, 0.0), |acc, (i, d)| if d > acc.1 { (i, d) } else { acc });
    Ok(VelocityCase {
        d_min: g.d_min,
        max_difference,
        ratio: max_difference / g.d_min,
        argmax,
    })
}

pub fn run(config: &ExperimentConfig) -> Result<Exp4Report> {
    let cases = run_cases(&case_grid(config), |n, seed| run_case(config, n, seed));
    let mut by_n = Vec::new();
    for &n in &config.n_list {
        let rs: Vec<f64> = cases
            .iter()
            .filter(|c| c.n == n)
            .filter_map(|c| c.result().map(|r| r.ratio))
            .collect();
        let (m, se) = mean_and_stderr(&rs);
        by_n.push((n, m, se));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = cases
        .iter()
        .filter_map(|c| c.result().map(|r| ((c.n as f64).ln(), r.ratio.ln())))
        .filter(|(_, y)| y.is_finite())
        .unzip();
    let (intercept, slope, fit_residual) = if x.len() >= 2 {
        linear_fit(&x, &y)
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    Ok(Exp4Report {
        slope_ok: slope.abs() <= SLOPE_BAND,
        cases,
        by_n,
        slope,
        intercept,
        fit_residual,
    })
}

impl Exp4Report {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["n", "seed", "d_min", "max_difference", "ratio"]);
        for c in &self.cases {
            if let Some(r) = c.result() {
                t.push(vec![
                    c.n.to_string(),
                    c.seed.to_string(),
                    num(r.d_min),
                    num(r.max_difference),
                    num(r.ratio),
                ]);
            }
        }
        t
    }

    pub fn write(&self, meta: &ReportMeta, dir: &Path) -> Result<RunSummary> {
        let csv = output_path(dir, "exp4_ratios.csv")?;
        let json = output_path(dir, "exp4_report.json")?;
        write_table(&csv, meta, &self.table())?;
        write_json(&json, meta, self)?;
        Ok(RunSummary {
            experiment: ExperimentId::Exp4,
            files: vec![csv, json],
            failed_cases: self.cases.iter().filter(|c| c.result().is_none()).count(),
            checks_passed: self.slope_ok,
        })
    }
}
