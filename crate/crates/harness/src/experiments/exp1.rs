//! Spacing and concentration along seeded trajectories up to `ln 2 / Ĉ(0)`.

use std::path::Path;

use serde::Serialize;

use sediment::dynamics::{
    simulate, solve_velocities, theorem1_certificate, CertificateOptions, SimulationConfig, Termination,
    Theorem1Certificate,
};
use sediment::reflections::pairwise_lipschitz_report;

use super::{case_grid, run_cases, Case, RunSummary};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::generate::generate_cloud;
use crate::io::{num, output_path, write_json, write_table, ReportMeta, Table};

#[derive(Clone, Debug, Serialize)]
pub struct SpacingCase {
    pub d_min0: f64,
    /// `Ĉ(0)`, the pairwise Lipschitz constant of the initial velocities.
    pub lipschitz0: f64,
    pub horizon: f64,
    pub dt: f64,
    pub steps: usize,
    pub termination: Termination,
    pub certificate: Theorem1Certificate,
}

impl SpacingCase {
    pub fn passed(&self) -> bool {
        self.termination == Termination::Completed && self.certificate.spacing_ok && self.certificate.concentration_ok
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Exp1Report {
    pub cases: Vec<Case<SpacingCase>>,
    pub all_passed: bool,
}

/// Horizon and step for a case: the configured horizon or `ln 2 / Ĉ(0)`,
/// with at least `min_steps` steps in the automatic case.
pub fn schedule(config: &ExperimentConfig, lipschitz0: f64) -> (f64, f64) {
    let t = &config.time;
    match t.horizon {
        Some(h) => (h, t.dt),
        None => {
            let h = if lipschitz0 > 0.0 {
                std::f64::consts::LN_2 / lipschitz0
            } else {
                t.dt * t.min_steps as f64
            };
            (h, t.dt.min(h / t.min_steps.max(1) as f64))
        }
    }
}

pub fn run_case(config: &ExperimentConfig, n: usize, seed: u64) -> Result<SpacingCase> {
    let g = generate_cloud(&config.generator, n, seed, config.physics.r0, config.lambda_policy)?;
    let gravity = config.physics.gravity();
    let kin0 = solve_velocities(&g.cloud, &gravity, &config.solver)?;
    let lipschitz0 = if n >= 2 {
        pairwise_lipschitz_report(&g.cloud, &kin0)?.max_ratio
    } else {
        0.0
    };
    let (horizon, dt) = schedule(config, lipschitz0);
    let sim = SimulationConfig {
        solver: config.solver,
        scheme: config.time.scheme,
        dt,
        horizon,
        stride: config.time.stride,
        lambda_policy: config.lambda_policy,
        exact_m: config.exact_m,
    };
    let traj = simulate(&g.cloud, &gravity, &sim)?;
    let certificate = theorem1_certificate(
        &traj,
        &CertificateOptions {
            lambda_policy: config.lambda_policy,
            exact_m: config.exact_m,
        },
    )?;
    Ok(SpacingCase {
        d_min0: g.d_min,
        lipschitz0,
        horizon,
        dt: traj.dt,
        steps: traj.steps_taken,
        termination: traj.termination.clone(),
        certificate,
    })
}

pub fn run(config: &ExperimentConfig) -> Result<Exp1Report> {
    let cases = run_cases(&case_grid(config), |n, seed| run_case(config, n, seed));
    let all_passed = cases.iter().all(|c| c.result().is_some_and(SpacingCase::passed));
    Ok(Exp1Report { cases, all_passed })
}

impl Exp1Report {
    pub fn series(&self) -> Table {
        let mut t = Table::new(&["n", "seed", "t", "spacing_ratio", "concentration_ratio"]);
        for c in &self.cases {
            if let Some(r) = c.result() {
                let cert = &r.certificate;
                for k in 0..cert.times.len() {
                    t.push(vec![
                        c.n.to_string(),
                        c.seed.to_string(),
                        num(cert.times[k]),
                        num(cert.spacing_ratios[k]),
                        num(cert.concentration_ratios[k]),
                    ]);
                }
            }
        }
        t
    }

    pub fn write(&self, meta: &ReportMeta, dir: &Path) -> Result<RunSummary> {
        let csv = output_path(dir, "exp1_series.csv")?;
        let json = output_path(dir, "exp1_report.json")?;
        write_table(&csv, meta, &self.series())?;
        write_json(&json, meta, self)?;
        Ok(RunSummary {
            experiment: crate::config::ExperimentId::Exp1,
            files: vec![csv, json],
            failed_cases: self.cases.iter().filter(|c| c.result().is_none()).count(),
            checks_passed: self.all_passed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentId;

    #[test]
    fn single_particle_passes_trivially() {
        let mut c = ExperimentConfig::default_for(ExperimentId::Exp1);
        c.n_list = vec![1];
        let r = run(&c).unwrap();
        let case = r.cases[0].result().unwrap();
        assert!(case.passed());
        assert_eq!(case.lipschitz0, 0.0);
        assert!(r.all_passed);
    }

    #[test]
    fn small_cloud_keeps_its_spacing() {
        let mut c = ExperimentConfig::default_for(ExperimentId::Exp1);
        c.n_list = vec![32];
        let r = run(&c).unwrap();
        let case = r.cases[0].result().unwrap();
        assert!(case.steps >= c.time.min_steps);
        assert!(case.certificate.min_spacing_ratio > 0.5);
        assert!((case.horizon - std::f64::consts::LN_2 / case.lipschitz0).abs() < 1e-12);
    }

    #[test]
    fn bad_case_is_recorded_not_fatal() {
        let mut c = ExperimentConfig::default_for(ExperimentId::Exp1);
        c.n_list = vec![8, 4];
        c.physics.r0 = 8.0;
        let r = run(&c).unwrap();
        assert!(r.cases[0].result().is_none());
        assert!(!r.all_passed);
    }
}
