//! Particle system against the blob solution started from the density the
//! particles were drawn from.

use std::path::Path;

use serde::Serialize;

use sediment::dynamics::{simulate, SimulationConfig, Termination};
use sediment::meanfield::{default_delta, evolve, init_blobs, linear_fit, MeanfieldParams, MeanfieldRun};
use sediment::ot::{w1_exact, DiscreteMeasure};

use super::{case_grid, mean_and_stderr, run_cases, Case, RunSummary};
use crate::config::{ExperimentConfig, ExperimentId, GeneratorSpec};
use crate::error::{HarnessError, Result};
use crate::generate::generate_cloud;
use crate::io::{density_table, num, output_path, write_json, write_table, ReportMeta, Table};

/// Width of the noise band in standard errors of the difference of means.
pub const NOISE_BAND: f64 = 2.0;

#[derive(Clone, Debug, Serialize)]
pub struct CouplingCase {
    pub lambda: f64,
    pub d_min0: f64,
    /// `W1` between the initial cloud and the initial blobs.
    pub w1_initial: f64,
    pub times: Vec<f64>,
    pub w1: Vec<f64>,
    pub termination: Termination,
}

impl CouplingCase {
    pub fn final_w1(&self) -> f64 {
        *self.w1.last().expect("at least the initial snapshot")
    }

    /// `λ + d_min(0) t + W1(0)`.
    pub fn base(&self, t: f64) -> f64 {
        self.lambda + self.d_min0 * t + self.w1_initial
    }
}

/// `W1(t) ≤ C1 (λ + d_min(0) t + W1(0)) e^{C2 t}` fitted in log space over
/// every case and snapshot, then `C1` raised until no point lies above.
#[derive(Clone, Debug, Serialize)]
pub struct BoundFit {
    pub c1: f64,
    pub c2: f64,
    /// `C1` from the least-squares line before the shift.
    pub c1_least_squares: f64,
    pub fit_residual: f64,
    pub points: usize,
    /// `max W1 / bound`.
    pub worst_ratio: f64,
    pub dominates: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotoneRow {
    pub n: usize,
    pub mean_final_w1: f64,
    pub stderr: f64,
    pub seeds: usize,
    /// Not larger than the previous row within the noise band.
    pub within_band: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Exp2Report {
    pub blob_count: usize,
    pub blob_delta: f64,
    pub blob_mass_defect: f64,
    pub cases: Vec<Case<CouplingCase>>,
    pub fit: Option<BoundFit>,
    pub monotone: Vec<MonotoneRow>,
    pub monotone_ok: bool,
    #[serde(skip)]
    pub blobs: MeanfieldRun,
}

pub fn fit_bound(cases: &[&CouplingCase]) -> Option<BoundFit> {
    let mut t = Vec::new();
    let mut y = Vec::new();
    for c in cases {
        for (&ti, &wi) in c.times.iter().zip(&c.w1) {
            let b = c.base(ti);
            if wi > 0.0 && b > 0.0 {
                t.push(ti);
                y.push((wi / b).ln());
            }
        }
    }
    if t.is_empty() {
        return None;
    }
    let (mut a, mut c2, res) = linear_fit(&t, &y);
    if c2 < 0.0 {
        c2 = 0.0;
        a = y.iter().sum::<f64>() / y.len() as f64;
    }
    let shift = t.iter().zip(&y).map(|(t, y)| y - a - c2 * t).fold(0.0, f64::max);
    let c1 = (a + shift).exp();
    let mut worst: f64 = 0.0;
    for c in cases {
        for (&ti, &wi) in c.times.iter().zip(&c.w1) {
            worst = worst.max(wi / (c1 * c.base(ti) * (c2 * ti).exp()));
        }
    }
    Some(BoundFit {
        c1,
        c2,
        c1_least_squares: a.exp(),
        fit_residual: res,
        points: t.len(),
        worst_ratio: worst,
        dominates: c1.is_finite() && c2.is_finite() && worst <= 1.0 + 1e-12,
    })
}

pub fn monotone_table(n_list: &[usize], cases: &[Case<CouplingCase>]) -> Vec<MonotoneRow> {
    let mut rows: Vec<MonotoneRow> = Vec::new();
    for &n in n_list {
        let finals: Vec<f64> = cases
            .iter()
            .filter(|c| c.n == n)
            .filter_map(|c| c.result().map(CouplingCase::final_w1))
            .collect();
        let (mean, se) = mean_and_stderr(&finals);
        let within_band = match rows.last() {
            None => true,
            Some(prev) => mean <= prev.mean_final_w1 + NOISE_BAND * (prev.stderr.powi(2) + se.powi(2)).sqrt(),
        };
        rows.push(MonotoneRow {
            n,
            mean_final_w1: mean,
            stderr: se,
            seeds: finals.len(),
            within_band,
        });
    }
    rows
}

pub fn run(config: &ExperimentConfig) -> Result<Exp2Report> {
    let spec = config.meanfield.spec;
    if let GeneratorSpec::Density { spec: s } = config.generator {
        if s != spec {
            return Err(HarnessError::Config("generator density and meanfield spec differ".into()));
        }
    }
    let m = config.meanfield.m_per_axis;
    let delta = config.meanfield.delta.unwrap_or_else(|| default_delta(&spec, m));
    let blobs0 = init_blobs(&spec, m, delta)?;
    let params = MeanfieldParams::new(config.physics.r0, config.physics.gravity())?;
    let horizon = config.time.horizon.unwrap_or(config.time.dt * config.time.min_steps as f64);
    let blobs = evolve(&blobs0, &params, horizon, config.time.dt, config.time.stride, &[])?;
    let targets: Vec<DiscreteMeasure> = blobs.snapshots.iter().map(|d| d.to_measure()).collect::<sediment::Result<_>>()?;

    let gravity = config.physics.gravity();
    let cases = run_cases(&case_grid(config), |n, seed| {
        let g = generate_cloud(&config.generator, n, seed, config.physics.r0, config.lambda_policy)?;
        let sim = SimulationConfig {
            solver: config.solver,
            scheme: config.time.scheme,
            dt: config.time.dt,
            horizon,
            stride: config.time.stride,
            lambda_policy: config.lambda_policy,
            exact_m: false,
        };
        let traj = simulate(&g.cloud, &gravity, &sim)?;
        let mut times = Vec::new();
        let mut w1 = Vec::new();
        for (s, target) in traj.snapshots.iter().zip(&targets) {
            let mu = DiscreteMeasure::empirical(s.cloud.positions())?;
            times.push(s.time);
            w1.push(w1_exact(&mu, target)?.0);
        }
        Ok(CouplingCase {
            lambda: g.diagnostics.lambda,
            d_min0: g.d_min,
            w1_initial: w1[0],
            times,
            w1,
            termination: traj.termination.clone(),
        })
    });
    let ok: Vec<&CouplingCase> = cases.iter().filter_map(Case::result).collect();
    let fit = fit_bound(&ok);
    let monotone = monotone_table(&config.n_list, &cases);
    let monotone_ok = monotone.iter().all(|r| r.within_band && r.seeds > 0);
    Ok(Exp2Report {
        blob_count: blobs0.len(),
        blob_delta: delta,
        blob_mass_defect: blobs0.mass_defect(),
        cases,
        fit,
        monotone,
        monotone_ok,
        blobs,
    })
}

impl Exp2Report {
    pub fn checks_passed(&self) -> bool {
        self.monotone_ok && self.fit.as_ref().is_some_and(|f| f.dominates)
    }

    pub fn series(&self) -> Table {
        let mut t = Table::new(&["n", "seed", "t", "w1", "bound"]);
        for c in &self.cases {
            if let Some(r) = c.result() {
                for (&ti, &wi) in r.times.iter().zip(&r.w1) {
                    let bound = self
                        .fit
                        .as_ref()
                        .map_or(f64::NAN, |f| f.c1 * r.base(ti) * (f.c2 * ti).exp());
                    t.push(vec![c.n.to_string(), c.seed.to_string(), num(ti), num(wi), num(bound)]);
                }
            }
        }
        t
    }

    pub fn monotone_csv(&self) -> Table {
        let mut t = Table::new(&["n", "mean_final_w1", "stderr", "seeds", "within_band"]);
        for r in &self.monotone {
            t.push(vec![
                r.n.to_string(),
                num(r.mean_final_w1),
                num(r.stderr),
                r.seeds.to_string(),
                r.within_band.to_string(),
            ]);
        }
        t
    }

    pub fn write(&self, meta: &ReportMeta, dir: &Path) -> Result<RunSummary> {
        let series = output_path(dir, "exp2_w1.csv")?;
        let mono = output_path(dir, "exp2_monotone.csv")?;
        let density = output_path(dir, "exp2_density.csv")?;
        let json = output_path(dir, "exp2_report.json")?;
        write_table(&series, meta, &self.series())?;
        write_table(&mono, meta, &self.monotone_csv())?;
        write_table(&density, meta, &density_table(&self.blobs.snapshots))?;
        write_json(&json, meta, self)?;
        Ok(RunSummary {
            experiment: ExperimentId::Exp2,
            files: vec![series, mono, density, json],
            failed_cases: self.cases.iter().filter(|c| c.result().is_none()).count(),
            checks_passed: self.checks_passed(),
        })
    }
}
