use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sediment::cloud::admissibility;
use sediment::dynamics::{simulate, solve_velocities, theorem1_certificate, CertificateOptions, SimulationConfig};
use sediment::reflections::pairwise_lipschitz_report;
use sediment::kernels::selftest::{self as kernel_checks, Fault, SelftestConfig};
use sediment::meanfield::{
    default_delta, density_diagnostics, evolve, init_blobs, MeanfieldParams, SampleGrid,
};
use sediment::ot::{w1_exact, winf_exact};

use sediment_harness::config::{ExperimentConfig, ExperimentId, SCHEMA};
use sediment_harness::experiments::{exp1, exp2, run_experiment};
use sediment_harness::generate::generate_cloud;
use sediment_harness::io::{
    cloud_table, density_table, num, output_path, plan_table, read_measure_csv, trajectory_table, write_json,
    write_table, ReportMeta, Table,
};
use sediment_harness::selftest::{run_selftest, SelftestOptions};
use sediment_harness::{init_thread_pool, HarnessError, Result};

/// Sedimentation of many spheres in Stokes flow: simulations, mean-field
/// comparisons and exact transport distances.
///
/// Set SEDIMENT_THREADS to fix the worker count.
#[derive(Parser, Debug)]
#[command(name = "sediment", version)]
struct Cli {
    /// Experiment configuration (TOML); `sediment schema` prints an example.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the configured one.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one particle cloud and certify spacing and concentration.
    Simulate {
        /// Particle count; defaults to the first entry of `n_list`.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Evolve the blob discretization of the configured density.
    Meanfield,
    /// Co-evolve particles and blobs and track W1 between them.
    Compare {
        #[arg(long)]
        n: Option<usize>,
    },
    /// Spacing, concentration and admissibility of a generated cloud.
    Diagnose {
        #[arg(long)]
        n: Option<usize>,
    },
    /// Exact W1 or W∞ between two measures given as CSV files (x,y,z,w).
    Wasserstein {
        #[arg(long, value_enum, default_value = "1")]
        p: Order,
        a: PathBuf,
        b: PathBuf,
        /// Write the optimal plan to this CSV file.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Boundary, field-equation and traction checks for the kernels.
    KernelsSelftest {
        #[arg(long, value_enum)]
        inject_fault: Option<FaultArg>,
    },
    /// Run one of the experiments.
    Experiment { id: ExperimentId },
    /// Property checks for every module.
    Selftest {
        #[arg(long, value_enum)]
        inject_fault: Option<FaultArg>,
    },
    /// Print an example configuration.
    Schema,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Order {
    #[value(name = "1")]
    One,
    #[value(name = "inf")]
    Inf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FaultArg {
    StokesletSign,
}

impl From<FaultArg> for Fault {
    fn from(f: FaultArg) -> Fault {
        match f {
            FaultArg::StokesletSign => Fault::StokesletSign,
        }
    }
}

fn load_config(cli: &Cli, default: ExperimentId) -> Result<ExperimentConfig> {
    let mut c = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default_for(default),
    };
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    Ok(c)
}

fn out_dir(cli: &Cli, c: Option<&ExperimentConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| c.and_then(|c| c.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// A closed pipe on stdout is not an error.
fn print_json<T: Serialize>(v: &T) {
    use std::io::Write;
    let text = serde_json::to_string_pretty(v).expect("report serializes");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn first_n(c: &ExperimentConfig, n: Option<usize>) -> Result<usize> {
    n.or_else(|| c.n_list.first().copied())
        .ok_or_else(|| HarnessError::Usage("no particle count given".into()))
}

#[derive(Serialize)]
struct Written<'a, T> {
    files: Vec<PathBuf>,
    #[serde(flatten)]
    summary: &'a T,
}

fn cmd_simulate(cli: &Cli, n: Option<usize>) -> Result<bool> {
    let c = load_config(cli, ExperimentId::Exp1)?;
    let n = first_n(&c, n)?;
    let g = generate_cloud(&c.generator, n, c.seed, c.physics.r0, c.lambda_policy)?;
    let gravity = c.physics.gravity();
    let lipschitz0 = if n >= 2 {
        pairwise_lipschitz_report(&g.cloud, &solve_velocities(&g.cloud, &gravity, &c.solver)?)?.max_ratio
    } else {
        0.0
    };
    let (horizon, dt) = exp1::schedule(&c, lipschitz0);
    let sim = SimulationConfig {
        solver: c.solver,
        scheme: c.time.scheme,
        dt,
        horizon,
        stride: c.time.stride,
        lambda_policy: c.lambda_policy,
        exact_m: c.exact_m,
    };
    let traj = simulate(&g.cloud, &gravity, &sim)?;
    let cert = theorem1_certificate(
        &traj,
        &CertificateOptions {
            lambda_policy: c.lambda_policy,
            exact_m: c.exact_m,
        },
    )?;
    let dir = out_dir(cli, Some(&c));
    let meta = ReportMeta::for_config(&c);
    let traj_path = output_path(&dir, "trajectory.csv")?;
    let cert_path = output_path(&dir, "certificate.json")?;
    write_table(&traj_path, &meta, &trajectory_table(&traj))?;
    #[derive(Serialize)]
    struct Body<'a> {
        n: usize,
        seed: u64,
        horizon: f64,
        termination: &'a sediment::dynamics::Termination,
        certificate: &'a sediment::dynamics::Theorem1Certificate,
    }
    let body = Body {
        n,
        seed: c.seed,
        horizon,
        termination: &traj.termination,
        certificate: &cert,
    };
    write_json(&cert_path, &meta, &body)?;
    print_json(&Written {
        files: vec![traj_path, cert_path],
        summary: &serde_json::json!({"passed": cert.passed(), "completed": traj.completed()}),
    });
    Ok(traj.completed() && cert.spacing_ok && cert.concentration_ok)
}

fn cmd_meanfield(cli: &Cli) -> Result<bool> {
    let c = load_config(cli, ExperimentId::Exp2)?;
    let spec = c.meanfield.spec;
    let m = c.meanfield.m_per_axis;
    let delta = c.meanfield.delta.unwrap_or_else(|| default_delta(&spec, m));
    let d0 = init_blobs(&spec, m, delta)?;
    let params = MeanfieldParams::new(c.physics.r0, c.physics.gravity())?;
    let horizon = c.time.horizon.unwrap_or(c.time.dt * c.time.min_steps as f64);
    let run = evolve(&d0, &params, horizon, c.time.dt, c.time.stride, &[])?;
    let mut diags = Vec::new();
    for d in &run.snapshots {
        diags.push(density_diagnostics(d, &SampleGrid::covering(d, 24))?);
    }
    let dir = out_dir(cli, Some(&c));
    let meta = ReportMeta::for_config(&c);
    let csv = output_path(&dir, "density.csv")?;
    let json = output_path(&dir, "meanfield.json")?;
    write_table(&csv, &meta, &density_table(&run.snapshots))?;
    write_json(
        &json,
        &meta,
        &serde_json::json!({
            "blobs": d0.len(),
            "delta": delta,
            "mass_defect": d0.mass_defect(),
            "dt": run.dt,
            "steps": run.steps,
            "times": run.snapshots.iter().map(|d| d.time()).collect::<Vec<_>>(),
            "diagnostics": diags,
        }),
    )?;
    print_json(&Written {
        files: vec![csv, json],
        summary: &serde_json::json!({"blobs": d0.len(), "steps": run.steps}),
    });
    Ok(true)
}

fn cmd_compare(cli: &Cli, n: Option<usize>) -> Result<bool> {
    let mut c = load_config(cli, ExperimentId::Exp2)?;
    c.n_list = vec![first_n(&c, n)?];
    c.seeds = 1;
    let report = exp2::run(&c)?;
    let dir = out_dir(cli, Some(&c));
    let meta = ReportMeta::for_config(&c);
    let csv = output_path(&dir, "compare_w1.csv")?;
    write_table(&csv, &meta, &report.series())?;
    let json = output_path(&dir, "compare.json")?;
    write_json(&json, &meta, &report)?;
    print_json(&Written {
        files: vec![csv, json],
        summary: &serde_json::json!({"failed_cases": report.cases.iter().filter(|c| c.result().is_none()).count()}),
    });
    Ok(report.cases.iter().all(|c| c.result().is_some()))
}

fn cmd_diagnose(cli: &Cli, n: Option<usize>) -> Result<bool> {
    let c = load_config(cli, ExperimentId::Exp1)?;
    let n = first_n(&c, n)?;
    let g = generate_cloud(&c.generator, n, c.seed, c.physics.r0, c.lambda_policy)?;
    let adm = if n >= 2 {
        Some(admissibility(&g.cloud, g.diagnostics.lambda, c.budgets.mbar, c.budgets.e)?)
    } else {
        None
    };
    let dir = out_dir(cli, Some(&c));
    let meta = ReportMeta::for_config(&c);
    let csv = output_path(&dir, "cloud.csv")?;
    let json = output_path(&dir, "diagnose.json")?;
    write_table(&csv, &meta, &cloud_table(g.cloud.positions()))?;
    let body = serde_json::json!({
        "n": n,
        "seed": c.seed,
        "rejected_draws": g.rejected,
        "diagnostics": g.diagnostics,
        "admissibility": adm,
        "admissible": adm.as_ref().is_none_or(|a| a.admissible()),
    });
    write_json(&json, &meta, &body)?;
    print_json(&Written {
        files: vec![csv, json],
        summary: &body,
    });
    Ok(true)
}

fn cmd_wasserstein(cli: &Cli, p: Order, a: &Path, b: &Path, plan: Option<&Path>) -> Result<bool> {
    let mu = read_measure_csv(a)?;
    let nu = read_measure_csv(b)?;
    let meta = ReportMeta::for_value(&(a, b, format!("{p:?}")));
    let (distance, plan_t) = match p {
        Order::One => {
            let (d, pl) = w1_exact(&mu, &nu)?;
            (d, plan_table(&pl))
        }
        Order::Inf => {
            let (d, pl) = winf_exact(&mu, &nu)?;
            let mut t = Table::new(&["i", "j", "mass"]);
            let w = 1.0 / mu.len() as f64;
            for (i, j) in pl.assignment.iter().enumerate() {
                t.push(vec![i.to_string(), j.to_string(), num(w)]);
            }
            (d, t)
        }
    };
    let mut files = Vec::new();
    if let Some(path) = plan {
        write_table(path, &meta, &plan_t)?;
        files.push(path.to_path_buf());
    }
    if let Some(dir) = &cli.out {
        let json = output_path(dir, "wasserstein.json")?;
        write_json(&json, &meta, &serde_json::json!({"p": format!("{p:?}"), "distance": distance}))?;
        files.push(json);
    }
    print_json(&Written {
        files,
        summary: &serde_json::json!({"distance": distance, "source_atoms": mu.len(), "target_atoms": nu.len()}),
    });
    Ok(true)
}

fn cmd_kernels_selftest(cli: &Cli, fault: Option<FaultArg>) -> Result<bool> {
    let report = kernel_checks::run(&SelftestConfig {
        seed: cli.seed.unwrap_or(7),
        fault: fault.map(Fault::from),
        ..SelftestConfig::default()
    });
    if let Some(dir) = &cli.out {
        let meta = ReportMeta::for_value(&format!("kernels-selftest {:?} {:?}", cli.seed, fault));
        write_json(&output_path(dir, "kernels_selftest.json")?, &meta, &report)?;
    }
    print_json(&report);
    Ok(report.passed)
}

fn cmd_experiment(cli: &Cli, id: ExperimentId) -> Result<bool> {
    if id == ExperimentId::Selftest {
        return cmd_selftest(cli, None);
    }
    let c = load_config(cli, id)?;
    if c.experiment != id {
        return Err(HarnessError::Usage(format!(
            "configuration is for {} but {id} was requested",
            c.experiment
        )));
    }
    let summary = run_experiment(&c, &out_dir(cli, Some(&c)))?;
    print_json(&summary);
    Ok(summary.checks_passed && summary.failed_cases == 0)
}

fn cmd_selftest(cli: &Cli, fault: Option<FaultArg>) -> Result<bool> {
    let summary = run_selftest(&SelftestOptions {
        seed: cli.seed.unwrap_or(7),
        fault: fault.map(Fault::from),
        ..SelftestOptions::default()
    });
    if let Some(dir) = &cli.out {
        let meta = ReportMeta::for_value(&format!("selftest {:?} {:?}", cli.seed, fault));
        write_json(&output_path(dir, "selftest.json")?, &meta, &summary)?;
    }
    print_json(&summary);
    Ok(summary.passed)
}

fn dispatch(cli: &Cli) -> Result<bool> {
    init_thread_pool()?;
    match &cli.command {
        Command::Simulate { n } => cmd_simulate(cli, *n),
        Command::Meanfield => cmd_meanfield(cli),
        Command::Compare { n } => cmd_compare(cli, *n),
        Command::Diagnose { n } => cmd_diagnose(cli, *n),
        Command::Wasserstein { p, a, b, plan } => cmd_wasserstein(cli, *p, a, b, plan.as_deref()),
        Command::KernelsSelftest { inject_fault } => cmd_kernels_selftest(cli, *inject_fault),
        Command::Experiment { id } => cmd_experiment(cli, *id),
        Command::Selftest { inject_fault } => cmd_selftest(cli, *inject_fault),
        Command::Schema => {
            use std::io::Write;
            let _ = std::io::stdout().lock().write_all(SCHEMA.as_bytes());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
