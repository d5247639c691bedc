//! Property checks for every module, summarized as JSON.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use sediment::cloud::{concentration_l, concentration_m, min_distance, min_distance_bruteforce, riemann_sum_check, ParticleCloud, DEFAULT_RIEMANN_CONSTANT};
use sediment::dynamics::{simulate, SimulationConfig};
use sediment::kernels::selftest::{self as kernel_checks, Fault, SelftestConfig};
use sediment::meanfield::{advance, init_blobs, MeanfieldParams, Rho0Spec};
use sediment::ot::{w1_bruteforce, w1_exact, winf_bruteforce, winf_exact, DiscreteMeasure};
use sediment::reflections::{apply_interaction_map, dense_series_limit, neumann_velocity_solve, GravitySettings, NeumannOptions, StageVector};
use sediment::Vec3;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelftestSummary {
    pub checks: Vec<Check>,
    pub failed: Vec<String>,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct SelftestOptions {
    pub seed: u64,
    pub fault: Option<Fault>,
    /// Kernel points per field check.
    pub kernel_points: usize,
    pub quadrature_order: (usize, usize),
}

impl Default for SelftestOptions {
    fn default() -> Self {
        SelftestOptions {
            seed: 7,
            fault: None,
            kernel_points: 1000,
            quadrature_order: (64, 128),
        }
    }
}

struct Suite {
    name: &'static str,
    checks: Vec<Check>,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Suite { name, checks: Vec::new() }
    }

    /// `value ≤ tolerance`, or the error when the computation failed.
    fn check(&mut self, name: &str, tolerance: f64, value: sediment::Result<f64>) {
        let (value, error) = match value {
            Ok(v) => (v, None),
            Err(e) => (f64::NAN, Some(e.to_string())),
        };
        self.checks.push(Check {
            suite: self.name.into(),
            name: name.into(),
            value,
            tolerance,
            passed: error.is_none() && value <= tolerance,
            error,
        });
    }
}

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec3> {
    (0..n).map(|_| Vec3::new(rng.gen(), rng.gen(), rng.gen())).collect()
}

fn kernels(opts: &SelftestOptions) -> Suite {
    let mut s = Suite::new("kernels");
    let report = kernel_checks::run(&SelftestConfig {
        seed: opts.seed,
        points: opts.kernel_points,
        quadrature_order: opts.quadrature_order,
        fault: opts.fault,
        ..SelftestConfig::default()
    });
    for c in report.checks {
        s.check(&c.name, c.tolerance, Ok(c.max_error));
    }
    s
}

fn cloud(rng: &mut ChaCha8Rng) -> Suite {
    let mut s = Suite::new("cloud");
    let c = ParticleCloud::new(random_points(rng, 100), 1e-3, 0.0).expect("finite points");
    s.check(
        "min_distance/grid_vs_brute",
        0.0,
        (|| Ok((min_distance(&c)?.distance - min_distance_bruteforce(&c)?.distance).abs()))(),
    );
    s.check(
        "concentration/l_le_m_le_8l",
        0.0,
        (|| {
            let lambda = 0.15;
            let m = concentration_m(&c, lambda, true)?.exact.unwrap_or(usize::MAX);
            let l = concentration_l(&c, lambda);
            Ok(if l <= m && m <= 8 * l { 0.0 } else { 1.0 })
        })(),
    );
    for k in [0.0, 1.0, 2.0, 3.0] {
        s.check(
            &format!("riemann_sum/k={k}"),
            1.0,
            (|| {
                let lambda = 0.2;
                let m = concentration_m(&c, lambda, false)?.upper as f64;
                let mbar = m / (c.len() as f64 * lambda.powi(3));
                let r = riemann_sum_check(&c, k, lambda, mbar, DEFAULT_RIEMANN_CONSTANT)?;
                Ok(r.lhs / r.rhs)
            })(),
        );
    }
    s
}

fn reflections(rng: &mut ChaCha8Rng) -> Suite {
    let mut s = Suite::new("reflections");
    let pts = random_points(rng, 40);
    s.check(
        "series_vs_dense_limit",
        1e-10,
        (|| {
            let c = ParticleCloud::new(pts.clone(), 0.05, 0.0)?;
            c.check_non_overlap()?;
            let (_, state) = neumann_velocity_solve(&c, &GravitySettings::downward(), &NeumannOptions::default())?;
            let (y, _) = dense_series_limit(&c, &state.stage0)?;
            let r = c.radius();
            Ok(state.partial_sum.sub(&y).eta(r) / y.eta(r))
        })(),
    );
    s.check(
        "interaction_map_linear",
        1e-13,
        (|| {
            let c = ParticleCloud::new(pts.clone(), 0.2, 0.0)?;
            let a = StageVector::uniform_velocity(c.len(), Vec3::new(0.3, -0.1, 1.0));
            let b = StageVector::uniform_velocity(c.len(), Vec3::new(-2.0, 0.5, 0.2));
            let lhs = apply_interaction_map(&c, &a.add(&b))?;
            let rhs = apply_interaction_map(&c, &a)?.add(&apply_interaction_map(&c, &b)?);
            Ok(lhs.sub(&rhs).eta(c.radius()) / rhs.eta(c.radius()).max(f64::MIN_POSITIVE))
        })(),
    );
    s
}

fn dynamics() -> Suite {
    let mut s = Suite::new("dynamics");
    s.check(
        "isolated_sphere_settles",
        1e-14,
        (|| {
            let c = ParticleCloud::new(vec![Vec3::new(0.1, 0.2, 0.3)], 0.01, 0.0)?;
            let cfg = SimulationConfig {
                horizon: 0.5,
                dt: 0.1,
                ..SimulationConfig::default()
            };
            let traj = simulate(&c, &GravitySettings::downward(), &cfg)?;
            let end = traj.last().cloud.positions()[0];
            Ok((end - Vec3::new(0.1, 0.2, -0.2)).norm())
        })(),
    );
    s.check(
        "pair_keeps_spacing",
        1e-12,
        (|| {
            // Two spheres side by side move together by symmetry.
            let c = ParticleCloud::new(vec![Vec3::zeros(), Vec3::new(0.5, 0.0, 0.0)], 0.1, 0.0)?;
            let traj = simulate(&c, &GravitySettings::downward(), &SimulationConfig::default())?;
            let x = traj.last().cloud.positions();
            Ok(((x[0] - x[1]).norm() - 0.5).abs())
        })(),
    );
    s
}

fn meanfield() -> Suite {
    let mut s = Suite::new("meanfield");
    let spec = Rho0Spec::Bump {
        center: Vec3::zeros(),
        radius: 1.0,
    };
    s.check(
        "mass_conserved",
        0.0,
        (|| {
            let d = init_blobs(&spec, 10, 0.2)?;
            let p = MeanfieldParams::new(1.0, GravitySettings::downward())?;
            Ok((advance(&d, &p, 0.1)?.mass() - d.mass()).abs())
        })(),
    );
    s.check(
        "zero_coupling_translation",
        1e-14,
        (|| {
            let d = init_blobs(&spec, 10, 0.2)?;
            let p = MeanfieldParams::new(0.0, GravitySettings::downward())?;
            let moved = advance(&d, &p, 0.25)?;
            Ok(d.centers()
                .iter()
                .zip(moved.centers())
                .map(|(a, b)| (b - a - Vec3::new(0.0, 0.0, -0.25)).norm())
                .fold(0.0, f64::max))
        })(),
    );
    s
}

fn ot(rng: &mut ChaCha8Rng) -> Suite {
    let mut s = Suite::new("ot");
    let mut w1_err: f64 = 0.0;
    let mut winf_err: f64 = 0.0;
    let mut failure = None;
    for trial in 0..40 {
        let n = 1 + trial % 6;
        let a = DiscreteMeasure::empirical(&random_points(rng, n));
        let b = DiscreteMeasure::empirical(&random_points(rng, n));
        let r = (|| {
            let (a, b) = (a?, b?);
            Ok::<_, sediment::Error>((
                (w1_exact(&a, &b)?.0 - w1_bruteforce(&a, &b)?).abs(),
                (winf_exact(&a, &b)?.0 - winf_bruteforce(&a, &b)?).abs(),
            ))
        })();
        match r {
            Ok((e1, e2)) => {
                w1_err = w1_err.max(e1);
                winf_err = winf_err.max(e2);
            }
            Err(e) => failure = Some(e),
        }
    }
    match failure {
        None => {
            s.check("w1_vs_permutations", 1e-9, Ok(w1_err));
            s.check("winf_vs_permutations", 0.0, Ok(winf_err));
        }
        Some(e) => s.check("w1_vs_permutations", 1e-9, Err(e)),
    }
    s
}

/// Runs every suite; a failed computation is a failed check, never a panic.
pub fn run_selftest(opts: &SelftestOptions) -> SelftestSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let suites = [
        kernels(opts),
        cloud(&mut rng),
        reflections(&mut rng),
        dynamics(),
        meanfield(),
        ot(&mut rng),
    ];
    let checks: Vec<Check> = suites.into_iter().flat_map(|s| s.checks).collect();
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{}/{}", c.suite, c.name))
        .collect();
    SelftestSummary {
        passed: failed.is_empty(),
        failed,
        checks,
    }
}
