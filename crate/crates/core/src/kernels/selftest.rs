//! Property checks for the kernel library, reported as maximum errors.
//!
//! A [`Fault`] swaps in a deliberately broken kernel so the checks themselves
//! can be tested.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::linalg::{sym, Mat3, Vec3};

use super::{
    bump_field_eval, combined_eval, exact_tractions, oseen, rotlet_eval, stokeslet_eval,
    strainlet_eval, traction_integrals, BumpFieldSpec, KernelSample, SphereSolution,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Fault {
    /// Stokeslet velocity and pressure with the sign flipped.
    StokesletSign,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum KernelKind {
    Stokeslet,
    Rotlet,
    Strainlet,
    Combined,
}

pub const ALL_KINDS: [KernelKind; 4] = [
    KernelKind::Stokeslet,
    KernelKind::Rotlet,
    KernelKind::Strainlet,
    KernelKind::Combined,
];

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: impl Into<String>, max_error: f64, tolerance: f64) -> Self {
        CheckResult {
            name: name.into(),
            max_error,
            tolerance,
            passed: max_error <= tolerance,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SelftestReport {
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct SelftestConfig {
    pub seed: u64,
    pub points: usize,
    pub quadrature_order: (usize, usize),
    pub lipschitz_pairs: usize,
    pub fault: Option<Fault>,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        SelftestConfig {
            seed: 7,
            points: 1000,
            quadrature_order: (64, 128),
            lipschitz_pairs: 100_000,
            fault: None,
        }
    }
}

/// Boundary data of one kernel instance.
#[derive(Clone, Copy, Debug)]
struct Instance {
    kind: KernelKind,
    center: Vec3,
    radius: f64,
    vector: Vec3,
    matrix: Mat3,
}

impl Instance {
    fn random(kind: KernelKind, rng: &mut ChaCha8Rng) -> Self {
        let center = random_vec(rng, 1.0);
        let radius = rng.gen_range(0.05..1.0);
        let vector = random_vec(rng, 1.0);
        let mut m = Mat3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        m -= Mat3::identity() * (m.trace() / 3.0);
        let matrix = match kind {
            KernelKind::Strainlet => sym(&m),
            _ => m,
        };
        Instance {
            kind,
            center,
            radius,
            vector,
            matrix,
        }
    }

    fn eval(&self, x: &Vec3, fault: Option<Fault>) -> KernelSample {
        let s = match self.kind {
            KernelKind::Stokeslet => stokeslet_eval(&self.center, self.radius, &self.vector, x),
            KernelKind::Rotlet => rotlet_eval(&self.center, self.radius, &self.vector, x),
            KernelKind::Strainlet => strainlet_eval(&self.center, self.radius, &self.matrix, x),
            KernelKind::Combined => combined_eval(&self.center, self.radius, &self.matrix, x),
        }
        .expect("instance data is valid by construction");
        match (self.kind, fault) {
            (KernelKind::Stokeslet, Some(Fault::StokesletSign)) => KernelSample {
                velocity: -s.velocity,
                gradient: -s.gradient,
                pressure: -s.pressure,
                inside: s.inside,
            },
            _ => s,
        }
    }

    /// Prescribed surface velocity at offset `y`.
    fn surface_data(&self, y: &Vec3) -> Vec3 {
        match self.kind {
            KernelKind::Stokeslet => self.vector,
            KernelKind::Rotlet => self.vector.cross(y),
            KernelKind::Strainlet | KernelKind::Combined => self.matrix * y,
        }
    }

    fn data_scale(&self) -> f64 {
        match self.kind {
            KernelKind::Stokeslet => self.vector.norm(),
            KernelKind::Rotlet => self.vector.norm() * self.radius,
            _ => self.matrix.norm() * self.radius,
        }
    }

    fn solution(&self) -> SphereSolution {
        match self.kind {
            KernelKind::Stokeslet => SphereSolution::Stokeslet(self.vector),
            KernelKind::Rotlet => SphereSolution::Rotlet(self.vector),
            KernelKind::Strainlet => SphereSolution::Strainlet(self.matrix),
            KernelKind::Combined => SphereSolution::Combined(self.matrix),
        }
    }
}

fn random_vec(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
    Vec3::new(
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
    )
}

fn random_direction(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = random_vec(rng, 1.0);
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

fn random_exterior(rng: &mut ChaCha8Rng, inst: &Instance) -> Vec3 {
    let t: f64 = rng.gen_range(0.0..1.0);
    let r = inst.radius * (1.05f64.ln() + t * (10.0f64.ln() - 1.05f64.ln())).exp();
    inst.center + random_direction(rng) * r
}

fn kind_name(kind: KernelKind) -> &'static str {
    match kind {
        KernelKind::Stokeslet => "stokeslet",
        KernelKind::Rotlet => "rotlet",
        KernelKind::Strainlet => "strainlet",
        KernelKind::Combined => "combined",
    }
}

/// Max relative mismatch between the surface velocity and the prescribed data.
pub fn boundary_check(kind: KernelKind, points: usize, seed: u64, fault: Option<Fault>) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let inst = Instance::random(kind, &mut rng);
        let y = random_direction(&mut rng) * inst.radius;
        let s = inst.eval(&(inst.center + y), fault);
        let err = (s.velocity - inst.surface_data(&y)).norm() / inst.data_scale();
        worst = worst.max(err);
    }
    CheckResult::new(format!("boundary/{}", kind_name(kind)), worst, 1e-12)
}

fn fd_step(inst: &Instance, x: &Vec3) -> f64 {
    1e-4 * (x - inst.center).norm()
}

/// Central-difference divergence relative to `|u|/r + |∇u|`.
pub fn divergence_check(kind: KernelKind, points: usize, seed: u64, fault: Option<Fault>) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd1);
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let inst = Instance::random(kind, &mut rng);
        let x = random_exterior(&mut rng, &inst);
        let h = fd_step(&inst, &x);
        let mut div = 0.0;
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = h;
            div += (inst.eval(&(x + e), fault).velocity[k] - inst.eval(&(x - e), fault).velocity[k])
                / (2.0 * h);
        }
        let r = (x - inst.center).norm();
        let s = inst.eval(&x, fault);
        let scale = s.velocity.norm() / r + s.gradient.norm();
        worst = worst.max(div.abs() / scale);
    }
    CheckResult::new(format!("divergence/{}", kind_name(kind)), worst, 1e-6)
}

/// Central-difference `−Δu + ∇p` relative to `(|u|/r + |∇u| + |p|)/r`.
pub fn momentum_check(kind: KernelKind, points: usize, seed: u64, fault: Option<Fault>) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x3e);
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let inst = Instance::random(kind, &mut rng);
        let x = random_exterior(&mut rng, &inst);
        let h = fd_step(&inst, &x);
        let centre = inst.eval(&x, fault);
        let mut lap = Vec3::zeros();
        let mut grad_p = Vec3::zeros();
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = h;
            let plus = inst.eval(&(x + e), fault);
            let minus = inst.eval(&(x - e), fault);
            lap += (plus.velocity - centre.velocity * 2.0 + minus.velocity) / (h * h);
            grad_p[k] = (plus.pressure - minus.pressure) / (2.0 * h);
        }
        let r = (x - inst.center).norm();
        let scale = (centre.velocity.norm() / r + centre.gradient.norm() + centre.pressure.abs()) / r;
        worst = worst.max((grad_p - lap).norm() / scale);
    }
    CheckResult::new(format!("momentum/{}", kind_name(kind)), worst, 1e-4)
}

/// Quadrature tractions against the closed-form force, torque and stresslet.
pub fn traction_check(kind: KernelKind, order: (usize, usize), seed: u64, fault: Option<Fault>) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7a);
    let mut worst: f64 = 0.0;
    for _ in 0..4 {
        let inst = Instance::random(kind, &mut rng);
        let sol = inst.solution();
        let mut q = traction_integrals(&sol, inst.radius, order).expect("valid order");
        if let (KernelKind::Stokeslet, Some(Fault::StokesletSign)) = (kind, fault) {
            q.force = -q.force;
        }
        let exact = exact_tractions(&sol, inst.radius);
        let scale = exact.force.norm() + exact.torque.norm() + exact.stresslet.norm();
        let err = (q.force - exact.force).norm()
            + (q.torque - exact.torque).norm()
            + (q.stresslet - exact.stresslet).norm();
        worst = worst.max(err / scale);
    }
    CheckResult::new(format!("traction/{}", kind_name(kind)), worst, 1e-8)
}

/// Ratio of `|u|` and `|∇u|` to their decay envelopes over `r/R = 4 … 256`.
pub fn decay_check(kind: KernelKind, seed: u64, fault: Option<Fault>) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5c);
    let inst = Instance::random(kind, &mut rng);
    let mut worst: f64 = 0.0;
    let strength = inst.data_scale() / inst.radius;
    for k in 2..=8 {
        let r = inst.radius * f64::from(1u32 << k);
        for _ in 0..8 {
            let x = inst.center + random_direction(&mut rng) * r;
            let s = inst.eval(&x, fault);
            let rho = inst.radius / r;
            let (u_env, g_env) = match kind {
                KernelKind::Stokeslet => (inst.vector.norm() * rho, inst.vector.norm() * rho / r),
                _ => (
                    strength * inst.radius * rho * rho,
                    strength * rho * rho * rho,
                ),
            };
            worst = worst.max(s.velocity.norm() / u_env).max(s.gradient.norm() / g_env);
        }
    }
    CheckResult::new(format!("decay/{}", kind_name(kind)), worst, 10.0)
}

/// Largest `|Φ(x) − Φ(y)| min(|x|², |y|²) / |x − y|` over random pairs.
pub fn lipschitz_check(pairs: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x11);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let x = random_direction(&mut rng) * rng.gen_range(0.05..5.0);
        let y = random_direction(&mut rng) * rng.gen_range(0.05..5.0);
        let d = (x - y).norm();
        if d == 0.0 {
            continue;
        }
        let m = x.norm_squared().min(y.norm_squared());
        worst = worst.max((oseen(&x) - oseen(&y)).norm() * m / d);
    }
    CheckResult::new("lipschitz/oseen", worst, 2.0)
}

/// Largest `|u − 6πRΦV| r³ / (R³|V|)` over random exterior points.
pub fn point_force_residual_check(points: usize, seed: u64, fault: Option<Fault>) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x99);
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let inst = Instance::random(KernelKind::Stokeslet, &mut rng);
        let x = random_exterior(&mut rng, &inst);
        let y = x - inst.center;
        let r = y.norm();
        let u = inst.eval(&x, fault).velocity;
        let far = oseen(&y) * inst.vector * (6.0 * PI * inst.radius);
        let env = inst.radius.powi(3) * inst.vector.norm() / r.powi(3);
        worst = worst.max((u - far).norm() / env);
    }
    CheckResult::new("point-force-residual/stokeslet", worst, 1.0)
}

/// Interpolation, support and divergence of a random disjoint bump field.
pub fn bump_field_checks(points: usize, seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb0);
    let radius = 0.05;
    let mut centers: Vec<Vec3> = Vec::new();
    while centers.len() < 12 {
        let c = random_vec(&mut rng, 0.5);
        if centers.iter().all(|o| (o - c).norm() >= 4.5 * radius) {
            centers.push(c);
        }
    }
    let coeffs: Vec<Vec3> = centers.iter().map(|_| random_vec(&mut rng, 1.0)).collect();
    let spec = BumpFieldSpec::new(centers.clone(), radius, coeffs.clone()).expect("disjoint");
    let emax = spec.max_coefficient();
    let interp = centers
        .iter()
        .zip(&coeffs)
        .map(|(c, e)| (bump_field_eval(&spec, c) - e).norm())
        .fold(0.0, f64::max);
    let mut leak: f64 = 0.0;
    let mut div_worst: f64 = 0.0;
    let h = 1e-5 * radius;
    for p in 0..points {
        let c = centers[p % centers.len()];
        let x = c + random_direction(&mut rng) * rng.gen_range(0.0..2.5 * radius);
        if centers.iter().all(|c| (x - c).norm() > 2.0 * radius) {
            leak = leak.max(bump_field_eval(&spec, &x).norm());
        }
        let mut div = 0.0;
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = h;
            div += (bump_field_eval(&spec, &(x + e))[k] - bump_field_eval(&spec, &(x - e))[k]) / (2.0 * h);
        }
        div_worst = div_worst.max(div.abs());
    }
    vec![
        CheckResult::new("bump/interpolation", interp, 0.0),
        CheckResult::new("bump/support", leak, 0.0),
        CheckResult::new("bump/divergence", div_worst, 1e-6 * emax / radius),
    ]
}

/// Runs every check.
pub fn run(cfg: &SelftestConfig) -> SelftestReport {
    let mut checks = Vec::new();
    let n_surface = cfg.points.min(100).max(1);
    for kind in ALL_KINDS {
        checks.push(boundary_check(kind, n_surface, cfg.seed, cfg.fault));
        checks.push(divergence_check(kind, cfg.points, cfg.seed, cfg.fault));
        checks.push(momentum_check(kind, cfg.points, cfg.seed, cfg.fault));
        checks.push(traction_check(kind, cfg.quadrature_order, cfg.seed, cfg.fault));
        checks.push(decay_check(kind, cfg.seed, cfg.fault));
    }
    checks.push(lipschitz_check(cfg.lipschitz_pairs, cfg.seed));
    checks.push(point_force_residual_check(cfg.points, cfg.seed, cfg.fault));
    checks.extend(bump_field_checks(cfg.points, cfg.seed));
    let passed = checks.iter().all(|c| c.passed);
    SelftestReport { checks, passed }
}
