//! Seeded initial clouds.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use sediment::cloud::{choose_lambda, diagnostics, CloudDiagnostics, LambdaPolicy, ParticleCloud};
use sediment::meanfield::Rho0Spec;
use sediment::Vec3;

use crate::config::GeneratorSpec;
use crate::error::{HarnessError, Result};
use crate::io::read_cloud_csv;

/// Redraws allowed for one particle before the density is declared infeasible.
pub const MAX_ATTEMPTS: usize = 1000;

#[derive(Clone, Debug, Serialize)]
pub struct GeneratedCloud {
    pub cloud: ParticleCloud,
    pub seed: u64,
    pub d_min: f64,
    pub diagnostics: CloudDiagnostics,
    /// Draws rejected for overlapping an earlier particle.
    pub rejected: usize,
}

/// Accepts points whose distance to every accepted point exceeds `contact`.
struct Occupancy {
    contact: f64,
    cells: HashMap<[i64; 3], Vec<Vec3>>,
}

impl Occupancy {
    fn new(contact: f64) -> Self {
        Occupancy {
            contact,
            cells: HashMap::new(),
        }
    }

    fn key(&self, p: &Vec3) -> [i64; 3] {
        let h = self.contact.max(f64::MIN_POSITIVE);
        [(p.x / h).floor() as i64, (p.y / h).floor() as i64, (p.z / h).floor() as i64]
    }

    fn try_insert(&mut self, p: Vec3) -> bool {
        let k = self.key(&p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(pts) = self.cells.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        if pts.iter().any(|q| (p - q).norm() <= self.contact) {
                            return false;
                        }
                    }
                }
            }
        }
        self.cells.entry(k).or_default().push(p);
        true
    }
}

fn draw_density(spec: &Rho0Spec, rng: &mut ChaCha8Rng) -> Vec3 {
    match *spec {
        Rho0Spec::Gaussian { center, sigma } => {
            let z: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
            center + Vec3::new(z[0], z[1], z[2]) * sigma
        }
        Rho0Spec::Bump { center, radius } => loop {
            let u = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let s2 = u.norm_squared();
            if s2 < 1.0 && rng.gen::<f64>() < (1.0 - s2).powi(2) {
                break center + u * radius;
            }
        },
    }
}

fn place(n: usize, contact: f64, mut draw: impl FnMut(usize) -> Vec3) -> Result<(Vec<Vec3>, usize)> {
    let mut occ = Occupancy::new(contact);
    let mut out = Vec::with_capacity(n);
    let mut rejected = 0;
    for i in 0..n {
        let mut tries = 0;
        loop {
            let p = draw(i);
            if occ.try_insert(p) {
                out.push(p);
                break;
            }
            rejected += 1;
            tries += 1;
            if tries >= MAX_ATTEMPTS {
                return Err(HarnessError::Core(sediment::Error::Infeasible(format!(
                    "particle {i} overlapped after {MAX_ATTEMPTS} draws (2R = {contact:.3e})"
                ))));
            }
        }
    }
    Ok((out, rejected))
}

/// Lattice spacing and sites for `n` points in `[0, side]³`.
pub fn lattice_sites(n: usize, side: f64) -> (f64, Vec<Vec3>) {
    let m = (1..).find(|m: &usize| m * m * m >= n).unwrap_or(1);
    let h = side / m as f64;
    let mut sites = Vec::with_capacity(n);
    'fill: for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                if sites.len() == n {
                    break 'fill;
                }
                sites.push(Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * h);
            }
        }
    }
    (h, sites)
}

/// Positions for `n` spheres of radius `r0 / n`, redrawn until no two overlap.
pub fn generate_positions(spec: &GeneratorSpec, n: usize, seed: u64, r0: f64) -> Result<(Vec<Vec3>, usize)> {
    if n == 0 {
        return Err(HarnessError::Config("particle count must be at least 1".into()));
    }
    let contact = 2.0 * r0 / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match spec {
        GeneratorSpec::UniformBox { side } => {
            let s = *side;
            place(n, contact, |_| Vec3::new(rng.gen::<f64>() * s, rng.gen::<f64>() * s, rng.gen::<f64>() * s))
        }
        GeneratorSpec::PerturbedLattice { side, jitter } => {
            let (h, sites) = lattice_sites(n, *side);
            let amp = 0.5 * jitter * h;
            place(n, contact, |i| {
                if amp == 0.0 {
                    return sites[i];
                }
                sites[i] + Vec3::new(rng.gen_range(-amp..=amp), rng.gen_range(-amp..=amp), rng.gen_range(-amp..=amp))
            })
        }
        GeneratorSpec::Density { spec } => place(n, contact, |_| draw_density(spec, &mut rng)),
        GeneratorSpec::File { path } => {
            let pts = read_cloud_csv(path)?;
            if pts.len() != n {
                return Err(HarnessError::Config(format!(
                    "{} holds {} particles, expected {n}",
                    path.display(),
                    pts.len()
                )));
            }
            Ok((pts, 0))
        }
    }
}

/// Deterministic cloud for `(spec, n, seed)` with its spacing and
/// concentration diagnostics at the policy's `λ`.
pub fn generate_cloud(
    spec: &GeneratorSpec,
    n: usize,
    seed: u64,
    r0: f64,
    policy: LambdaPolicy,
) -> Result<GeneratedCloud> {
    let (pts, rejected) = generate_positions(spec, n, seed, r0)?;
    let cloud = ParticleCloud::new(pts, r0, 0.0)?;
    cloud.check_non_overlap()?;
    let lambda = if n >= 2 { choose_lambda(&cloud, policy)?.lambda } else { 1.0 };
    let diagnostics = diagnostics(&cloud, lambda, n <= 512)?;
    Ok(GeneratedCloud {
        d_min: diagnostics.d_min,
        diagnostics,
        cloud,
        seed,
        rejected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn policy() -> LambdaPolicy {
        LambdaPolicy::default()
    }

    #[test]
    fn exact_lattice_without_jitter() {
        let spec = GeneratorSpec::PerturbedLattice { side: 1.0, jitter: 0.0 };
        let g = generate_cloud(&spec, 64, 1, 0.01, policy()).unwrap();
        assert!((g.d_min - 0.25).abs() < 1e-15);
        assert_eq!(g.rejected, 0);
        assert_eq!(g.cloud.positions()[0], Vec3::new(0.125, 0.125, 0.125));
    }

    #[test]
    fn partial_lattice_fills_rows() {
        let (h, s) = lattice_sites(10, 3.0);
        assert_eq!(h, 1.0);
        assert_eq!(s.len(), 10);
    }

    #[test]
    fn same_seed_same_cloud() {
        for spec in [
            GeneratorSpec::UniformBox { side: 1.0 },
            GeneratorSpec::PerturbedLattice { side: 1.0, jitter: 0.3 },
            GeneratorSpec::Density {
                spec: Rho0Spec::Gaussian {
                    center: Vec3::zeros(),
                    sigma: 0.5,
                },
            },
        ] {
            let a = generate_cloud(&spec, 100, 9, 0.05, policy()).unwrap();
            let b = generate_cloud(&spec, 100, 9, 0.05, policy()).unwrap();
            assert_eq!(a.cloud.positions(), b.cloud.positions());
            let c = generate_cloud(&spec, 100, 10, 0.05, policy()).unwrap();
            assert_ne!(a.cloud.positions(), c.cloud.positions());
        }
    }

    #[test]
    fn single_particle_is_allowed() {
        let g = generate_cloud(&GeneratorSpec::default(), 1, 0, 0.1, policy()).unwrap();
        assert_eq!(g.cloud.len(), 1);
        assert!(g.d_min.is_infinite());
    }

    #[test]
    fn bump_samples_stay_in_support() {
        let spec = Rho0Spec::Bump {
            center: Vec3::new(1.0, 2.0, 3.0),
            radius: 0.5,
        };
        let (pts, _) = generate_positions(&GeneratorSpec::Density { spec }, 500, 3, 0.01).unwrap();
        assert!(pts.iter().all(|p| (p - spec.center()).norm() < 0.5));
        let mean = pts.iter().fold(Vec3::zeros(), |a, p| a + p) / 500.0;
        assert!((mean - spec.center()).norm() < 0.05);
    }

    #[test]
    fn packing_beyond_capacity_is_infeasible() {
        // 2R = 2 · 8 / 8 = 2 cannot fit eight spheres in a unit box.
        match generate_positions(&GeneratorSpec::UniformBox { side: 1.0 }, 8, 0, 8.0) {
            Err(HarnessError::Core(sediment::Error::Infeasible(_))) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn uniform_spacing_scales_like_n_to_minus_two_thirds() {
        // Poisson nearest-pair law: median d_min ≈ (ln 2 · 2 / (4π/3 · N²))^{1/3}.
        let n = 512usize;
        let mut d: Vec<f64> = (0..20)
            .map(|s| {
                generate_cloud(&GeneratorSpec::default(), n, s, 1e-4, policy())
                    .unwrap()
                    .d_min
            })
            .collect();
        d.sort_by(f64::total_cmp);
        let median = 0.5 * (d[9] + d[10]);
        let scale = (n as f64).powf(-2.0 / 3.0);
        let ratio = median / scale;
        assert!((0.25..=4.0).contains(&ratio), "{ratio}");
        let predicted = (2.0 * std::f64::consts::LN_2 / (4.0 * std::f64::consts::PI / 3.0)).cbrt();
        assert!((ratio / predicted - 1.0).abs() < 0.5, "{ratio} vs {predicted}");
    }
}
