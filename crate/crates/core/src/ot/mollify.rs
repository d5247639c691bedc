use std::f64::consts::PI;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::linalg::{compensated_sum, Vec3};
use crate::meanfield::BlobDensity;

use super::{w1_exact, DiscreteMeasure, W1_CAP};

/// `χ(x) = c (1 − |x|²)^k` on the unit ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialBump {
    pub coefficient: f64,
    pub exponent: u32,
}

impl Default for RadialBump {
    fn default() -> Self {
        RadialBump::normalized(2)
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl RadialBump {
    /// Coefficient chosen so that `∫χ = 1`.
    pub fn normalized(exponent: u32) -> Self {
        let b = RadialBump {
            coefficient: 1.0,
            exponent,
        };
        RadialBump {
            coefficient: 1.0 / b.integral(),
            exponent,
        }
    }

    /// `∫χ = 4π c Σ_j C(k,j) (−1)^j / (2j + 3)`.
    pub fn integral(&self) -> f64 {
        let k = self.exponent;
        let s: f64 = (0..=k)
            .map(|j| binomial(k, j) * if j % 2 == 0 { 1.0 } else { -1.0 } / (2 * j + 3) as f64)
            .sum();
        4.0 * PI * self.coefficient * s
    }

    /// `‖χ‖∞ = c`, attained at the origin.
    pub fn sup(&self) -> f64 {
        self.coefficient
    }

    pub fn eval(&self, z: &Vec3) -> f64 {
        let s2 = z.norm_squared();
        if s2 >= 1.0 {
            0.0
        } else {
            self.coefficient * (1.0 - s2).powi(self.exponent as i32)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.exponent < 2 {
            return Err(domain("the bump must be C1, which needs exponent >= 2"));
        }
        if (self.integral() - 1.0).abs() > 1e-12 {
            return Err(domain(format!("bump integrates to {}, not 1", self.integral())));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MollifiedMeasure {
    /// Each atom's mass spread over sub-grid points of its radius-`λ` ball.
    pub density: BlobDensity,
    pub lambda: f64,
    pub mass: f64,
    /// Max of the exact convolution over atoms and blob points.
    pub sup_estimate: f64,
    pub chi_sup: f64,
    /// Cost of the coupling that keeps every blob with its parent atom.
    pub witness_winf: f64,
}

/// `μ ∗ χ_λ` with `χ_λ(x) = λ⁻³ χ(x/λ)`, represented by `q³` sub-grid
/// blobs per atom weighted by `χ` and renormalized to the atom's mass.
pub fn mollify_empirical(mu: &DiscreteMeasure, lambda: f64, chi: &RadialBump, sub_grid: usize) -> Result<MollifiedMeasure> {
    chi.validate()?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(domain("mollification width must be positive"));
    }
    if sub_grid == 0 {
        return Err(domain("sub-grid needs at least one point per axis"));
    }
    let h = 2.0 / sub_grid as f64;
    let mut stencil = Vec::new();
    for i in 0..sub_grid {
        for j in 0..sub_grid {
            for k in 0..sub_grid {
                let z = Vec3::new(i as f64, j as f64, k as f64).add_scalar(0.5) * h - Vec3::repeat(1.0);
                let v = chi.eval(&z);
                if v > 0.0 {
                    stencil.push((z, v));
                }
            }
        }
    }
    let total = compensated_sum(stencil.iter().map(|s| s.1));
    let reach = stencil.iter().map(|s| s.0.norm()).fold(0.0, f64::max);
    let mut centers = Vec::with_capacity(mu.len() * stencil.len());
    let mut weights = Vec::with_capacity(centers.capacity());
    for (x, m) in mu.atoms().iter().zip(mu.weights()) {
        for (z, v) in &stencil {
            centers.push(x + z * lambda);
            weights.push(m * v / total);
        }
    }
    let density = BlobDensity::new(centers, weights, lambda * h, 0.0)?;
    let inv3 = lambda.powi(-3);
    let conv = |y: &Vec3| -> f64 {
        compensated_sum(mu.atoms().iter().zip(mu.weights()).map(|(x, m)| m * chi.eval(&((y - x) / lambda))))
            * inv3
    };
    let probes: Vec<Vec3> = if mu.len() * density.len() <= 4_000_000 {
        mu.atoms().iter().chain(density.centers()).copied().collect()
    } else {
        mu.atoms().to_vec()
    };
    let sup_estimate = crate::par::map_slice(&probes, conv).into_iter().fold(0.0, f64::max);
    Ok(MollifiedMeasure {
        mass: density.mass(),
        density,
        lambda,
        sup_estimate,
        chi_sup: chi.sup(),
        witness_winf: reach * lambda,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DiscretizeMode {
    Quadrature,
    Sampling { seed: u64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct Discretization {
    pub measure: DiscreteMeasure,
    /// `W1` between the blob measure and the discretization: exact when both
    /// supports fit the solver cap, otherwise an upper bound from an explicit
    /// coupling.
    pub gap_estimate: f64,
    pub gap_exact: bool,
}

/// Reduces a blob density to `n` atoms, either the heaviest blobs
/// renormalized or `n` seeded draws with probability proportional to weight.
pub fn discretize_density(density: &BlobDensity, n: usize, mode: DiscretizeMode) -> Result<Discretization> {
    if n == 0 {
        return Err(domain("discretization needs n >= 1"));
    }
    let full = density.to_measure()?;
    let measure = match mode {
        DiscretizeMode::Quadrature => {
            let mut order: Vec<usize> = (0..full.len()).collect();
            order.sort_by(|&a, &b| full.weights()[b].total_cmp(&full.weights()[a]).then(a.cmp(&b)));
            order.truncate(n);
            order.sort_unstable();
            DiscreteMeasure::normalized(
                order.iter().map(|&k| full.atoms()[k]).collect(),
                order.iter().map(|&k| full.weights()[k]).collect(),
            )?
        }
        DiscretizeMode::Sampling { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dist = WeightedIndex::new(full.weights()).map_err(|e| domain(e.to_string()))?;
            let atoms: Vec<Vec3> = (0..n).map(|_| full.atoms()[dist.sample(&mut rng)]).collect();
            DiscreteMeasure::empirical(&atoms)?
        }
    };
    let (gap_estimate, gap_exact) = if full.len() <= W1_CAP && measure.len() <= W1_CAP {
        (w1_exact(&full, &measure)?.0, true)
    } else {
        (proportional_coupling_cost(&full, &measure), false)
    };
    Ok(Discretization {
        measure,
        gap_estimate,
        gap_exact,
    })
}

/// Cost of the product coupling `μ ⊗ ν`, an upper bound on `W1`.
fn proportional_coupling_cost(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
    let rows = crate::par::map_range(mu.len(), |i| {
        let x = mu.atoms()[i];
        compensated_sum(nu.atoms().iter().zip(nu.weights()).map(|(y, w)| w * (x - y).norm())) * mu.weights()[i]
    });
    compensated_sum(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meanfield::{init_blobs, Rho0Spec};
    use crate::ot::winf_exact;

    #[test]
    fn default_bump_is_normalized_and_c1() {
        let chi = RadialBump::default();
        assert!((chi.integral() - 1.0).abs() < 1e-15);
        assert!((chi.sup() - 105.0 / (32.0 * PI)).abs() < 1e-14);
        assert!(chi.validate().is_ok());
        assert!(RadialBump::normalized(1).validate().is_err());
        let bad = RadialBump {
            coefficient: 1.0,
            exponent: 2,
        };
        let mu = DiscreteMeasure::dirac(Vec3::zeros());
        assert!(mollify_empirical(&mu, 0.1, &bad, 4).is_err());
    }

    #[test]
    fn single_atom_stays_in_its_ball() {
        let x = Vec3::new(0.3, -0.2, 0.9);
        let m = mollify_empirical(&DiscreteMeasure::dirac(x), 0.25, &RadialBump::default(), 8).unwrap();
        assert!((m.mass - 1.0).abs() < 1e-12);
        assert!(m.density.centers().iter().all(|c| (c - x).norm() < 0.25));
        assert!(m.witness_winf < 0.25);
        assert!((m.sup_estimate - RadialBump::default().sup() / 0.25f64.powi(3)).abs() < 1e-9);
    }

    #[test]
    fn mass_and_sup_bound_on_a_cloud() {
        let pts: Vec<Vec3> = (0..27).map(|k| Vec3::new((k % 3) as f64, ((k / 3) % 3) as f64, (k / 9) as f64) * 0.5).collect();
        let mu = DiscreteMeasure::empirical(&pts).unwrap();
        let lambda = 0.3;
        let m = mollify_empirical(&mu, lambda, &RadialBump::default(), 6).unwrap();
        assert!((m.mass - 1.0).abs() < 1e-8);
        // Balls of radius 0.3 around lattice points of spacing 0.5 are disjoint.
        let bound = m.chi_sup / (27.0 * lambda.powi(3));
        assert!(m.sup_estimate <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn witness_dominates_winf_on_uniform_stencil() {
        let mu = DiscreteMeasure::empirical(&[Vec3::zeros()]).unwrap();
        let m = mollify_empirical(&mu, 0.2, &RadialBump::normalized(2), 2).unwrap();
        let n = m.density.len();
        assert_eq!(n, 8);
        let target = m.density.to_measure().unwrap();
        let src = DiscreteMeasure::empirical(&vec![Vec3::zeros(); n]).unwrap();
        assert!(winf_exact(&src, &target).unwrap().0 <= m.witness_winf + 1e-15);
    }

    fn bump_density(m: usize) -> BlobDensity {
        init_blobs(
            &Rho0Spec::Bump {
                center: Vec3::zeros(),
                radius: 1.0,
            },
            m,
            0.3,
        )
        .unwrap()
    }

    #[test]
    fn quadrature_of_full_size_is_identity() {
        let d = bump_density(10);
        let q = discretize_density(&d, d.len(), DiscretizeMode::Quadrature).unwrap();
        assert_eq!(q.measure.atoms(), d.centers());
        assert!(q.gap_exact && q.gap_estimate < 1e-12);
    }

    #[test]
    fn sampling_is_seeded() {
        let d = bump_density(10);
        let a = discretize_density(&d, 50, DiscretizeMode::Sampling { seed: 4 }).unwrap();
        let b = discretize_density(&d, 50, DiscretizeMode::Sampling { seed: 4 }).unwrap();
        let c = discretize_density(&d, 50, DiscretizeMode::Sampling { seed: 5 }).unwrap();
        assert_eq!(a.measure, b.measure);
        assert_ne!(a.measure, c.measure);
    }

    #[test]
    fn sampling_gap_shrinks_with_n() {
        let d = bump_density(10);
        let gap = |n: usize| -> f64 {
            (0..4)
                .map(|s| discretize_density(&d, n, DiscretizeMode::Sampling { seed: s }).unwrap().gap_estimate)
                .sum::<f64>()
                / 4.0
        };
        let (a, b, c) = (gap(25), gap(100), gap(400));
        assert!(a > b && b > c, "{a} {b} {c}");
    }

    #[test]
    fn product_coupling_bounds_w1() {
        let d = bump_density(10);
        let full = d.to_measure().unwrap();
        let q = discretize_density(&d, 20, DiscretizeMode::Quadrature).unwrap();
        assert!(proportional_coupling_cost(&full, &q.measure) >= q.gap_estimate);
    }
}
