//! Exact Wasserstein distances between discrete measures on `R³`,
//! mollification of empirical measures and discretization of blob densities.

mod bottleneck;
mod brute;
mod mollify;
mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linalg::{compensated_sum, Vec3};

pub use bottleneck::{winf_bruteforce, winf_exact, BottleneckPlan, WINF_CAP};
pub use brute::{w1_bruteforce, BRUTE_FORCE_CAP};
pub use mollify::{discretize_density, mollify_empirical, Discretization, DiscretizeMode, MollifiedMeasure, RadialBump};

/// Largest support accepted on either side by [`w1_exact`].
pub const W1_CAP: usize = 4096;
/// Integer mass units per unit of probability in the flow solver.
const MASS_UNITS: f64 = (1u64 << 50) as f64;
const NORMALIZATION_TOL: f64 = 1e-12;

/// Atoms with positive weights summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    atoms: Vec<Vec3>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<Vec3>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(domain("a measure needs at least one atom"));
        }
        if atoms.len() != weights.len() {
            return Err(domain("atoms and weights differ in length"));
        }
        if atoms.iter().any(|a| !a.iter().all(|c| c.is_finite())) {
            return Err(domain("atoms must be finite"));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(domain("weights must be positive"));
        }
        let total = compensated_sum(weights.iter().copied());
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(domain(format!("weights sum to {total}, not 1")));
        }
        Ok(DiscreteMeasure { atoms, weights })
    }

    /// Rescales positive weights to unit mass; zero weights are dropped.
    pub fn normalized(atoms: Vec<Vec3>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(domain("atoms and weights differ in length"));
        }
        if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(domain("weights must be non-negative"));
        }
        let total = compensated_sum(weights.iter().copied());
        if !(total > 0.0) {
            return Err(domain("total mass must be positive"));
        }
        let (a, w): (Vec<Vec3>, Vec<f64>) = atoms
            .into_iter()
            .zip(weights)
            .filter(|(_, w)| *w > 0.0)
            .map(|(a, w)| (a, w / total))
            .unzip();
        DiscreteMeasure::new(a, w)
    }

    /// `(1/N) Σ δ_{x_i}`.
    pub fn empirical(points: &[Vec3]) -> Result<Self> {
        let w = 1.0 / points.len().max(1) as f64;
        DiscreteMeasure::new(points.to_vec(), vec![w; points.len()])
    }

    pub fn dirac(x: Vec3) -> Self {
        DiscreteMeasure {
            atoms: vec![x],
            weights: vec![1.0],
        }
    }

    pub fn atoms(&self) -> &[Vec3] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// All weights equal to `1/n` within the normalization tolerance.
    pub fn is_uniform(&self) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights.iter().all(|x| (x - w).abs() <= NORMALIZATION_TOL)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransportPlan {
    /// `(source atom, target atom, mass)`, sorted lexicographically.
    pub entries: Vec<(usize, usize, f64)>,
    pub cost: f64,
    /// `max_i |Σ_j π_ij − μ_i|`.
    pub source_residual: f64,
    /// `max_j |Σ_i π_ij − ν_j|`.
    pub target_residual: f64,
}

impl TransportPlan {
    pub fn from_entries(mu: &DiscreteMeasure, nu: &DiscreteMeasure, entries: Vec<(usize, usize, f64)>) -> Self {
        let mut rows = vec![0.0; mu.len()];
        let mut cols = vec![0.0; nu.len()];
        for &(i, j, m) in &entries {
            rows[i] += m;
            cols[j] += m;
        }
        let source_residual = rows.iter().zip(mu.weights()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let target_residual = cols.iter().zip(nu.weights()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let cost = compensated_sum(entries.iter().map(|&(i, j, m)| m * (mu.atoms()[i] - nu.atoms()[j]).norm()));
        TransportPlan {
            entries,
            cost,
            source_residual,
            target_residual,
        }
    }
}

/// Largest-remainder rounding of `w · units` to integers summing to `units`.
fn quantize(weights: &[f64], units: i64) -> Vec<i64> {
    let scaled: Vec<f64> = weights.iter().map(|w| w * units as f64).collect();
    let mut q: Vec<i64> = scaled.iter().map(|s| s.floor() as i64).collect();
    let short = units - q.iter().sum::<i64>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - q[a] as f64;
        let rb = scaled[b] - q[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    if short >= 0 {
        for k in 0..short as usize {
            q[order[k % order.len()]] += 1;
        }
    } else {
        for k in 0..(-short) as usize {
            let i = order[order.len() - 1 - k % order.len()];
            q[i] -= 1;
        }
    }
    q
}

fn check_cap(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cap: usize) -> Result<()> {
    if mu.len() > cap || nu.len() > cap {
        return Err(Error::Capability(format!(
            "support sizes {} x {} exceed the cap {cap}",
            mu.len(),
            nu.len()
        )));
    }
    Ok(())
}

/// Exact `W1` for the Euclidean ground cost by network simplex.
///
/// Weights are rounded to multiples of `2⁻⁵⁰` before solving; the returned
/// plan and cost use the rounded masses.
pub fn w1_exact(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(f64, TransportPlan)> {
    check_cap(mu, nu, W1_CAP)?;
    let units = MASS_UNITS as i64;
    let a = quantize(mu.weights(), units);
    let b = quantize(nu.weights(), units);
    let sol = simplex::solve(mu.atoms(), nu.atoms(), &a, &b)?;
    let entries = sol
        .arcs
        .into_iter()
        .map(|(i, j, f)| (i, j, f as f64 / MASS_UNITS))
        .collect();
    let plan = TransportPlan::from_entries(mu, nu, entries);
    Ok((plan.cost, plan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_measure(rng: &mut ChaCha8Rng, n: usize, uniform: bool) -> DiscreteMeasure {
        let atoms: Vec<Vec3> = (0..n).map(|_| Vec3::new(rng.gen(), rng.gen(), rng.gen())).collect();
        if uniform {
            DiscreteMeasure::empirical(&atoms).unwrap()
        } else {
            let w = (0..n).map(|_| rng.gen::<f64>() + 0.05).collect();
            DiscreteMeasure::normalized(atoms, w).unwrap()
        }
    }

    #[test]
    fn diracs() {
        let a = DiscreteMeasure::dirac(Vec3::new(1.0, 2.0, 3.0));
        let b = DiscreteMeasure::dirac(Vec3::new(1.0, 2.0, 5.0));
        let (d, plan) = w1_exact(&a, &b).unwrap();
        assert_eq!(d, 2.0);
        assert_eq!(plan.entries, vec![(0, 0, 1.0)]);
    }

    #[test]
    fn split_mass() {
        let a = DiscreteMeasure::empirical(&[Vec3::zeros(), Vec3::new(2.0, 0.0, 0.0)]).unwrap();
        let b = DiscreteMeasure::dirac(Vec3::x());
        assert_eq!(w1_exact(&a, &b).unwrap().0, 1.0);
    }

    #[test]
    fn validation() {
        assert!(DiscreteMeasure::new(vec![Vec3::zeros()], vec![0.9]).is_err());
        assert!(DiscreteMeasure::new(vec![Vec3::zeros(), Vec3::x()], vec![1.0, 0.0]).is_err());
        assert!(DiscreteMeasure::new(vec![], vec![]).is_err());
        let m = DiscreteMeasure::normalized(vec![Vec3::zeros(), Vec3::x()], vec![3.0, 1.0]).unwrap();
        assert_eq!(m.weights(), &[0.75, 0.25]);
    }

    #[test]
    fn quantization_is_exact() {
        let q = quantize(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 10);
        assert_eq!(q, vec![4, 3, 3]);
        let q = quantize(&[0.7, 0.3], 1 << 50);
        assert_eq!(q.iter().sum::<i64>(), 1 << 50);
    }

    #[test]
    fn plan_marginals_and_cost() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (n1, n2) in [(1, 5), (7, 3), (20, 30), (60, 45)] {
            let a = random_measure(&mut rng, n1, false);
            let b = random_measure(&mut rng, n2, false);
            let (d, plan) = w1_exact(&a, &b).unwrap();
            assert!(plan.source_residual < 1e-12 && plan.target_residual < 1e-12);
            assert!(plan.entries.iter().all(|e| e.2 > 0.0));
            assert!(plan.entries.len() < n1 + n2);
            assert_eq!(d, plan.cost);
        }
    }

    #[test]
    fn dual_certificate() {
        // Optimality check by an independent dense LP-free bound: no pair of
        // plan entries can be uncrossed to lower the cost.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_measure(&mut rng, 25, false);
        let b = random_measure(&mut rng, 25, false);
        let (_, plan) = w1_exact(&a, &b).unwrap();
        let c = |i: usize, j: usize| (a.atoms()[i] - b.atoms()[j]).norm();
        for &(i, j, _) in &plan.entries {
            for &(k, l, _) in &plan.entries {
                assert!(c(i, j) + c(k, l) <= c(i, l) + c(k, j) + 1e-12);
            }
        }
    }

    #[test]
    fn metric_axioms() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let a = random_measure(&mut rng, 6, false);
            let b = random_measure(&mut rng, 9, false);
            let c = random_measure(&mut rng, 4, false);
            let ab = w1_exact(&a, &b).unwrap().0;
            let ba = w1_exact(&b, &a).unwrap().0;
            let bc = w1_exact(&b, &c).unwrap().0;
            let ac = w1_exact(&a, &c).unwrap().0;
            assert!((ab - ba).abs() < 1e-12);
            assert!(ac <= ab + bc + 1e-12);
            assert!(w1_exact(&a, &a).unwrap().0 < 1e-15);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let pts: Vec<Vec3> = (0..W1_CAP + 1).map(|k| Vec3::new(k as f64, 0.0, 0.0)).collect();
        let a = DiscreteMeasure::empirical(&pts).unwrap();
        let b = DiscreteMeasure::dirac(Vec3::zeros());
        assert!(matches!(w1_exact(&a, &b), Err(Error::Capability(_))));
    }
}
