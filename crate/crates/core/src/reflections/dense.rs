use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::cloud::ParticleCloud;
use crate::error::{Error, Result};
use crate::kernels::{combined_exterior, stokeslet_exterior};
use crate::linalg::{TraceFree, Vec3};
use crate::par;

use super::interaction::{BodyKinematics, GravitySettings, StageVector};
use super::neumann::StressletClosure;

/// Largest cloud accepted by the dense solvers.
pub const DENSE_CAP: usize = 512;

/// Pivot ratio above which an LU factorization is reported as singular.
const SINGULAR_CONDITION: f64 = 1e14;

/// Antisymmetric functionals on the trace-free components.
const SKEW_ROWS: [[(usize, f64); 2]; 3] = [[(1, 0.5), (3, -0.5)], [(2, 0.5), (6, -0.5)], [(5, 0.5), (7, -0.5)]];
/// Symmetric functionals on the trace-free components.
const SYM_ROWS: [[(usize, f64); 2]; 5] = [
    [(0, 1.0), (0, 0.0)],
    [(4, 1.0), (4, 0.0)],
    [(1, 0.5), (3, 0.5)],
    [(2, 0.5), (6, 0.5)],
    [(5, 0.5), (7, 0.5)],
];

#[derive(Clone, Debug, Serialize)]
pub struct DenseSolution {
    pub kinematics: BodyKinematics,
    /// Solved far-field target `X^∞`.
    pub far_field: StageVector,
    /// `X^(0) = (I − T) X^∞`.
    pub stage0: StageVector,
    /// Ratio of the largest to the smallest LU pivot.
    pub condition: f64,
}

fn check_size(cloud: &ParticleCloud) -> Result<()> {
    if cloud.len() > DENSE_CAP {
        return Err(Error::Capability(format!(
            "dense solve limited to N <= {DENSE_CAP}, got {}",
            cloud.len()
        )));
    }
    cloud.check_non_overlap()
}

/// Matrix of the interaction map on the flat `[V_i, G_i]` layout.
pub fn interaction_matrix(cloud: &ParticleCloud) -> Result<DMatrix<f64>> {
    check_size(cloud)?;
    let x = cloud.positions();
    let n = x.len();
    let radius = cloud.radius();
    let basis: Vec<_> = (0..8).map(|c| TraceFree::basis(c).to_matrix()).collect();
    let rows = par::map_range(n, |i| {
        let mut block = vec![0.0; 11 * 11 * n];
        for j in (0..n).filter(|&j| j != i) {
            let y = x[i] - x[j];
            let r = y.norm();
            for c in 0..11 {
                let (u, g) = if c < 3 {
                    let mut e = Vec3::zeros();
                    e[c] = 1.0;
                    stokeslet_exterior(&y, r, radius, &e)
                } else {
                    let (u, g, _) = combined_exterior(&y, r, radius, &basis[c - 3]);
                    (u, g)
                };
                let gt = TraceFree::from_matrix(&g);
                let col = 11 * j + c;
                for a in 0..3 {
                    block[a * 11 * n + col] = -u[a];
                }
                for a in 0..8 {
                    block[(3 + a) * 11 * n + col] = -gt.0[a];
                }
            }
        }
        block
    });
    let m = 11 * n;
    let mut t = DMatrix::zeros(m, m);
    for (i, block) in rows.iter().enumerate() {
        for a in 0..11 {
            for col in 0..m {
                t[(11 * i + a, col)] = block[a * m + col];
            }
        }
    }
    Ok(t)
}

fn lu_solve(a: DMatrix<f64>, b: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let lu = a.lu();
    let u = lu.u();
    let diag: Vec<f64> = u.diagonal().iter().map(|d| d.abs()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !condition.is_finite() || condition > SINGULAR_CONDITION {
        return Err(Error::Numerical {
            message: "dense interaction system is singular".into(),
            condition,
        });
    }
    let x = lu.solve(b).ok_or_else(|| Error::Numerical {
        message: "LU back-substitution failed".into(),
        condition,
    })?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical {
            message: "non-finite dense solution".into(),
            condition,
        });
    }
    Ok((x, condition))
}

/// Limit `Y = Σ_p T^p x0` of the reflection series, from `(I − T) Y = x0`.
pub fn dense_series_limit(cloud: &ParticleCloud, x0: &StageVector) -> Result<(StageVector, f64)> {
    if x0.len() != cloud.len() {
        return Err(crate::error::domain("stage vector size does not match the cloud"));
    }
    let t = interaction_matrix(cloud)?;
    let m = t.nrows();
    let a = DMatrix::identity(m, m) - t;
    let (y, cond) = lu_solve(a, &DVector::from_vec(x0.to_flat()))?;
    Ok((StageVector::from_flat(y.as_slice())?, cond))
}

pub fn dense_mobility_solve(cloud: &ParticleCloud, gravity: &GravitySettings) -> Result<BodyKinematics> {
    Ok(dense_mobility_solve_with(cloud, gravity, StressletClosure::Dropped)?.kinematics)
}

/// Solves for `X^∞` with `V^∞ = κg`, antisymmetric part of `G^∞` zero, and the
/// closure condition on the symmetric part, then returns `X^(0) = (I − T) X^∞`.
///
/// With [`StressletClosure::Dropped`] the condition is `sym G^∞ = 0`; with
/// [`StressletClosure::Rigid`] it is `sym G^(0) = 0`.
pub fn dense_mobility_solve_with(
    cloud: &ParticleCloud,
    gravity: &GravitySettings,
    closure: StressletClosure,
) -> Result<DenseSolution> {
    let t = interaction_matrix(cloud)?;
    let n = cloud.len();
    let m = 11 * n;
    let a = DMatrix::identity(m, m) - &t;
    let mut sys = DMatrix::zeros(m, m);
    let mut rhs = DVector::zeros(m);
    for i in 0..n {
        let b = 11 * i;
        for a_ in 0..3 {
            sys[(b + a_, b + a_)] = 1.0;
            rhs[b + a_] = gravity.settling_velocity[a_];
        }
        for (k, row) in SKEW_ROWS.iter().enumerate() {
            for &(c, w) in row {
                sys[(b + 3 + k, b + 3 + c)] += w;
            }
        }
        for (k, row) in SYM_ROWS.iter().enumerate() {
            let r = b + 6 + k;
            match closure {
                StressletClosure::Dropped => {
                    for &(c, w) in row {
                        sys[(r, b + 3 + c)] += w;
                    }
                }
                StressletClosure::Rigid => {
                    for &(c, w) in row {
                        if w != 0.0 {
                            let src = a.row(b + 3 + c) * w;
                            let mut dst = sys.row_mut(r);
                            dst += src;
                        }
                    }
                }
            }
        }
    }
    let (z, condition) = lu_solve(sys, &rhs)?;
    let x0 = &a * &z;
    let far_field = StageVector::from_flat(z.as_slice())?;
    let stage0 = StageVector::from_flat(x0.as_slice())?;
    Ok(DenseSolution {
        kinematics: stage0.kinematics(),
        far_field,
        stage0,
        condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reflections::{apply_interaction_map, neumann_velocity_solve, NeumannOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(n: usize, seed: u64, r0: f64) -> ParticleCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p: Vec<Vec3> = Vec::new();
        while p.len() < n {
            let q = Vec3::new(rng.gen(), rng.gen(), rng.gen());
            if p.iter().all(|x| (x - q).norm() > 0.08) {
                p.push(q);
            }
        }
        ParticleCloud::new(p, r0, 0.0).unwrap()
    }

    #[test]
    fn matrix_matches_operator() {
        let c = random_cloud(6, 1, 0.05);
        let t = interaction_matrix(&c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let flat: Vec<f64> = (0..66).map(|_| rng.gen::<f64>() - 0.5).collect();
        let s = StageVector::from_flat(&flat).unwrap();
        let direct = apply_interaction_map(&c, &s).unwrap().to_flat();
        let via = &t * DVector::from_vec(flat);
        for (a, b) in direct.iter().zip(via.iter()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn single_particle() {
        let c = ParticleCloud::new(vec![Vec3::zeros()], 0.3, 0.0).unwrap();
        let g = GravitySettings::new(Vec3::new(0.0, 0.5, -1.0));
        let k = dense_mobility_solve(&c, &g).unwrap();
        assert_eq!(k.velocities[0], g.settling_velocity);
    }

    #[test]
    fn dropped_closure_agrees_with_neumann() {
        let c = random_cloud(20, 3, 0.02);
        let g = GravitySettings::downward();
        let d = dense_mobility_solve(&c, &g).unwrap();
        let (k, _) = neumann_velocity_solve(&c, &g, &NeumannOptions::default()).unwrap();
        assert!(d.max_velocity_difference(&k) < 1e-14);
    }

    #[test]
    fn rigid_closure_agrees_with_neumann() {
        let c = random_cloud(20, 4, 0.02);
        let g = GravitySettings::downward();
        let d = dense_mobility_solve_with(&c, &g, StressletClosure::Rigid).unwrap();
        let opts = NeumannOptions { closure: StressletClosure::Rigid, ..Default::default() };
        let (k, _) = neumann_velocity_solve(&c, &g, &opts).unwrap();
        assert!(d.kinematics.max_velocity_difference(&k) < 1e-12);
        for g in &d.stage0.g {
            assert!(g.symmetric_part().norm() < 1e-12);
        }
    }

    #[test]
    fn series_limit_inverts_the_map() {
        let c = random_cloud(10, 5, 0.03);
        let x0 = StageVector::uniform_velocity(10, Vec3::new(0.0, 0.0, -1.0));
        let (y, cond) = dense_series_limit(&c, &x0).unwrap();
        assert!(cond < 10.0);
        let back = y.sub(&apply_interaction_map(&c, &y).unwrap());
        assert!(back.sub(&x0).eta(c.radius()) < 1e-13);
    }

    #[test]
    fn permutation_invariance() {
        let c = random_cloud(8, 6, 0.03);
        let g = GravitySettings::downward();
        let a = dense_mobility_solve_with(&c, &g, StressletClosure::Rigid).unwrap();
        let perm = [3, 7, 0, 5, 1, 6, 2, 4];
        let p: Vec<Vec3> = perm.iter().map(|&k| c.positions()[k]).collect();
        let c2 = c.with_positions(p, 0.0).unwrap();
        let b = dense_mobility_solve_with(&c2, &g, StressletClosure::Rigid).unwrap();
        for (slot, &k) in perm.iter().enumerate() {
            let d = (b.kinematics.velocities[slot] - a.kinematics.velocities[k]).norm();
            assert!(d < 1e-13);
        }
    }

    #[test]
    fn over_cap_is_a_capability_error() {
        let p: Vec<Vec3> = (0..513).map(|k| Vec3::new(k as f64, 0.0, 0.0)).collect();
        let c = ParticleCloud::new(p, 0.01, 0.0).unwrap();
        assert!(matches!(
            dense_mobility_solve(&c, &GravitySettings::downward()),
            Err(Error::Capability(_))
        ));
    }
}
