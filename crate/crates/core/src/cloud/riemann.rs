use serde::Serialize;

use crate::error::{domain, Result};
use crate::linalg::{compensated_sum, linf, Vec3};
use crate::par;

use super::{min_distance, ParticleCloud};

pub const DEFAULT_RIEMANN_CONSTANT: f64 = 16.0;

/// `(1/N) Σ_i 1{|x − x_i|_∞ ≤ λ/3} / (2λ/3)³`.
pub fn smoothed_density_eval(cloud: &ParticleCloud, lambda: f64, x: &Vec3) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(domain("lambda must be positive"));
    }
    let half = lambda / 3.0;
    let vol = (2.0 * half).powi(3);
    let hits = cloud.positions().iter().filter(|p| linf(&(x - *p)) <= half).count();
    Ok(hits as f64 / (cloud.len() as f64 * vol))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RiemannReport {
    pub k: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    pub holds: bool,
    /// Smallest constant for which the bound would hold.
    pub minimal_constant: f64,
}

/// Compares `max_i (1/N) Σ_{j≠i} d_ij^{-k}` with
/// `C (M̄ λ³/d_min^k + M̄^{k/3})` for `k ∈ [0, 2]`, or
/// `C M̄ (λ³/d_min³ + |log(M̄^{1/3} λ)| + 1)` for `k = 3`.
pub fn riemann_sum_check(
    cloud: &ParticleCloud,
    k: f64,
    lambda: f64,
    mbar: f64,
    constant: f64,
) -> Result<RiemannReport> {
    if !((0.0..=2.0).contains(&k) || k == 3.0) {
        return Err(domain(format!("exponent k = {k} outside [0, 2] ∪ {{3}}")));
    }
    if !(lambda > 0.0 && mbar > 0.0 && constant > 0.0) {
        return Err(domain("lambda, mbar and the constant must be positive"));
    }
    let d_min = min_distance(cloud)?.distance;
    let x = cloud.positions();
    let n = x.len();
    let rows = par::map_range(n, |i| {
        compensated_sum((0..n).filter(|&j| j != i).map(|j| (x[i] - x[j]).norm().powf(-k)))
            / n as f64
    });
    let lhs = rows.into_iter().fold(0.0, f64::max);
    let l3 = lambda.powi(3);
    let base = if k == 3.0 {
        mbar * (l3 / d_min.powi(3) + (mbar.cbrt() * lambda).ln().abs() + 1.0)
    } else {
        mbar * l3 / d_min.powf(k) + mbar.powf(k / 3.0)
    };
    let rhs = constant * base;
    Ok(RiemannReport {
        k,
        lhs,
        rhs,
        constant,
        holds: lhs <= rhs,
        minimal_constant: lhs / base,
    })
}
