use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::linalg::{linf, Vec3};
use crate::par;

use super::ParticleCloud;

/// Largest cloud accepted by the exact box sweep.
pub const EXACT_M_CAP: usize = 512;

/// `max_i #{j : |x_i − x_j|_∞ ≤ λ}`, counting `j = i`.
pub fn concentration_l(cloud: &ParticleCloud, lambda: f64) -> usize {
    let x = cloud.positions();
    par::map_range(x.len(), |i| x.iter().filter(|p| linf(&(*p - x[i])) <= lambda).count())
        .into_iter()
        .max()
        .unwrap_or(0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MConcentration {
    pub lower: usize,
    pub upper: usize,
    pub exact: Option<usize>,
}

pub fn concentration_m(cloud: &ParticleCloud, lambda: f64, exact: bool) -> Result<MConcentration> {
    concentration_m_with_cap(cloud, lambda, exact, EXACT_M_CAP)
}

/// Bounds `L ≤ M ≤ 8L`, plus the exact supremum over box centers on request.
///
/// A maximal closed box can be slid along each axis until its lower face meets
/// a contained particle, so centers `x_i + λ` per axis suffice. Boxes centred
/// on particles are included as well.
pub fn concentration_m_with_cap(
    cloud: &ParticleCloud,
    lambda: f64,
    exact: bool,
    cap: usize,
) -> Result<MConcentration> {
    if !(lambda > 0.0) {
        return Err(domain("lambda must be positive"));
    }
    let l = concentration_l(cloud, lambda);
    let exact = if exact {
        if cloud.len() > cap {
            return Err(Error::Capability(format!(
                "exact concentration sweep limited to N <= {cap}, got {}",
                cloud.len()
            )));
        }
        Some(exact_sweep(cloud.positions(), lambda).max(l))
    } else {
        None
    };
    Ok(MConcentration {
        lower: l,
        upper: 8 * l,
        exact,
    })
}

fn exact_sweep(x: &[Vec3], lambda: f64) -> usize {
    let w = 2.0 * lambda;
    let counts = par::map_range(x.len(), |i| {
        let ax = x[i].x;
        let slab: Vec<&Vec3> = x.iter().filter(|p| p.x >= ax && p.x - ax <= w).collect();
        let mut best = 0;
        for q in &slab {
            let ay = q.y;
            let mut zs: Vec<f64> = slab
                .iter()
                .filter(|p| p.y >= ay && p.y - ay <= w)
                .map(|p| p.z)
                .collect();
            if zs.len() <= best {
                continue;
            }
            zs.sort_by(f64::total_cmp);
            let mut lo = 0;
            for hi in 0..zs.len() {
                while zs[hi] - zs[lo] > w {
                    lo += 1;
                }
                best = best.max(hi - lo + 1);
            }
        }
        best
    });
    counts.into_iter().max().unwrap_or(0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScaledConcentration {
    pub l_alpha_beta: usize,
    pub l_beta: usize,
    pub bound: usize,
    pub holds: bool,
}

/// `L_{αβ} ≤ 8⌈α⌉³ L_β`, where `L_s` uses the box half-width `s λ`.
pub fn scaled_concentration_check(
    cloud: &ParticleCloud,
    lambda: f64,
    alpha: f64,
    beta: f64,
) -> Result<ScaledConcentration> {
    if !(lambda > 0.0 && alpha > 1.0 && beta > 0.0) {
        return Err(domain("need lambda > 0, alpha > 1, beta > 0"));
    }
    let l_alpha_beta = concentration_l(cloud, alpha * beta * lambda);
    let l_beta = concentration_l(cloud, beta * lambda);
    let c = alpha.ceil() as usize;
    let bound = 8 * c * c * c * l_beta;
    Ok(ScaledConcentration {
        l_alpha_beta,
        l_beta,
        bound,
        holds: l_alpha_beta <= bound,
    })
}
