use serde::{Deserialize, Serialize};

use crate::cloud::{choose_lambda, concentration_m, min_distance, LambdaPolicy, ParticleCloud};
use crate::error::{domain, Result};
use crate::par;
use crate::reflections::pairwise_lipschitz_report;

use super::Trajectory;

pub const SPACING_RATIO_LIMIT: f64 = 0.5;
/// `8⁴`.
pub const M_RATIO_LIMIT: f64 = 4096.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CertificateOptions {
    pub lambda_policy: LambdaPolicy,
    /// Exact box sweep for `M` instead of the bound `8L`.
    pub exact_m: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Theorem1Certificate {
    pub lambda: f64,
    pub times: Vec<f64>,
    /// `d_min(t) / d_min(0)` per snapshot.
    pub spacing_ratios: Vec<f64>,
    /// `M(t) / M(0)` per snapshot.
    pub concentration_ratios: Vec<f64>,
    pub min_spacing_ratio: f64,
    pub max_concentration_ratio: f64,
    pub spacing_ok: bool,
    pub concentration_ok: bool,
    /// `max_t max_{i≠j} |V_i − V_j| / d_ij`.
    pub lipschitz_constant: f64,
    /// `ln 2 / Ĉ`.
    pub horizon: f64,
    /// `min_{t,i<j} d_ij(t) / (d_ij(0) e^{−Ĉt})`.
    pub pair_bound_margin: f64,
    pub pair_bound_ok: bool,
}

impl Theorem1Certificate {
    pub fn passed(&self) -> bool {
        self.spacing_ok && self.concentration_ok && self.pair_bound_ok
    }
}

fn m_value(cloud: &ParticleCloud, lambda: f64, exact: bool) -> Result<f64> {
    let m = concentration_m(cloud, lambda, exact)?;
    Ok(m.exact.unwrap_or(m.upper) as f64)
}

/// Spacing and concentration ratios against the initial snapshot, with `λ`
/// fixed from the initial cloud, and the per-pair bound
/// `d_ij(t) ≥ d_ij(0) e^{−Ĉt}` for the Lipschitz constant `Ĉ` measured on the
/// snapshots.
pub fn theorem1_certificate(traj: &Trajectory, opts: &CertificateOptions) -> Result<Theorem1Certificate> {
    let first = traj
        .snapshots
        .first()
        .ok_or_else(|| domain("certificate needs a non-empty trajectory"))?;
    let c0 = &first.cloud;
    let n = c0.len();
    let lambda = if n >= 2 {
        choose_lambda(c0, opts.lambda_policy)?.lambda
    } else {
        traj.lambda
    };
    let t0 = first.time;
    let d0 = if n >= 2 { min_distance(c0)?.distance } else { f64::INFINITY };
    let m0 = m_value(c0, lambda, opts.exact_m)?;
    let mut times = Vec::with_capacity(traj.snapshots.len());
    let mut spacing = Vec::with_capacity(traj.snapshots.len());
    let mut conc = Vec::with_capacity(traj.snapshots.len());
    let mut lip: f64 = 0.0;
    for s in &traj.snapshots {
        times.push(s.time);
        if n >= 2 {
            spacing.push(min_distance(&s.cloud)?.distance / d0);
            lip = lip.max(pairwise_lipschitz_report(&s.cloud, &s.kinematics)?.max_ratio);
        } else {
            spacing.push(1.0);
        }
        conc.push(m_value(&s.cloud, lambda, opts.exact_m)? / m0);
    }
    let x0 = c0.positions();
    let margins = par::map_range(n.saturating_sub(1), |i| {
        let mut worst = f64::INFINITY;
        for s in &traj.snapshots {
            let decay = (-lip * (s.time - t0)).exp();
            let x = s.cloud.positions();
            for j in (i + 1)..n {
                let q = (x[i] - x[j]).norm() / ((x0[i] - x0[j]).norm() * decay);
                worst = worst.min(q);
            }
        }
        worst
    });
    let pair_bound_margin = margins.into_iter().fold(f64::INFINITY, f64::min);
    let min_spacing_ratio = spacing.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_concentration_ratio = conc.iter().cloned().fold(0.0, f64::max);
    Ok(Theorem1Certificate {
        lambda,
        spacing_ok: min_spacing_ratio >= SPACING_RATIO_LIMIT,
        concentration_ok: max_concentration_ratio <= M_RATIO_LIMIT,
        min_spacing_ratio,
        max_concentration_ratio,
        times,
        spacing_ratios: spacing,
        concentration_ratios: conc,
        lipschitz_constant: lip,
        horizon: if lip > 0.0 { std::f64::consts::LN_2 / lip } else { f64::INFINITY },
        pair_bound_ok: pair_bound_margin >= 1.0 - 1e-12,
        pair_bound_margin,
    })
}
