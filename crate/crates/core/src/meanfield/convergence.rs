use serde::Serialize;

use crate::error::{domain, Result};
use crate::linalg::Vec3;

use super::{evolve, init_blobs, MeanfieldParams, Rho0Spec};

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceStudy {
    pub m_per_axis: Vec<usize>,
    pub deltas: Vec<f64>,
    pub blob_counts: Vec<usize>,
    /// Final tracer positions per level.
    pub finals: Vec<Vec<Vec3>>,
    /// `max_tracer |X_k − X_{k+1}|` between successive levels.
    pub differences: Vec<f64>,
    /// `log2(d_k / d_{k+1})`.
    pub orders: Vec<f64>,
}

impl ConvergenceStudy {
    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Runs the same problem on successive grids with `δ = delta_per_h · h` and
/// compares where passive tracers end up.
pub fn self_convergence(
    spec: &Rho0Spec,
    params: &MeanfieldParams,
    horizon: f64,
    dt: f64,
    levels: &[usize],
    delta_per_h: f64,
    tracers: &[Vec3],
) -> Result<ConvergenceStudy> {
    if levels.len() < 2 || tracers.is_empty() {
        return Err(domain("convergence study needs two levels and at least one tracer"));
    }
    if !(delta_per_h > 0.0) {
        return Err(domain("delta_per_h must be positive"));
    }
    let mut study = ConvergenceStudy {
        m_per_axis: levels.to_vec(),
        deltas: Vec::new(),
        blob_counts: Vec::new(),
        finals: Vec::new(),
        differences: Vec::new(),
        orders: Vec::new(),
    };
    for &m in levels {
        let delta = delta_per_h * 2.0 * spec.box_half_width() / m as f64;
        let d = init_blobs(spec, m, delta)?;
        let run = evolve(&d, params, horizon, dt, usize::MAX, tracers)?;
        study.deltas.push(delta);
        study.blob_counts.push(d.len());
        study.finals.push(run.tracers.last().cloned().unwrap_or_default());
    }
    for w in study.finals.windows(2) {
        let diff = w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        study.differences.push(diff);
    }
    study.orders = study.differences.windows(2).map(|d| (d[0] / d[1]).log2()).collect();
    Ok(study)
}
