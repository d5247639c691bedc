use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::ot::w1_exact;

use super::diagnostics::{x_beta_norm, SampleBox};
use super::{evolve, init_blobs, MeanfieldParams, Rho0Spec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityOptions {
    pub horizon: f64,
    pub dt: f64,
    pub stride: usize,
    pub m_per_axis: usize,
    /// Blob core size; twice the coarser grid spacing when unset.
    pub delta: Option<f64>,
    /// Weight exponent of the norm multiplying the fitted rate.
    pub beta: f64,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        StabilityOptions {
            horizon: 1.0,
            dt: 0.05,
            stride: 4,
            m_per_axis: 10,
            delta: None,
            beta: 3.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub times: Vec<f64>,
    pub w1: Vec<f64>,
    /// Least-squares slope of `ln W1` against `t`; zero when `W1(0) = 0`.
    pub log_slope: f64,
    pub fit_residual: f64,
    /// Smallest `c` with `W1(t) ≤ W1(0) e^{ct}` at every snapshot.
    pub envelope_rate: f64,
    /// `max(‖ρ0^A‖, ‖ρ0^B‖)` in the weighted sup norm.
    pub max_norm: f64,
    /// `envelope_rate / max_norm`.
    pub fitted_constant: f64,
    pub bound_holds: bool,
}

/// Least-squares line `y ≈ a + b x`; returns `(a, b, rms residual)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let res = (x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum::<f64>() / n).sqrt();
    (a, b, res)
}

/// Co-evolves two blob densities and tracks `W1` between them.
pub fn stability_compare(
    spec_a: &Rho0Spec,
    spec_b: &Rho0Spec,
    params: &MeanfieldParams,
    opts: &StabilityOptions,
) -> Result<StabilityReport> {
    if opts.m_per_axis < 4 {
        return Err(domain("stability run needs at least 4 cells per axis"));
    }
    let delta = opts.delta.unwrap_or_else(|| {
        super::default_delta(spec_a, opts.m_per_axis).max(super::default_delta(spec_b, opts.m_per_axis))
    });
    let a0 = init_blobs(spec_a, opts.m_per_axis, delta)?;
    let b0 = init_blobs(spec_b, opts.m_per_axis, delta)?;
    let ra = evolve(&a0, params, opts.horizon, opts.dt, opts.stride, &[])?;
    let rb = evolve(&b0, params, opts.horizon, opts.dt, opts.stride, &[])?;
    let mut times = Vec::new();
    let mut w1 = Vec::new();
    for (a, b) in ra.snapshots.iter().zip(&rb.snapshots) {
        times.push(a.time());
        w1.push(w1_exact(&a.to_measure()?, &b.to_measure()?)?.0);
    }
    let sample = SampleBox::default();
    let max_norm = x_beta_norm(spec_a, opts.beta, &sample)?
        .value()
        .max(x_beta_norm(spec_b, opts.beta, &sample)?.value());
    let w0 = w1[0];
    let (log_slope, fit_residual, envelope_rate) = if w0 > 0.0 && w1.iter().all(|w| *w > 0.0) {
        let logs: Vec<f64> = w1.iter().map(|w| w.ln()).collect();
        let (_, slope, res) = linear_fit(&times, &logs);
        let t0 = times[0];
        let env = times
            .iter()
            .zip(&logs)
            .skip(1)
            .filter(|(t, _)| **t > t0)
            .map(|(t, l)| (l - logs[0]) / (t - t0))
            .fold(0.0, f64::max);
        (slope, res, env)
    } else {
        (0.0, 0.0, if w1.iter().all(|w| *w == 0.0) { 0.0 } else { f64::INFINITY })
    };
    Ok(StabilityReport {
        fitted_constant: envelope_rate / max_norm,
        bound_holds: envelope_rate.is_finite(),
        times,
        w1,
        log_slope,
        fit_residual,
        envelope_rate,
        max_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Vec3;
    use crate::reflections::GravitySettings;

    fn bump(c: Vec3) -> Rho0Spec {
        Rho0Spec::Bump { center: c, radius: 1.0 }
    }

    fn opts() -> StabilityOptions {
        StabilityOptions {
            horizon: 0.5,
            dt: 0.1,
            stride: 1,
            m_per_axis: 10,
            delta: Some(0.6),
            beta: 3.0,
        }
    }

    #[test]
    fn identical_specs_stay_at_zero() {
        let p = MeanfieldParams::new(1.0, GravitySettings::downward()).unwrap();
        let r = stability_compare(&bump(Vec3::zeros()), &bump(Vec3::zeros()), &p, &opts()).unwrap();
        assert!(r.w1.iter().all(|w| *w == 0.0), "{:?}", r.w1);
        assert_eq!(r.envelope_rate, 0.0);
        assert!(r.bound_holds);
    }

    #[test]
    fn translated_copies_without_coupling() {
        let p = MeanfieldParams::new(0.0, GravitySettings::downward()).unwrap();
        let shift = Vec3::new(0.3, 0.0, 0.0);
        let r = stability_compare(&bump(Vec3::zeros()), &bump(shift), &p, &opts()).unwrap();
        for w in &r.w1 {
            assert!((w - 0.3).abs() < 1e-12, "{w}");
        }
        assert!(r.log_slope.abs() < 1e-10);
    }

    #[test]
    fn coupled_growth_is_finite() {
        let p = MeanfieldParams::new(1.0, GravitySettings::downward()).unwrap();
        let r = stability_compare(&bump(Vec3::zeros()), &bump(Vec3::new(0.1, 0.0, 0.05)), &p, &opts()).unwrap();
        assert!(r.bound_holds && r.fitted_constant.is_finite());
        assert!(r.max_norm > 0.0);
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|t| 2.0 - 0.5 * t).collect();
        let (a, b, r) = linear_fit(&x, &y);
        assert!((a - 2.0).abs() < 1e-14 && (b + 0.5).abs() < 1e-14 && r < 1e-14);
    }
}
