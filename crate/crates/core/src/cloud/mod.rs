//! Particle clouds and their geometric diagnostics: minimal distance,
//! box concentrations, admissibility budgets and the Riemann-sum bounds.

mod riemann;
mod concentration;
mod distance;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linalg::Vec3;

pub use riemann::{riemann_sum_check, smoothed_density_eval, RiemannReport, DEFAULT_RIEMANN_CONSTANT};
pub use concentration::{
    concentration_l, concentration_m, concentration_m_with_cap, scaled_concentration_check,
    MConcentration, ScaledConcentration, EXACT_M_CAP,
};
pub use distance::{min_distance, min_distance_bruteforce, min_distance_grid, PairDistance, BRUTE_FORCE_LIMIT};

/// `N` identical spheres of radius `r0 / N` at one instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleCloud {
    r0: f64,
    positions: Vec<Vec3>,
    time: f64,
}

impl ParticleCloud {
    pub fn new(positions: Vec<Vec3>, r0: f64, time: f64) -> Result<Self> {
        if positions.is_empty() {
            return Err(domain("a cloud needs at least one particle"));
        }
        if !(r0 > 0.0) || !r0.is_finite() {
            return Err(domain("radius scale r0 must be positive"));
        }
        if positions.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(domain("positions must be finite"));
        }
        Ok(ParticleCloud {
            r0,
            positions,
            time,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Sphere radius `R = r0 / N`.
    pub fn radius(&self) -> f64 {
        self.r0 / self.len() as f64
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn with_positions(&self, positions: Vec<Vec3>, time: f64) -> Result<Self> {
        if positions.len() != self.len() {
            return Err(domain("particle count cannot change"));
        }
        ParticleCloud::new(positions, self.r0, time)
    }

    /// Errors with the closest pair when two spheres touch or overlap.
    pub fn check_non_overlap(&self) -> Result<()> {
        if self.len() < 2 {
            return Ok(());
        }
        let pd = min_distance(self)?;
        let contact = 2.0 * self.radius();
        if pd.distance <= contact {
            return Err(Error::Overlap {
                i: pd.i,
                j: pd.j,
                distance: pd.distance,
                contact,
            });
        }
        Ok(())
    }
}

/// Concentration and spacing summary at a given box half-width `λ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CloudDiagnostics {
    pub n: usize,
    pub d_min: f64,
    pub lambda: f64,
    pub l_concentration: usize,
    pub m_lower: usize,
    pub m_upper: usize,
    pub m_exact: Option<usize>,
    /// `M_upper / (N λ³)`.
    pub ratio_mbar: f64,
    /// `λ³ / d_min²`.
    pub ratio_e: f64,
    pub compatibility_ok: bool,
}

pub fn diagnostics(cloud: &ParticleCloud, lambda: f64, exact_m: bool) -> Result<CloudDiagnostics> {
    if !(lambda > 0.0) {
        return Err(domain("lambda must be positive"));
    }
    let n = cloud.len();
    let d_min = if n >= 2 { min_distance(cloud)?.distance } else { f64::INFINITY };
    let m = concentration_m(cloud, lambda, exact_m)?;
    let l3 = lambda.powi(3);
    Ok(CloudDiagnostics {
        n,
        d_min,
        lambda,
        l_concentration: m.lower,
        m_lower: m.lower,
        m_upper: m.upper,
        m_exact: m.exact,
        ratio_mbar: m.upper as f64 / (n as f64 * l3),
        ratio_e: if d_min.is_finite() { l3 / (d_min * d_min) } else { 0.0 },
        compatibility_ok: lambda >= d_min / 2.0,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AdmissibilityReport {
    pub diagnostics: CloudDiagnostics,
    pub mbar_budget: f64,
    pub e_budget: f64,
    pub holds_bound_concentration: bool,
    pub holds_hyp1: bool,
    pub holds_compatibility: bool,
    /// `(E M̄)^{-1/2} N^{-1/2}`, the spacing floor implied by the two budgets.
    pub implied_d_min_floor: f64,
    /// `M̄^{1/3} r0`.
    pub smallness_product: f64,
}

impl AdmissibilityReport {
    pub fn admissible(&self) -> bool {
        self.holds_bound_concentration && self.holds_hyp1 && self.holds_compatibility
    }
}

/// Checks the three regime inequalities with the conservative `M = 8L`.
pub fn admissibility(cloud: &ParticleCloud, lambda: f64, mbar: f64, e: f64) -> Result<AdmissibilityReport> {
    if !(mbar > 0.0 && e > 0.0) {
        return Err(domain("budgets must be positive"));
    }
    let diagnostics = diagnostics(cloud, lambda, false)?;
    let n = cloud.len() as f64;
    Ok(AdmissibilityReport {
        holds_bound_concentration: diagnostics.ratio_mbar <= mbar,
        holds_hyp1: diagnostics.ratio_e <= e,
        holds_compatibility: diagnostics.compatibility_ok,
        implied_d_min_floor: (e * mbar).powf(-0.5) * n.powf(-0.5),
        smallness_product: mbar.cbrt() * cloud.r0(),
        diagnostics,
        mbar_budget: mbar,
        e_budget: e,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "policy", content = "value", rename_all = "snake_case")]
pub enum LambdaPolicy {
    Fixed(f64),
    CubeRoot,
    #[default]
    HalfDminFloor,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LambdaChoice {
    pub lambda: f64,
    /// Set when the value violates `λ ≥ d_min / 2`.
    pub incompatible: bool,
}

pub fn choose_lambda(cloud: &ParticleCloud, policy: LambdaPolicy) -> Result<LambdaChoice> {
    if cloud.len() < 2 {
        return Err(domain("choose_lambda needs at least two particles"));
    }
    let n = cloud.len() as f64;
    let d = min_distance(cloud)?.distance;
    let lambda = match policy {
        LambdaPolicy::Fixed(v) => {
            if !(v > 0.0) {
                return Err(domain("fixed lambda must be positive"));
            }
            v
        }
        LambdaPolicy::CubeRoot => n.cbrt().recip(),
        LambdaPolicy::HalfDminFloor => (d / 2.0).max(n.cbrt().recip()),
    };
    Ok(LambdaChoice {
        lambda,
        incompatible: lambda < d / 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn lattice(m: usize, h: f64) -> Vec<Vec3> {
        let mut out = Vec::new();
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    out.push(Vec3::new(i as f64, j as f64, k as f64) * h);
                }
            }
        }
        out
    }

    #[test]
    fn radius_law() {
        let c = ParticleCloud::new(lattice(2, 1.0), 0.8, 0.0).unwrap();
        assert_eq!(c.radius(), 0.1);
    }

    #[test]
    fn overlap_is_reported_with_pair() {
        let c = ParticleCloud::new(vec![Vec3::zeros(), Vec3::new(0.5, 0.0, 0.0)], 1.0, 0.0).unwrap();
        assert!(matches!(c.check_non_overlap(), Err(Error::Overlap { i: 0, j: 1, .. })));
    }

    #[test]
    fn lambda_policies() {
        let h = 0.25;
        let c = ParticleCloud::new(lattice(5, h), 0.01, 0.0).unwrap();
        let n = 125f64;
        let v = choose_lambda(&c, LambdaPolicy::HalfDminFloor).unwrap();
        assert_eq!(v.lambda, (h / 2.0).max(n.cbrt().recip()));
        assert!(!v.incompatible);
        assert_eq!(choose_lambda(&c, LambdaPolicy::Fixed(0.1)).unwrap().lambda, 0.1);
        assert!(choose_lambda(&c, LambdaPolicy::Fixed(0.1)).unwrap().incompatible);
        assert!(choose_lambda(&c, LambdaPolicy::Fixed(0.0)).is_err());
        let c = ParticleCloud::new(lattice(10, 0.1), 0.01, 0.0).unwrap();
        let v = choose_lambda(&c, LambdaPolicy::CubeRoot).unwrap().lambda;
        assert!((v - 0.1).abs() < 1e-15);
    }

    #[test]
    fn admissibility_of_lattice_at_compatibility_boundary() {
        let h = 0.25;
        let c = ParticleCloud::new(lattice(5, h), 0.01, 0.0).unwrap();
        let rep = admissibility(&c, h / 2.0, 1e6, 1e6).unwrap();
        assert!(rep.holds_compatibility);
        assert_eq!(rep.diagnostics.lambda, rep.diagnostics.d_min / 2.0);
        assert_eq!(rep.diagnostics.l_concentration, 1);
        assert_eq!(rep.diagnostics.m_upper, 8);
    }

    #[test]
    fn hyp1_violation_is_flagged() {
        let lambda: f64 = 0.5;
        let d = lambda.powi(3);
        let c = ParticleCloud::new(vec![Vec3::zeros(), Vec3::new(d, 0.0, 0.0)], 1e-3, 0.0).unwrap();
        let rep = admissibility(&c, lambda, 1e9, 2.0).unwrap();
        assert!((rep.diagnostics.ratio_e - 1.0 / lambda.powi(3)).abs() < 1e-9);
        assert!(!rep.holds_hyp1);
    }
}
