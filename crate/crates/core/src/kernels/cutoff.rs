use crate::error::{domain, Result};
use crate::linalg::{Mat3, Vec3};

use super::oseen::oseen;

/// `3s² − 2s³` clamped to `[0, 1]`.
pub fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * (3.0 - 2.0 * s)
}

/// `6s⁵ − 15s⁴ + 10s³` clamped to `[0, 1]`; twice continuously differentiable.
pub fn smootherstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (s * (6.0 * s - 15.0) + 10.0)
}

fn smootherstep_derivative(s: f64) -> f64 {
    if !(0.0..=1.0).contains(&s) {
        return 0.0;
    }
    30.0 * s * s * (1.0 - s) * (1.0 - s)
}

/// Radial cutoff that removes the Oseen singularity near the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationProfile {
    pub r_inner: f64,
    pub r_outer: f64,
}

impl TruncationProfile {
    /// Plateaus at a quarter and a half of the initial minimal distance.
    pub fn from_min_distance(d_min0: f64) -> Result<Self> {
        if !(d_min0 > 0.0) {
            return Err(domain("minimal distance must be positive"));
        }
        Ok(TruncationProfile {
            r_inner: 0.25 * d_min0,
            r_outer: 0.5 * d_min0,
        })
    }

    pub fn psi(&self, r: f64) -> f64 {
        smoothstep((r - self.r_inner) / (self.r_outer - self.r_inner))
    }
}

/// `ψ(|x|) Φ(x)`; zero on the inner ball including the origin.
pub fn truncated_oseen_eval(x: &Vec3, profile: &TruncationProfile) -> Mat3 {
    let r = x.norm();
    if r <= profile.r_inner {
        return Mat3::zeros();
    }
    let phi = oseen(x);
    if r >= profile.r_outer {
        phi
    } else {
        phi * profile.psi(r)
    }
}

/// Radial cutoff for the divergence-free correction field: one on the unit
/// ball, zero outside radius two, `C²` in between.
pub fn bump_cutoff(rho: f64) -> f64 {
    1.0 - smootherstep(rho - 1.0)
}

pub fn bump_cutoff_derivative(rho: f64) -> f64 {
    -smootherstep_derivative(rho - 1.0)
}

/// Divergence-free field equal to `E_i` near each center `x_i`.
#[derive(Clone, Debug)]
pub struct BumpFieldSpec {
    centers: Vec<Vec3>,
    radius: f64,
    coefficients: Vec<Vec3>,
}

impl BumpFieldSpec {
    pub fn new(centers: Vec<Vec3>, radius: f64, coefficients: Vec<Vec3>) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(domain("bump radius must be positive"));
        }
        if centers.len() != coefficients.len() {
            return Err(domain("one coefficient vector per center is required"));
        }
        for i in 0..centers.len() {
            for j in (i + 1)..centers.len() {
                if (centers[i] - centers[j]).norm() < 4.0 * radius {
                    return Err(domain(format!(
                        "supports of bumps {i} and {j} overlap (distance < 4R)"
                    )));
                }
            }
        }
        Ok(BumpFieldSpec {
            centers,
            radius,
            coefficients,
        })
    }

    pub fn centers(&self) -> &[Vec3] {
        &self.centers
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn coefficients(&self) -> &[Vec3] {
        &self.coefficients
    }

    pub fn max_coefficient(&self) -> f64 {
        self.coefficients.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }
}

/// `Σ_i curl(χ(|y|/R) E_i × y / 2)` with `y = x − x_i`, expanded as
/// `χ E + χ'(|y|/R) (|y|² E − (y·E) y) / (2R|y|)`.
pub fn bump_field_eval(spec: &BumpFieldSpec, x: &Vec3) -> Vec3 {
    let r = spec.radius;
    let mut out = Vec3::zeros();
    for (c, e) in spec.centers.iter().zip(&spec.coefficients) {
        let y = x - c;
        let ny = y.norm();
        if ny >= 2.0 * r {
            continue;
        }
        let rho = ny / r;
        out += e * bump_cutoff(rho);
        if ny > 0.0 {
            let dchi = bump_cutoff_derivative(rho);
            if dchi != 0.0 {
                out += (e * (ny * ny) - y * y.dot(e)) * (dchi / (2.0 * r * ny));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_plateaus_and_ramp() {
        let p = TruncationProfile::from_min_distance(0.4).unwrap();
        let x = Vec3::new(1.0, 1.0, 0.0).normalize();
        assert_eq!(truncated_oseen_eval(&(x * 0.05), &p), Mat3::zeros());
        assert_eq!(truncated_oseen_eval(&Vec3::zeros(), &p), Mat3::zeros());
        assert_eq!(truncated_oseen_eval(&(x * 0.4), &p), oseen(&(x * 0.4)));
        let mid = x * 0.15;
        assert!((truncated_oseen_eval(&mid, &p) - oseen(&mid) * 0.5).norm() < 1e-15);
        let q = x * (0.1 + 0.25 * 0.1);
        let expect = 3.0 * 0.0625 - 2.0 * 0.015625;
        assert!((truncated_oseen_eval(&q, &p) - oseen(&q) * expect).norm() < 1e-15);
    }

    #[test]
    fn truncation_is_c1_across_plateaus() {
        let p = TruncationProfile::from_min_distance(1.0).unwrap();
        let h = 1e-7;
        for r in [p.r_inner, p.r_outer] {
            let left = (p.psi(r) - p.psi(r - h)) / h;
            let right = (p.psi(r + h) - p.psi(r)) / h;
            assert!(left.abs() < 1e-5 && right.abs() < 1e-5);
        }
    }

    #[test]
    fn bump_interpolates_and_vanishes() {
        let spec = BumpFieldSpec::new(
            vec![Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0)],
            0.1,
            vec![Vec3::new(1.0, 2.0, 3.0), Vec3::new(-1.0, 0.5, 0.0)],
        )
        .unwrap();
        assert_eq!(bump_field_eval(&spec, &Vec3::zeros()), Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(bump_field_eval(&spec, &Vec3::x()), Vec3::new(-1.0, 0.5, 0.0));
        assert_eq!(bump_field_eval(&spec, &Vec3::new(0.5, 0.0, 0.0)), Vec3::zeros());
        let inner = Vec3::new(0.03, -0.05, 0.02);
        assert_eq!(bump_field_eval(&spec, &inner), Vec3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn overlapping_supports_are_rejected() {
        let r = BumpFieldSpec::new(
            vec![Vec3::zeros(), Vec3::new(0.3, 0.0, 0.0)],
            0.1,
            vec![Vec3::x(), Vec3::x()],
        );
        assert!(r.is_err());
    }
}
