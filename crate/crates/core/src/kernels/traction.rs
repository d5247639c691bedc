use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::linalg::{skew, sym, Mat3, Vec3};

use super::sphere::{combined_exterior, rotlet_exterior, stokeslet_exterior, stokeslet_pressure, strainlet_exterior};

/// Smallest accepted `(n_theta, n_phi)` for the product rule.
pub const MIN_ORDER: (usize, usize) = (2, 3);
pub const DEFAULT_ORDER: (usize, usize) = (32, 64);

/// Boundary data whose exterior Stokes solution is integrated.
#[derive(Clone, Copy, Debug)]
pub enum SphereSolution {
    Stokeslet(Vec3),
    Rotlet(Vec3),
    Strainlet(Mat3),
    Combined(Mat3),
}

/// Force, torque and stresslet exerted by the fluid on the sphere.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TractionSummary {
    pub force: Vec3,
    pub torque: Vec3,
    pub stresslet: Mat3,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn field(sol: &SphereSolution, y: &Vec3, radius: f64) -> (Vec3, Mat3, f64) {
    let r = y.norm();
    match sol {
        SphereSolution::Stokeslet(v) => {
            let (u, g) = stokeslet_exterior(y, r, radius, v);
            (u, g, stokeslet_pressure(y, r, radius, v))
        }
        SphereSolution::Rotlet(w) => {
            let (u, g) = rotlet_exterior(y, r, radius, w);
            (u, g, 0.0)
        }
        SphereSolution::Strainlet(e) => strainlet_exterior(y, r, radius, e),
        SphereSolution::Combined(d) => combined_exterior(y, r, radius, d),
    }
}

/// Integrates `σ n = (∇u + ∇uᵀ − pI) n` over the sphere with a product
/// Gauss–Legendre (in `cos θ`) × trapezoid (in `φ`) rule.
///
/// The stresslet is `sym ∫ (x − a) ⊗ σn − ∫ (u ⊗ n + n ⊗ u)`. The surface
/// velocity term vanishes for rigid motions and makes a straining surface
/// report `−(20/3)πR³E` instead of the bare moment `−4πR³E`.
pub fn traction_integrals(
    sol: &SphereSolution,
    radius: f64,
    order: (usize, usize),
) -> Result<TractionSummary> {
    let (nt, np) = order;
    if nt < MIN_ORDER.0 || np < MIN_ORDER.1 {
        return Err(domain(format!(
            "quadrature order {nt}x{np} below minimum {}x{}",
            MIN_ORDER.0, MIN_ORDER.1
        )));
    }
    if radius <= 0.0 {
        return Err(domain("radius must be positive"));
    }
    match sol {
        SphereSolution::Strainlet(e) => {
            let sc = e.norm().max(1.0);
            if (e - e.transpose()).norm() > 1e-12 * sc || e.trace().abs() > 1e-12 * sc {
                return Err(domain("strain must be symmetric and trace-free"));
            }
        }
        SphereSolution::Combined(d) if d.trace().abs() > 1e-12 * d.norm().max(1.0) => {
            return Err(domain("gradient must be trace-free"));
        }
        _ => {}
    }
    let (mu, wmu) = gauss_legendre(nt);
    let dphi = 2.0 * PI / np as f64;
    let area = radius * radius;
    let mut force = Vec3::zeros();
    let mut torque = Vec3::zeros();
    let mut moment = Mat3::zeros();
    let mut slip = Mat3::zeros();
    for (m, wm) in mu.iter().zip(wmu.iter()) {
        let st = (1.0 - m * m).max(0.0).sqrt();
        for k in 0..np {
            let phi = dphi * k as f64;
            let n = Vec3::new(st * phi.cos(), st * phi.sin(), *m);
            let y = n * radius;
            let (u, g, p) = field(sol, &y, radius);
            let sigma = g + g.transpose() - Mat3::identity() * p;
            let t = sigma * n;
            let w = wm * dphi * area;
            force += t * w;
            torque += y.cross(&t) * w;
            moment += y * t.transpose() * w;
            slip += (u * n.transpose() + n * u.transpose()) * w;
        }
    }
    Ok(TractionSummary {
        force,
        torque,
        stresslet: sym(&moment) - slip,
    })
}

/// Closed-form tractions for the same boundary data.
pub fn exact_tractions(sol: &SphereSolution, radius: f64) -> TractionSummary {
    let r3 = radius.powi(3);
    let zero = TractionSummary {
        force: Vec3::zeros(),
        torque: Vec3::zeros(),
        stresslet: Mat3::zeros(),
    };
    match sol {
        SphereSolution::Stokeslet(v) => TractionSummary {
            force: -6.0 * PI * radius * v,
            ..zero
        },
        SphereSolution::Rotlet(w) => TractionSummary {
            torque: -8.0 * PI * r3 * w,
            ..zero
        },
        SphereSolution::Strainlet(e) => TractionSummary {
            stresslet: -(20.0 / 3.0) * PI * r3 * e,
            ..zero
        },
        SphereSolution::Combined(d) => {
            let w = crate::linalg::axial(d);
            debug_assert!((skew(&w) - crate::linalg::ssym(d)).norm() < 1e-12 * d.norm().max(1.0));
            TractionSummary {
                torque: -8.0 * PI * r3 * w,
                stresslet: -(20.0 / 3.0) * PI * r3 * sym(d),
                ..zero
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: &TractionSummary, b: &TractionSummary) -> f64 {
        let scale = b.force.norm() + b.torque.norm() + b.stresslet.norm();
        ((a.force - b.force).norm() + (a.torque - b.torque).norm() + (a.stresslet - b.stresslet).norm())
            / scale
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m8: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((m8 - 2.0 / 9.0).abs() < 1e-14);
        let (x1, w1) = gauss_legendre(1);
        assert_eq!(x1, vec![0.0]);
        assert!((w1[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn tractions_match_closed_forms() {
        let radius = 0.37;
        let d = Mat3::new(0.2, -0.5, 0.1, 0.3, -0.6, 0.7, 0.4, -0.2, 0.4);
        let e = sym(&d);
        for sol in [
            SphereSolution::Stokeslet(Vec3::new(0.3, -1.0, 0.5)),
            SphereSolution::Rotlet(Vec3::new(-0.2, 0.4, 1.1)),
            SphereSolution::Strainlet(e),
            SphereSolution::Combined(d),
        ] {
            let q = traction_integrals(&sol, radius, DEFAULT_ORDER).unwrap();
            assert!(rel(&q, &exact_tractions(&sol, radius)) < 1e-12, "{sol:?}");
            assert!(q.stresslet.trace().abs() < 1e-12);
        }
    }

    #[test]
    fn order_below_minimum_is_rejected() {
        let sol = SphereSolution::Stokeslet(Vec3::x());
        assert!(traction_integrals(&sol, 1.0, (1, 8)).is_err());
        assert!(traction_integrals(&sol, 1.0, (4, 2)).is_err());
    }

    #[test]
    fn minimum_order_is_already_exact() {
        let d = Mat3::new(1.0, 0.5, 0.2, -0.5, -2.0, 0.3, 0.4, 0.3, 1.0);
        for sol in [
            SphereSolution::Stokeslet(Vec3::new(1.0, 2.0, -0.5)),
            SphereSolution::Rotlet(Vec3::new(0.3, 0.0, 1.0)),
            SphereSolution::Strainlet(sym(&d)),
            SphereSolution::Combined(d),
        ] {
            let exact = exact_tractions(&sol, 1.3);
            for o in [MIN_ORDER, (3, 4), (8, 16)] {
                assert!(rel(&traction_integrals(&sol, 1.3, o).unwrap(), &exact) < 1e-13, "{sol:?} {o:?}");
            }
        }
    }
}
