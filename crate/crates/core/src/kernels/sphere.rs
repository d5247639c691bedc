//! Decaying Stokes solutions outside a single sphere `B(a, R)`.
//!
//! Gradients are Jacobians: `gradient[(i, k)] = ∂u_i/∂x_k`.
//!
//! Strainlet coefficients. With `y = x − a`, `r = |y|` and `s = y·E·y`, take
//! `u = α(r) E y + β(r) s y`. The potential dipole `∇(y·E·y / r⁵)` and the
//! force dipole `s y / r⁵` (pressure `2 s / r⁵` per unit coefficient) span the
//! decaying solutions of this form, giving
//! `α = R⁵/r⁵`, `β = (5/2)(R³/r⁵ − R⁵/r⁷)`, `p = 5 R³ s / r⁵`.
//! At `r = R`, `α = 1` and `β = 0`, so `u = E y` on the surface.

use crate::error::{domain, Error, Result};
use crate::linalg::{axial, skew, ssym, sym, Mat3, Vec3};

use super::KernelSample;

const TRACE_TOL: f64 = 1e-12;

fn offset(a: &Vec3, x: &Vec3) -> Result<(Vec3, f64)> {
    let y = x - a;
    let r = y.norm();
    if r == 0.0 {
        return Err(Error::Singularity("evaluation point at sphere center".into()));
    }
    Ok((y, r))
}

/// Exterior stokeslet velocity and gradient at offset `y`, `r = |y|`.
#[inline]
pub fn stokeslet_exterior(y: &Vec3, r: f64, radius: f64, v: &Vec3) -> (Vec3, Mat3) {
    let rr = radius;
    let r2 = r * r;
    let r3 = r2 * r;
    let r4 = r2 * r2;
    let r5 = r4 * r;
    let r6 = r4 * r2;
    let rr3 = rr * rr * rr;
    let a = 0.75 * rr / r + 0.25 * rr3 / r3;
    let b = 0.75 * rr / r3 - 0.75 * rr3 / r5;
    let da = -0.75 * rr / r2 - 0.75 * rr3 / r4;
    let db = -2.25 * rr / r4 + 3.75 * rr3 / r6;
    let yv = y.dot(v);
    let u = v * a + y * (b * yv);
    let grad = v * y.transpose() * (da / r)
        + y * y.transpose() * (db * yv / r)
        + (y * v.transpose() + Mat3::identity() * yv) * b;
    (u, grad)
}

#[inline]
pub fn stokeslet_pressure(y: &Vec3, r: f64, radius: f64, v: &Vec3) -> f64 {
    1.5 * radius * v.dot(y) / (r * r * r)
}

#[inline]
pub fn rotlet_exterior(y: &Vec3, r: f64, radius: f64, w: &Vec3) -> (Vec3, Mat3) {
    let rr3 = radius * radius * radius;
    let r3 = r * r * r;
    let r5 = r3 * r * r;
    let wy = w.cross(y);
    let u = wy * (rr3 / r3);
    let grad = skew(w) * (rr3 / r3) - wy * y.transpose() * (3.0 * rr3 / r5);
    (u, grad)
}

#[inline]
pub fn strainlet_exterior(y: &Vec3, r: f64, radius: f64, e: &Mat3) -> (Vec3, Mat3, f64) {
    let rr3 = radius * radius * radius;
    let rr5 = rr3 * radius * radius;
    let r2 = r * r;
    let r5 = r2 * r2 * r;
    let r6 = r5 * r;
    let r7 = r5 * r2;
    let r8 = r6 * r2;
    let ey = e * y;
    let s = y.dot(&ey);
    let alpha = rr5 / r5;
    let dalpha = -5.0 * rr5 / r6;
    let beta = 2.5 * (rr3 / r5 - rr5 / r7);
    let dbeta = 2.5 * (-5.0 * rr3 / r6 + 7.0 * rr5 / r8);
    let u = ey * alpha + y * (beta * s);
    let grad = ey * y.transpose() * (dalpha / r)
        + e * alpha
        + y * y.transpose() * (dbeta * s / r)
        + (y * ey.transpose() * 2.0 + Mat3::identity() * s) * beta;
    let p = 5.0 * rr3 * s / r5;
    (u, grad, p)
}

/// Rotlet plus strainlet for a trace-free `d`, exterior only.
#[inline]
pub fn combined_exterior(y: &Vec3, r: f64, radius: f64, d: &Mat3) -> (Vec3, Mat3, f64) {
    let w = axial(d);
    let e = sym(d);
    let (u1, g1) = rotlet_exterior(y, r, radius, &w);
    let (u2, g2, p) = strainlet_exterior(y, r, radius, &e);
    (u1 + u2, g1 + g2, p)
}

/// Flow of a sphere translating with velocity `v`; rigid inside.
pub fn stokeslet_eval(a: &Vec3, radius: f64, v: &Vec3, x: &Vec3) -> Result<KernelSample> {
    let (y, r) = offset(a, x)?;
    if r < radius {
        return Ok(KernelSample::inside(*v, Mat3::zeros()));
    }
    let (u, g) = stokeslet_exterior(&y, r, radius, v);
    Ok(KernelSample::outside(u, g, stokeslet_pressure(&y, r, radius, v)))
}

/// Flow of a sphere rotating with angular velocity `w`; pressure is zero.
pub fn rotlet_eval(a: &Vec3, radius: f64, w: &Vec3, x: &Vec3) -> Result<KernelSample> {
    let (y, r) = offset(a, x)?;
    if r < radius {
        return Ok(KernelSample::inside(w.cross(&y), skew(w)));
    }
    let (u, g) = rotlet_exterior(&y, r, radius, w);
    Ok(KernelSample::outside(u, g, 0.0))
}

fn check_strain(e: &Mat3) -> Result<()> {
    let scale = e.norm().max(1.0);
    if (e - e.transpose()).norm() > TRACE_TOL * scale {
        return Err(domain("strain matrix is not symmetric"));
    }
    if e.trace().abs() > TRACE_TOL * scale {
        return Err(domain("strain matrix is not trace-free"));
    }
    Ok(())
}

/// Flow of a sphere whose surface moves with the linear strain `e`.
pub fn strainlet_eval(a: &Vec3, radius: f64, e: &Mat3, x: &Vec3) -> Result<KernelSample> {
    check_strain(e)?;
    let (y, r) = offset(a, x)?;
    if r < radius {
        return Ok(KernelSample::inside(e * y, *e));
    }
    let (u, g, p) = strainlet_exterior(&y, r, radius, e);
    Ok(KernelSample::outside(u, g, p))
}

/// Superposition of the rotlet of `ssym(d)` and the strainlet of `sym(d)`.
pub fn combined_eval(a: &Vec3, radius: f64, d: &Mat3, x: &Vec3) -> Result<KernelSample> {
    if d.trace().abs() > TRACE_TOL * d.norm().max(1.0) {
        return Err(domain("gradient matrix is not trace-free"));
    }
    let (y, r) = offset(a, x)?;
    if r < radius {
        return Ok(KernelSample::inside(d * y, *d));
    }
    let w = axial(&ssym(d));
    let e = sym(d);
    let (u1, g1) = rotlet_exterior(&y, r, radius, &w);
    let (u2, g2, p) = strainlet_exterior(&y, r, radius, &e);
    Ok(KernelSample::outside(u1 + u2, g1 + g2, p))
}
