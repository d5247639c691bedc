use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3};

/// Oseen tensor with its first and second derivatives at one point.
#[derive(Clone, Debug)]
pub struct OseenSample {
    pub phi: Mat3,
    /// `grad[k]` is the matrix `∂Φ/∂x_k`.
    pub grad: [Mat3; 3],
    pub laplacian: Mat3,
}

/// `Φ(x) = (I/|x| + x xᵀ/|x|³) / 8π`, with no check for `x = 0`.
#[inline]
pub fn oseen(x: &Vec3) -> Mat3 {
    let r2 = x.norm_squared();
    let r = r2.sqrt();
    let inv_r = 1.0 / r;
    let inv_r3 = inv_r / r2;
    (Mat3::identity() * inv_r + x * x.transpose() * inv_r3) / (8.0 * PI)
}

/// `Φ(x) v` without forming the matrix.
#[inline]
pub fn oseen_apply(x: &Vec3, v: &Vec3) -> Vec3 {
    let r2 = x.norm_squared();
    let r = r2.sqrt();
    (v / r + x * (x.dot(v) / (r2 * r))) / (8.0 * PI)
}

pub fn oseen_eval(x: &Vec3) -> Result<OseenSample> {
    let r2 = x.norm_squared();
    if r2 == 0.0 || !r2.is_finite() {
        return Err(Error::Singularity("Oseen tensor evaluated at the origin".into()));
    }
    let r = r2.sqrt();
    let r3 = r2 * r;
    let r5 = r3 * r2;
    let c = 1.0 / (8.0 * PI);
    let xx = x * x.transpose();
    let phi = (Mat3::identity() / r + xx / r3) * c;
    let mut grad = [Mat3::zeros(); 3];
    for (k, g) in grad.iter_mut().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                let dij = if i == j { 1.0 } else { 0.0 };
                let dik = if i == k { 1.0 } else { 0.0 };
                let djk = if j == k { 1.0 } else { 0.0 };
                g[(i, j)] = c
                    * (-dij * x[k] / r3 + (dik * x[j] + djk * x[i]) / r3
                        - 3.0 * x[i] * x[j] * x[k] / r5);
            }
        }
    }
    let laplacian = (Mat3::identity() * (2.0 / r3) - xx * (6.0 / r5)) * c;
    Ok(OseenSample {
        phi,
        grad,
        laplacian,
    })
}

/// Oseen tensor with `|x|` replaced by `sqrt(|x|² + δ²)` in both terms.
#[inline]
pub fn regularized_oseen_apply(x: &Vec3, delta: f64, v: &Vec3) -> Vec3 {
    let s2 = x.norm_squared() + delta * delta;
    let s = s2.sqrt();
    (v / s + x * (x.dot(v) / (s2 * s))) / (8.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_axis_values() {
        let s = oseen_eval(&Vec3::x()).unwrap();
        assert_relative_eq!(s.phi[(0, 0)], 1.0 / (4.0 * PI), epsilon = 1e-15);
        assert_relative_eq!(s.phi[(1, 1)], 1.0 / (8.0 * PI), epsilon = 1e-15);
        assert_relative_eq!(s.phi[(2, 2)], 0.039_788_735_772_973_836, epsilon = 1e-15);
        assert_relative_eq!(s.laplacian[(0, 0)], -1.0 / (2.0 * PI), epsilon = 1e-15);
        assert_relative_eq!(s.laplacian[(1, 1)], 1.0 / (4.0 * PI), epsilon = 1e-15);
        assert!(s.phi.transpose() == s.phi);
    }

    #[test]
    fn origin_is_singular() {
        assert!(matches!(oseen_eval(&Vec3::zeros()), Err(Error::Singularity(_))));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let x = Vec3::new(0.4, -0.9, 0.7);
        let s = oseen_eval(&x).unwrap();
        let h = 1e-6;
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = h;
            let fd = (oseen(&(x + e)) - oseen(&(x - e))) / (2.0 * h);
            assert!((fd - s.grad[k]).norm() < 1e-8);
        }
    }

    #[test]
    fn laplacian_matches_trace_of_hessian() {
        let x = Vec3::new(-0.3, 0.8, 0.5);
        let s = oseen_eval(&x).unwrap();
        let h = 1e-4;
        let mut lap = Mat3::zeros();
        for k in 0..3 {
            let mut e = Vec3::zeros();
            e[k] = h;
            lap += (oseen(&(x + e)) - 2.0 * oseen(&x) + oseen(&(x - e))) / (h * h);
        }
        assert!((lap - s.laplacian).norm() < 1e-5);
    }

    #[test]
    fn regularized_tends_to_oseen() {
        let x = Vec3::new(1.0, 2.0, -0.5);
        let v = Vec3::new(0.0, 0.0, -1.0);
        let exact = oseen(&x) * v;
        let reg = regularized_oseen_apply(&x, 1e-6, &v);
        assert!((exact - reg).norm() < 1e-12);
        assert!((oseen_apply(&x, &v) - exact).norm() < 1e-16);
    }
}
