use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Matrix of the map `y -> w × y`.
pub fn skew(w: &Vec3) -> Mat3 {
    Mat3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Axial vector `w` of the antisymmetric part of `m`, so that `ssym(m) y = w × y`.
pub fn axial(m: &Mat3) -> Vec3 {
    Vec3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

pub fn sym(m: &Mat3) -> Mat3 {
    0.5 * (m + m.transpose())
}

pub fn ssym(m: &Mat3) -> Mat3 {
    0.5 * (m - m.transpose())
}

pub fn linf(v: &Vec3) -> f64 {
    v.x.abs().max(v.y.abs()).max(v.z.abs())
}

/// Trace-free 3×3 matrix stored as eight independent entries.
///
/// The entries are `d11 d12 d13 d21 d22 d23 d31 d32`; `d33 = -d11 - d22`,
/// so reconstruction is exactly trace-free.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceFree(pub [f64; 8]);

impl TraceFree {
    pub const DIM: usize = 8;

    pub fn zero() -> Self {
        TraceFree([0.0; 8])
    }

    /// Drops `m33` after removing the trace, which is the orthogonal
    /// projection onto trace-free matrices.
    pub fn from_matrix(m: &Mat3) -> Self {
        let t = m.trace() / 3.0;
        TraceFree([
            m[(0, 0)] - t,
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)] - t,
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
        ])
    }

    pub fn to_matrix(&self) -> Mat3 {
        let d = &self.0;
        Mat3::new(d[0], d[1], d[2], d[3], d[4], d[5], d[6], d[7], -d[0] - d[4])
    }

    /// The `c`-th basis matrix: a single unit entry plus the compensating `d33`.
    pub fn basis(c: usize) -> Self {
        let mut d = [0.0; 8];
        d[c] = 1.0;
        TraceFree(d)
    }

    pub fn norm(&self) -> f64 {
        self.to_matrix().norm()
    }

    pub fn scale(&self, s: f64) -> Self {
        TraceFree(self.0.map(|x| x * s))
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut d = self.0;
        for (a, b) in d.iter_mut().zip(o.0.iter()) {
            *a += b;
        }
        TraceFree(d)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(-1.0))
    }

    pub fn symmetric_part(&self) -> Self {
        TraceFree::from_matrix(&sym(&self.to_matrix()))
    }

    pub fn antisymmetric_part(&self) -> Self {
        TraceFree::from_matrix(&ssym(&self.to_matrix()))
    }
}

/// Neumaier-compensated accumulator over a fixed number of lanes.
#[derive(Clone, Copy, Debug)]
pub struct Compensated<const K: usize> {
    sum: [f64; K],
    carry: [f64; K],
}

impl<const K: usize> Default for Compensated<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<const K: usize> Compensated<K> {
    pub fn new() -> Self {
        Compensated {
            sum: [0.0; K],
            carry: [0.0; K],
        }
    }

    pub fn add(&mut self, x: &[f64; K]) {
        for k in 0..K {
            let s = self.sum[k];
            let t = s + x[k];
            if s.abs() >= x[k].abs() {
                self.carry[k] += (s - t) + x[k];
            } else {
                self.carry[k] += (x[k] - t) + s;
            }
            self.sum[k] = t;
        }
    }

    pub fn total(&self) -> [f64; K] {
        let mut out = [0.0; K];
        for k in 0..K {
            out[k] = self.sum[k] + self.carry[k];
        }
        out
    }
}

/// Compensated sum of a slice, in index order.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Compensated::<1>::new();
    for x in xs {
        acc.add(&[x]);
    }
    acc.total()[0]
}

pub(crate) fn pack_vm(v: &Vec3, m: &Mat3) -> [f64; 12] {
    [
        v.x, v.y, v.z, m[(0, 0)], m[(0, 1)], m[(0, 2)], m[(1, 0)], m[(1, 1)], m[(1, 2)], m[(2, 0)],
        m[(2, 1)], m[(2, 2)],
    ]
}

pub(crate) fn unpack_vm(a: &[f64; 12]) -> (Vec3, Mat3) {
    (
        Vec3::new(a[0], a[1], a[2]),
        Mat3::new(a[3], a[4], a[5], a[6], a[7], a[8], a[9], a[10], a[11]),
    )
}
