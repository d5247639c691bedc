use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::linalg::Vec3;
use crate::par;

use super::{BlobDensity, Rho0Spec, BUMP_VOLUME};

/// Regular grid with `n` points per axis, endpoints included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub lo: Vec3,
    pub hi: Vec3,
    pub n: usize,
}

impl SampleGrid {
    /// Bounding box of the blob centers padded by `δ`.
    pub fn covering(density: &BlobDensity, n: usize) -> Self {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for c in density.centers() {
            lo = lo.inf(c);
            hi = hi.sup(c);
        }
        let pad = Vec3::repeat(density.delta());
        SampleGrid {
            lo: lo - pad,
            hi: hi + pad,
            n,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 || !(0..3).all(|k| self.hi[k] >= self.lo[k] && self.lo[k].is_finite() && self.hi[k].is_finite()) {
            return Err(domain("sample grid needs n >= 2 and finite lo <= hi"));
        }
        Ok(())
    }

    fn points(&self) -> Vec<Vec3> {
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        let mut out = Vec::with_capacity(self.n.pow(3));
        for i in 0..self.n {
            for j in 0..self.n {
                for k in 0..self.n {
                    out.push(self.lo + step.component_mul(&Vec3::new(i as f64, j as f64, k as f64)));
                }
            }
        }
        out
    }
}

/// Symmetric cube `[−a, a]³` sampled with `n` points per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBox {
    pub half_width: f64,
    pub n: usize,
}

impl Default for SampleBox {
    fn default() -> Self {
        SampleBox {
            half_width: 10.0,
            n: 64,
        }
    }
}

impl SampleBox {
    fn grid(&self) -> SampleGrid {
        SampleGrid {
            lo: Vec3::repeat(-self.half_width),
            hi: Vec3::repeat(self.half_width),
            n: self.n,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DensityDiagnostics {
    pub mass: f64,
    pub sup_estimate: f64,
    /// `max_k |y_k − centroid|`.
    pub support_radius: f64,
    pub centroid: Vec3,
}

struct Buckets {
    cell: f64,
    map: HashMap<(i64, i64, i64), Vec<usize>>,
}

impl Buckets {
    fn new(points: &[Vec3], cell: f64) -> Self {
        let mut map: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            map.entry(Self::key(p, cell)).or_default().push(i);
        }
        Buckets { cell, map }
    }

    fn key(p: &Vec3, cell: f64) -> (i64, i64, i64) {
        let f = |x: f64| (x / cell).floor() as i64;
        (f(p.x), f(p.y), f(p.z))
    }

    fn near<'a>(&'a self, x: &Vec3) -> impl Iterator<Item = usize> + 'a {
        let (a, b, c) = Self::key(x, self.cell);
        (-1..=1).flat_map(move |i| {
            (-1..=1).flat_map(move |j| {
                (-1..=1).flat_map(move |k| self.map.get(&(a + i, b + j, c + k)).into_iter().flatten().copied())
            })
        })
    }
}

fn quartic_bump(s2: f64) -> f64 {
    if s2 >= 1.0 {
        0.0
    } else {
        (1.0 - s2).powi(2) / BUMP_VOLUME
    }
}

fn kde_with(density: &BlobDensity, buckets: &Buckets, x: &Vec3) -> f64 {
    let d = density.delta();
    let inv = 1.0 / (d * d);
    let mut acc = 0.0;
    for k in buckets.near(x) {
        let s2 = (x - density.centers()[k]).norm_squared() * inv;
        acc += density.weights()[k] * quartic_bump(s2);
    }
    acc / (d * d * d)
}

/// Kernel density estimate `Σ w_k χ_δ(x − y_k)` with the compact quartic bump.
pub fn kde_eval(density: &BlobDensity, x: &Vec3) -> f64 {
    let buckets = Buckets::new(density.centers(), density.delta());
    kde_with(density, &buckets, x)
}

/// Mass, kernel-density sup estimate over the grid and blob centers, and
/// support radius about the centroid.
pub fn density_diagnostics(density: &BlobDensity, grid: &SampleGrid) -> Result<DensityDiagnostics> {
    grid.validate()?;
    let buckets = Buckets::new(density.centers(), density.delta());
    let mut points = grid.points();
    points.extend_from_slice(density.centers());
    let values = par::map_slice(&points, |x| kde_with(density, &buckets, x));
    let centroid = density.centroid();
    let support_radius = density
        .centers()
        .iter()
        .map(|c| (c - centroid).norm())
        .fold(0.0, f64::max);
    Ok(DensityDiagnostics {
        mass: density.mass(),
        sup_estimate: values.into_iter().fold(0.0, f64::max),
        support_radius,
        centroid,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct XBetaNorm {
    /// `max (1 + |x|^β)|h(x)|` over the sample points.
    pub sampled: f64,
    pub argmax: Vec3,
    /// Radial maximum located by a 1-d search, for specs centered at the origin.
    pub analytic: Option<f64>,
}

impl XBetaNorm {
    pub fn value(&self) -> f64 {
        self.analytic.map_or(self.sampled, |a| a.max(self.sampled))
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 2.0) || !beta.is_finite() {
        return Err(domain("the weighted norm needs beta > 2"));
    }
    Ok(())
}

/// Sampled `‖h‖_{X_β} = sup (1 + |x|^β)|h(x)|` over the box.
pub fn x_beta_norm_fn<F>(h: F, beta: f64, sample_box: &SampleBox) -> Result<XBetaNorm>
where
    F: Fn(&Vec3) -> f64 + Sync + Send,
{
    check_beta(beta)?;
    let grid = sample_box.grid();
    grid.validate()?;
    let points = grid.points();
    let values = par::map_slice(&points, |x| (1.0 + x.norm().powf(beta)) * h(x).abs());
    let (k, sampled) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, v)| if v > best.1 { (k, v) } else { best });
    Ok(XBetaNorm {
        sampled,
        argmax: points[k],
        analytic: None,
    })
}

fn radial_max(f: impl Fn(f64) -> f64, r_max: f64) -> f64 {
    const SCAN: usize = 4096;
    let h = r_max / SCAN as f64;
    let (mut best_i, mut best) = (0, f(0.0));
    for i in 1..=SCAN {
        let v = f(i as f64 * h);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let (mut a, mut b) = ((best_i as f64 - 1.0).max(0.0) * h, ((best_i + 1) as f64 * h).min(r_max));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) >= f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.max(f(0.5 * (a + b)))
}

pub fn x_beta_norm(spec: &Rho0Spec, beta: f64, sample_box: &SampleBox) -> Result<XBetaNorm> {
    spec.validate()?;
    let mut out = x_beta_norm_fn(|x| spec.eval(x), beta, sample_box)?;
    if spec.center() == Vec3::zeros() {
        let r_max = match *spec {
            Rho0Spec::Bump { radius, .. } => radius,
            Rho0Spec::Gaussian { sigma, .. } => 4.0 * sigma + 2.0 * beta.sqrt() * sigma,
        };
        out.analytic = Some(radial_max(|r| (1.0 + r.powf(beta)) * spec.eval(&Vec3::new(r, 0.0, 0.0)), r_max));
    }
    Ok(out)
}

/// Weighted norm of the kernel-density estimate of a blob density.
pub fn x_beta_norm_density(density: &BlobDensity, beta: f64, sample_box: &SampleBox) -> Result<XBetaNorm> {
    let buckets = Buckets::new(density.centers(), density.delta());
    x_beta_norm_fn(|x| kde_with(density, &buckets, x), beta, sample_box)
}
