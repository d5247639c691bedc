use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cloud::ParticleCloud;
use crate::error::{domain, Result};
use crate::kernels::{combined_exterior, oseen_apply, stokeslet_exterior};
use crate::linalg::{axial, pack_vm, unpack_vm, Compensated, Mat3, TraceFree, Vec3};
use crate::par;

/// Stokes settling velocity `κg` of an isolated sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GravitySettings {
    pub settling_velocity: Vec3,
}

impl GravitySettings {
    pub fn new(settling_velocity: Vec3) -> Self {
        GravitySettings { settling_velocity }
    }

    /// Unit settling speed along `-e3`.
    pub fn downward() -> Self {
        GravitySettings::new(Vec3::new(0.0, 0.0, -1.0))
    }

    pub fn scaled(&self, s: f64) -> Self {
        GravitySettings::new(self.settling_velocity * s)
    }
}

/// Per-particle linear and angular velocities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodyKinematics {
    pub velocities: Vec<Vec3>,
    pub angular: Vec<Vec3>,
}

impl BodyKinematics {
    pub fn translation_only(velocities: Vec<Vec3>) -> Self {
        let angular = vec![Vec3::zeros(); velocities.len()];
        BodyKinematics {
            velocities,
            angular,
        }
    }

    pub fn len(&self) -> usize {
        self.velocities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocities.is_empty()
    }

    /// `max_i (|V_i| + R |Ω_i|)`.
    pub fn max_speed(&self, radius: f64) -> f64 {
        self.velocities
            .iter()
            .zip(&self.angular)
            .map(|(v, w)| v.norm() + radius * w.norm())
            .fold(0.0, f64::max)
    }

    /// `max_i |V_i − W_i|`.
    pub fn max_velocity_difference(&self, other: &BodyKinematics) -> f64 {
        self.velocities
            .iter()
            .zip(&other.velocities)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Stacked per-particle velocity samples and trace-free gradients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageVector {
    pub v: Vec<Vec3>,
    pub g: Vec<TraceFree>,
}

impl StageVector {
    pub fn zeros(n: usize) -> Self {
        StageVector {
            v: vec![Vec3::zeros(); n],
            g: vec![TraceFree::zero(); n],
        }
    }

    /// Every particle carries `v` and a zero gradient.
    pub fn uniform_velocity(n: usize, v: Vec3) -> Self {
        StageVector {
            v: vec![v; n],
            g: vec![TraceFree::zero(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// `max_i |V_i| + R max_i |G_i|`.
    pub fn eta(&self, radius: f64) -> f64 {
        let v = self.v.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let g = self.g.iter().map(|g| g.norm()).fold(0.0, f64::max);
        v + radius * g
    }

    pub fn add(&self, o: &StageVector) -> StageVector {
        StageVector {
            v: self.v.iter().zip(&o.v).map(|(a, b)| a + b).collect(),
            g: self.g.iter().zip(&o.g).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn sub(&self, o: &StageVector) -> StageVector {
        StageVector {
            v: self.v.iter().zip(&o.v).map(|(a, b)| a - b).collect(),
            g: self.g.iter().zip(&o.g).map(|(a, b)| a.sub(b)).collect(),
        }
    }

    /// Flattened as `[V_i (3), G_i (8)]` per particle.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(11 * self.len());
        for (v, g) in self.v.iter().zip(&self.g) {
            out.extend_from_slice(v.as_slice());
            out.extend_from_slice(&g.0);
        }
        out
    }

    pub fn from_flat(x: &[f64]) -> Result<StageVector> {
        if x.len() % 11 != 0 {
            return Err(domain("flat stage vector length must be a multiple of 11"));
        }
        let n = x.len() / 11;
        let mut s = StageVector::zeros(n);
        for i in 0..n {
            let b = &x[11 * i..11 * i + 11];
            s.v[i] = Vec3::new(b[0], b[1], b[2]);
            s.g[i].0.copy_from_slice(&b[3..11]);
        }
        Ok(s)
    }

    /// Linear velocities plus the rotation encoded in the antisymmetric gradients.
    pub fn kinematics(&self) -> BodyKinematics {
        BodyKinematics {
            velocities: self.v.clone(),
            angular: self.g.iter().map(|g| axial(&g.to_matrix())).collect(),
        }
    }
}

/// One reflection: each particle feels minus the flows of all others,
/// `V_i' = −Σ_{j≠i} (U_j[V_j] + A_j[G_j])(x_i)` and likewise for gradients.
pub fn apply_interaction_map(cloud: &ParticleCloud, input: &StageVector) -> Result<StageVector> {
    if input.len() != cloud.len() {
        return Err(domain("stage vector size does not match the cloud"));
    }
    cloud.check_non_overlap()?;
    Ok(interaction_unchecked(cloud, input))
}

pub(crate) fn interaction_unchecked(cloud: &ParticleCloud, input: &StageVector) -> StageVector {
    let x = cloud.positions();
    let n = x.len();
    let radius = cloud.radius();
    let gm: Vec<Option<Mat3>> = input
        .g
        .iter()
        .map(|g| if g.0.iter().all(|c| *c == 0.0) { None } else { Some(g.to_matrix()) })
        .collect();
    let rows = par::map_range(n, |i| {
        let mut acc = Compensated::<12>::new();
        for j in 0..n {
            if j == i {
                continue;
            }
            let y = x[i] - x[j];
            let r = y.norm();
            let (mut u, mut g) = stokeslet_exterior(&y, r, radius, &input.v[j]);
            if let Some(d) = &gm[j] {
                let (u2, g2, _) = combined_exterior(&y, r, radius, d);
                u += u2;
                g += g2;
            }
            acc.add(&pack_vm(&-u, &-g));
        }
        let (v, g) = unpack_vm(&acc.total());
        (v, TraceFree::from_matrix(&g))
    });
    let (v, g) = rows.into_iter().unzip();
    StageVector { v, g }
}

/// `V_i = κg + 6πR Σ_{j≠i} Φ(x_i − x_j) κg`, `Ω_i = 0`.
pub fn first_order_velocities(cloud: &ParticleCloud, gravity: &GravitySettings) -> Result<BodyKinematics> {
    cloud.check_non_overlap()?;
    Ok(first_order_unchecked(cloud, gravity))
}

pub(crate) fn first_order_unchecked(cloud: &ParticleCloud, gravity: &GravitySettings) -> BodyKinematics {
    let x = cloud.positions();
    let n = x.len();
    let kg = gravity.settling_velocity;
    let c = 6.0 * PI * cloud.radius();
    let v = par::map_range(n, |i| {
        let mut acc = Compensated::<3>::new();
        for j in 0..n {
            if j != i {
                let u = oseen_apply(&(x[i] - x[j]), &kg);
                acc.add(&[u.x, u.y, u.z]);
            }
        }
        let s = acc.total();
        kg + Vec3::new(s[0], s[1], s[2]) * c
    });
    BodyKinematics::translation_only(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LipschitzReport {
    pub max_ratio: f64,
    pub i: usize,
    pub j: usize,
}

/// `max_{i≠j} |V_i − V_j| / |x_i − x_j|` and the attaining pair.
pub fn pairwise_lipschitz_report(cloud: &ParticleCloud, kin: &BodyKinematics) -> Result<LipschitzReport> {
    let x = cloud.positions();
    let n = x.len();
    if n < 2 {
        return Err(domain("Lipschitz ratio needs at least two particles"));
    }
    if kin.len() != n {
        return Err(domain("kinematics size does not match the cloud"));
    }
    let v = &kin.velocities;
    let rows = par::map_range(n - 1, |i| {
        let mut best = (0.0, i, i + 1);
        for j in (i + 1)..n {
            let q = (v[i] - v[j]).norm() / (x[i] - x[j]).norm();
            if q > best.0 {
                best = (q, i, j);
            }
        }
        best
    });
    let best = rows
        .into_iter()
        .fold((0.0, 0, 1), |a, b| if b.0 > a.0 { b } else { a });
    Ok(LipschitzReport {
        max_ratio: best.0,
        i: best.1,
        j: best.2,
    })
}
