use std::collections::HashMap;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::linalg::Vec3;
use crate::par;

use super::ParticleCloud;

/// Above this size the minimal distance switches to a uniform grid.
pub const BRUTE_FORCE_LIMIT: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairDistance {
    pub distance: f64,
    pub i: usize,
    pub j: usize,
}

fn better(a: PairDistance, b: PairDistance) -> PairDistance {
    if (b.distance, b.i, b.j) < (a.distance, a.i, a.j) {
        b
    } else {
        a
    }
}

const NONE: PairDistance = PairDistance {
    distance: f64::INFINITY,
    i: usize::MAX,
    j: usize::MAX,
};

pub fn min_distance(cloud: &ParticleCloud) -> Result<PairDistance> {
    if cloud.len() <= BRUTE_FORCE_LIMIT {
        min_distance_bruteforce(cloud)
    } else {
        min_distance_grid(cloud)
    }
}

/// Exact `O(N²)` scan; ties resolve to the lexicographically smallest pair.
pub fn min_distance_bruteforce(cloud: &ParticleCloud) -> Result<PairDistance> {
    let x = cloud.positions();
    let n = x.len();
    if n < 2 {
        return Err(domain("minimal distance needs at least two particles"));
    }
    let rows = par::map_range(n - 1, |i| {
        let mut best = NONE;
        for j in (i + 1)..n {
            let d = (x[i] - x[j]).norm();
            if d < best.distance {
                best = PairDistance { distance: d, i, j };
            }
        }
        best
    });
    Ok(rows.into_iter().fold(NONE, better))
}

/// Exact uniform-grid search: pairs closer than the cell size always sit in
/// adjacent cells, so the cell size doubles until such a pair is found.
pub fn min_distance_grid(cloud: &ParticleCloud) -> Result<PairDistance> {
    let x = cloud.positions();
    let n = x.len();
    if n < 2 {
        return Err(domain("minimal distance needs at least two particles"));
    }
    let (lo, hi) = bounds(x);
    let extent = (hi - lo).max();
    let mut h = if extent > 0.0 { extent / (n as f64).cbrt() } else { 1.0 };
    loop {
        let best = adjacent_cell_minimum(x, &lo, h);
        if best.distance <= h {
            return Ok(best);
        }
        h *= 2.0;
    }
}

fn bounds(x: &[Vec3]) -> (Vec3, Vec3) {
    let mut lo = x[0];
    let mut hi = x[0];
    for p in x {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

fn cell_of(p: &Vec3, lo: &Vec3, h: f64) -> (i64, i64, i64) {
    let c = (p - lo) / h;
    (c.x.floor() as i64, c.y.floor() as i64, c.z.floor() as i64)
}

fn adjacent_cell_minimum(x: &[Vec3], lo: &Vec3, h: f64) -> PairDistance {
    let mut cells: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in x.iter().enumerate() {
        cells.entry(cell_of(p, lo, h)).or_default().push(i);
    }
    let rows = par::map_range(x.len(), |i| {
        let (cx, cy, cz) = cell_of(&x[i], lo, h);
        let mut best = NONE;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(members) = cells.get(&(cx + dx, cy + dy, cz + dz)) {
                        for &j in members {
                            if j > i {
                                let d = (x[i] - x[j]).norm();
                                if d < best.distance || (d == best.distance && j < best.j) {
                                    best = PairDistance { distance: d, i, j };
                                }
                            }
                        }
                    }
                }
            }
        }
        best
    });
    rows.into_iter().fold(NONE, better)
}
