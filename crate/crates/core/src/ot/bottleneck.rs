use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{domain, Error, Result};

use super::brute::for_each_permutation;
use super::{check_cap, DiscreteMeasure};

/// Largest support accepted by [`winf_exact`].
pub const WINF_CAP: usize = 2048;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BottleneckPlan {
    /// `assignment[i]` is the target atom receiving source atom `i`.
    pub assignment: Vec<usize>,
    pub distance: f64,
}

const FREE: usize = usize::MAX;

/// Maximum bipartite matching by Hopcroft–Karp on adjacency lists.
struct Matcher<'a> {
    adj: &'a [Vec<usize>],
    left: Vec<usize>,
    right: Vec<usize>,
    dist: Vec<usize>,
}

impl<'a> Matcher<'a> {
    fn new(adj: &'a [Vec<usize>], n_right: usize) -> Self {
        Matcher {
            adj,
            left: vec![FREE; adj.len()],
            right: vec![FREE; n_right],
            dist: vec![0; adj.len()],
        }
    }

    fn bfs(&mut self) -> bool {
        let mut queue = VecDeque::new();
        let mut found = false;
        for u in 0..self.adj.len() {
            if self.left[u] == FREE {
                self.dist[u] = 0;
                queue.push_back(u);
            } else {
                self.dist[u] = usize::MAX;
            }
        }
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                let w = self.right[v];
                if w == FREE {
                    found = true;
                } else if self.dist[w] == usize::MAX {
                    self.dist[w] = self.dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        found
    }

    fn dfs(&mut self, u: usize) -> bool {
        for k in 0..self.adj[u].len() {
            let v = self.adj[u][k];
            let w = self.right[v];
            if w == FREE || (self.dist[w] == self.dist[u] + 1 && self.dfs(w)) {
                self.left[u] = v;
                self.right[v] = u;
                return true;
            }
        }
        self.dist[u] = usize::MAX;
        false
    }

    fn run(mut self) -> (usize, Vec<usize>) {
        let mut size = 0;
        while self.bfs() {
            for u in 0..self.adj.len() {
                if self.left[u] == FREE && self.dfs(u) {
                    size += 1;
                }
            }
        }
        (size, self.left)
    }
}

fn perfect_matching(d: &[Vec<f64>], threshold: f64) -> Option<Vec<usize>> {
    let n = d.len();
    let adj: Vec<Vec<usize>> = d
        .iter()
        .map(|row| (0..n).filter(|&j| row[j] <= threshold).collect())
        .collect();
    let (size, m) = Matcher::new(&adj, n).run();
    (size == n).then_some(m)
}

fn check_uniform(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
    if mu.len() != nu.len() || !mu.is_uniform() || !nu.is_uniform() {
        return Err(Error::Capability(
            "W∞ is implemented for uniform measures with equally many atoms".into(),
        ));
    }
    Ok(())
}

fn distances(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Vec<Vec<f64>> {
    mu.atoms()
        .iter()
        .map(|x| nu.atoms().iter().map(|y| (x - y).norm()).collect())
        .collect()
}

/// Bottleneck assignment: the smallest pairwise distance `t` for which the
/// graph `{d_ij ≤ t}` has a perfect matching, found by binary search over the
/// sorted distances.
pub fn winf_exact(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(f64, BottleneckPlan)> {
    check_uniform(mu, nu)?;
    check_cap(mu, nu, WINF_CAP)?;
    let d = distances(mu, nu);
    let mut values: Vec<f64> = d.iter().flatten().copied().collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let (mut lo, mut hi) = (0usize, values.len() - 1);
    let mut best = perfect_matching(&d, values[hi]).ok_or_else(|| domain("complete graph must match"))?;
    while lo < hi {
        let mid = (lo + hi) / 2;
        match perfect_matching(&d, values[mid]) {
            Some(m) => {
                best = m;
                hi = mid;
            }
            None => lo = mid + 1,
        }
    }
    let distance = values[hi];
    let best = if best.iter().enumerate().all(|(i, &j)| d[i][j] <= distance) {
        best
    } else {
        perfect_matching(&d, distance).expect("threshold is feasible")
    };
    Ok((
        distance,
        BottleneckPlan {
            assignment: best,
            distance,
        },
    ))
}

/// `min_σ max_i |x_i − y_σ(i)|` over all permutations.
pub fn winf_bruteforce(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    check_uniform(mu, nu)?;
    if mu.len() > super::BRUTE_FORCE_CAP {
        return Err(domain(format!("permutation oracle limited to n <= {}", super::BRUTE_FORCE_CAP)));
    }
    let d = distances(mu, nu);
    let mut best = f64::INFINITY;
    for_each_permutation(mu.len(), |p| {
        let v = p.iter().enumerate().map(|(i, &j)| d[i][j]).fold(0.0, f64::max);
        best = best.min(v);
    });
    Ok(best)
}
