use crate::error::{domain, Result};
use crate::linalg::compensated_sum;

use super::DiscreteMeasure;

/// Largest support accepted by the permutation oracles.
pub const BRUTE_FORCE_CAP: usize = 8;

/// Calls `f` on every permutation of `0..n` (Heap's algorithm).
pub(crate) fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut p: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    f(&p);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(c[i], i);
            }
            f(&p);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// `W1` between uniform measures of equal size as the minimum over
/// permutations; the extreme points of the transport polytope are
/// permutation matrices in this case.
pub fn w1_bruteforce(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    let n = mu.len();
    if n != nu.len() || !mu.is_uniform() || !nu.is_uniform() {
        return Err(domain("permutation oracle needs uniform measures of equal size"));
    }
    if n > BRUTE_FORCE_CAP {
        return Err(domain(format!("permutation oracle limited to n <= {BRUTE_FORCE_CAP}")));
    }
    let d: Vec<Vec<f64>> = mu
        .atoms()
        .iter()
        .map(|x| nu.atoms().iter().map(|y| (x - y).norm()).collect())
        .collect();
    let mut best = f64::INFINITY;
    for_each_permutation(n, |p| {
        let c = compensated_sum(p.iter().enumerate().map(|(i, &j)| d[i][j]));
        best = best.min(c);
    });
    Ok(best / n as f64)
}
