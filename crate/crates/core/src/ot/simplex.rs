//! Primal network simplex on the complete bipartite transport graph.
//!
//! Arcs are implicit: arc `e < n1 n2` joins source `e / n2` to sink
//! `n1 + e % n2` and its cost is recomputed on demand. The spanning tree is
//! kept as parent / thread / successor-count arrays, with the flow of each
//! tree arc stored at its lower endpoint. Supplies are integers so tree
//! flows are exact; costs and potentials are floating point.

use crate::error::{Error, Result};
use crate::linalg::Vec3;

const DIR_UP: i8 = 1;
const DIR_DOWN: i8 = -1;
const MIN_BLOCK: usize = 10;

pub(crate) struct Solution {
    /// `(source, sink, flow)` for every real arc with positive flow.
    pub arcs: Vec<(usize, usize, i64)>,
}

struct Simplex<'a> {
    xs: &'a [Vec3],
    ys: &'a [Vec3],
    n1: usize,
    n2: usize,
    arc_num: usize,
    root: usize,
    art_cost: f64,
    tol: f64,
    supply_sign: Vec<bool>,
    in_tree: Vec<u64>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    pred_dir: Vec<i8>,
    pred_flow: Vec<i64>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    pi: Vec<f64>,
    block: usize,
    next_arc: usize,
    dirty: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl<'a> Simplex<'a> {
    fn source(&self, e: usize) -> usize {
        if e < self.arc_num {
            e / self.n2
        } else {
            let u = e - self.arc_num;
            if self.supply_sign[u] { u } else { self.root }
        }
    }

    fn target(&self, e: usize) -> usize {
        if e < self.arc_num {
            self.n1 + e % self.n2
        } else {
            let u = e - self.arc_num;
            if self.supply_sign[u] { self.root } else { u }
        }
    }

    fn cost(&self, e: usize) -> f64 {
        if e < self.arc_num {
            (self.xs[e / self.n2] - self.ys[e % self.n2]).norm()
        } else if self.supply_sign[e - self.arc_num] {
            0.0
        } else {
            self.art_cost
        }
    }

    fn tree_contains(&self, e: usize) -> bool {
        self.in_tree[e >> 6] & (1 << (e & 63)) != 0
    }

    fn set_tree(&mut self, e: usize, on: bool) {
        if e >= self.arc_num {
            return;
        }
        if on {
            self.in_tree[e >> 6] |= 1 << (e & 63);
        } else {
            self.in_tree[e >> 6] &= !(1 << (e & 63));
        }
    }

    fn new(xs: &'a [Vec3], ys: &'a [Vec3], supply: &[i64]) -> Self {
        let n1 = xs.len();
        let n2 = ys.len();
        let node_num = n1 + n2;
        let arc_num = n1 * n2;
        let mut max_cost: f64 = 0.0;
        for x in xs {
            for y in ys {
                max_cost = max_cost.max((x - y).norm());
            }
        }
        let art_cost = (max_cost + 1.0) * node_num as f64;
        let root = node_num;
        let mut s = Simplex {
            xs,
            ys,
            n1,
            n2,
            arc_num,
            root,
            art_cost,
            tol: 64.0 * f64::EPSILON * art_cost,
            supply_sign: supply.iter().map(|&b| b >= 0).collect(),
            in_tree: vec![0; arc_num.div_ceil(64)],
            parent: vec![root; node_num + 1],
            pred: vec![NONE; node_num + 1],
            pred_dir: vec![DIR_UP; node_num + 1],
            pred_flow: vec![0; node_num + 1],
            thread: vec![0; node_num + 1],
            rev_thread: vec![0; node_num + 1],
            succ_num: vec![1; node_num + 1],
            last_succ: vec![0; node_num + 1],
            pi: vec![0.0; node_num + 1],
            block: ((arc_num as f64).sqrt().ceil() as usize).max(MIN_BLOCK),
            next_arc: 0,
            dirty: Vec::new(),
        };
        for u in 0..node_num {
            s.pred[u] = arc_num + u;
            s.thread[u] = u + 1;
            s.rev_thread[u + 1] = u;
            s.last_succ[u] = u;
            if supply[u] >= 0 {
                s.pred_dir[u] = DIR_UP;
                s.pi[u] = 0.0;
                s.pred_flow[u] = supply[u];
            } else {
                s.pred_dir[u] = DIR_DOWN;
                s.pi[u] = art_cost;
                s.pred_flow[u] = -supply[u];
            }
        }
        s.parent[root] = NONE;
        s.pred[root] = NONE;
        s.thread[root] = 0;
        s.rev_thread[0] = root;
        s.succ_num[root] = node_num + 1;
        s.last_succ[root] = root - 1;
        s.pi[root] = 0.0;
        s
    }

    fn reduced(&self, e: usize) -> f64 {
        self.cost(e) + self.pi[self.source(e)] - self.pi[self.target(e)]
    }

    /// Block search: the most negative reduced cost within the first block
    /// that contains one, scanning cyclically from the last entering arc.
    fn find_entering(&mut self) -> Option<usize> {
        let mut min = -self.tol;
        let mut best = NONE;
        let mut cnt = self.block;
        let m = self.arc_num;
        let mut e = self.next_arc;
        for _ in 0..m {
            if !self.tree_contains(e) {
                let c = self.reduced(e);
                if c < min {
                    min = c;
                    best = e;
                }
            }
            e += 1;
            if e == m {
                e = 0;
            }
            cnt -= 1;
            if cnt == 0 {
                if best != NONE {
                    break;
                }
                cnt = self.block;
            }
        }
        if best == NONE {
            return None;
        }
        self.next_arc = e;
        Some(best)
    }

    fn find_join(&self, in_arc: usize) -> usize {
        let mut u = self.source(in_arc);
        let mut v = self.target(in_arc);
        while u != v {
            if self.succ_num[u] < self.succ_num[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        u
    }

    /// Returns `(delta, u_out, u_in, v_in)`, using the strongly feasible
    /// rule: strict comparison on the source side, non-strict on the sink side.
    fn find_leaving(&self, in_arc: usize, join: usize) -> Option<(i64, usize, usize, usize)> {
        let first = self.source(in_arc);
        let second = self.target(in_arc);
        let mut delta = i64::MAX;
        let mut u_out = NONE;
        let mut side = 0;
        let mut u = first;
        while u != join {
            if self.pred_dir[u] == DIR_UP && self.pred_flow[u] < delta {
                delta = self.pred_flow[u];
                u_out = u;
                side = 1;
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != join {
            if self.pred_dir[u] == DIR_DOWN && self.pred_flow[u] <= delta {
                delta = self.pred_flow[u];
                u_out = u;
                side = 2;
            }
            u = self.parent[u];
        }
        match side {
            1 => Some((delta, u_out, first, second)),
            2 => Some((delta, u_out, second, first)),
            _ => None,
        }
    }

    fn change_flow(&mut self, in_arc: usize, join: usize, delta: i64) {
        if delta == 0 {
            return;
        }
        let mut u = self.source(in_arc);
        while u != join {
            self.pred_flow[u] -= self.pred_dir[u] as i64 * delta;
            u = self.parent[u];
        }
        let mut u = self.target(in_arc);
        while u != join {
            self.pred_flow[u] += self.pred_dir[u] as i64 * delta;
            u = self.parent[u];
        }
    }

    fn update_tree(&mut self, in_arc: usize, join: usize, u_in: usize, v_in: usize, u_out: usize, in_flow: i64) {
        let old_rev_thread = self.rev_thread[u_out];
        let old_succ_num = self.succ_num[u_out];
        let old_last_succ = self.last_succ[u_out];
        let v_out = self.parent[u_out];
        let in_dir = if u_in == self.source(in_arc) { DIR_UP } else { DIR_DOWN };

        if u_in == u_out {
            self.parent[u_in] = v_in;
            self.pred[u_in] = in_arc;
            self.pred_dir[u_in] = in_dir;
            self.pred_flow[u_in] = in_flow;
            if self.thread[v_in] != u_out {
                let mut after = self.thread[old_last_succ];
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
                after = self.thread[v_in];
                self.thread[v_in] = u_out;
                self.rev_thread[u_out] = v_in;
                self.thread[old_last_succ] = after;
                self.rev_thread[after] = old_last_succ;
            }
        } else {
            let thread_continue = if old_rev_thread == v_in {
                self.thread[old_last_succ]
            } else {
                self.thread[v_in]
            };
            let mut stem = u_in;
            let mut par_stem = v_in;
            let mut last = self.last_succ[u_in];
            let mut after = self.thread[last];
            self.thread[v_in] = u_in;
            self.dirty.clear();
            self.dirty.push(v_in);
            while stem != u_out {
                let next_stem = self.parent[stem];
                self.thread[last] = next_stem;
                self.dirty.push(last);
                let before = self.rev_thread[stem];
                self.thread[before] = after;
                self.rev_thread[after] = before;
                self.parent[stem] = par_stem;
                par_stem = stem;
                stem = next_stem;
                last = if self.last_succ[stem] == self.last_succ[par_stem] {
                    self.rev_thread[par_stem]
                } else {
                    self.last_succ[stem]
                };
                after = self.thread[last];
            }
            self.parent[u_out] = par_stem;
            self.thread[last] = thread_continue;
            self.rev_thread[thread_continue] = last;
            self.last_succ[u_out] = last;
            if old_rev_thread != v_in {
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
            }
            for k in 0..self.dirty.len() {
                let u = self.dirty[k];
                let t = self.thread[u];
                self.rev_thread[t] = u;
            }
            let mut tmp_sc = 0usize;
            let tmp_ls = self.last_succ[u_out];
            let mut u = u_out;
            while u != u_in {
                let p = self.parent[u];
                self.pred[u] = self.pred[p];
                self.pred_dir[u] = -self.pred_dir[p];
                self.pred_flow[u] = self.pred_flow[p];
                tmp_sc = tmp_sc + self.succ_num[u] - self.succ_num[p];
                self.succ_num[u] = tmp_sc;
                self.last_succ[p] = tmp_ls;
                u = p;
            }
            self.pred[u_in] = in_arc;
            self.pred_dir[u_in] = in_dir;
            self.pred_flow[u_in] = in_flow;
            self.succ_num[u_in] = old_succ_num;
        }

        let up_limit_out = if self.last_succ[join] == v_in { join } else { NONE };
        let last_succ_out = self.last_succ[u_out];
        let mut u = v_in;
        while u != NONE && self.last_succ[u] == v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }
        if join != old_rev_thread && v_in != old_rev_thread {
            let mut u = v_out;
            while u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = old_rev_thread;
                u = self.parent[u];
            }
        } else if last_succ_out != old_last_succ {
            let mut u = v_out;
            while u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = last_succ_out;
                u = self.parent[u];
            }
        }
        let mut u = v_in;
        while u != join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u];
        }
        let mut u = v_out;
        while u != join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u];
        }
    }

    fn update_potential(&mut self, in_arc: usize, u_in: usize, v_in: usize) {
        let sigma = self.pi[v_in] - self.pi[u_in] - self.pred_dir[u_in] as f64 * self.cost(in_arc);
        let end = self.thread[self.last_succ[u_in]];
        let mut u = u_in;
        while u != end {
            self.pi[u] += sigma;
            u = self.thread[u];
        }
    }

    fn run(&mut self) -> Result<()> {
        while let Some(in_arc) = self.find_entering() {
            let join = self.find_join(in_arc);
            let (delta, u_out, u_in, v_in) = self.find_leaving(in_arc, join).ok_or_else(|| Error::Numerical {
                message: "transport problem is unbounded".into(),
                condition: f64::INFINITY,
            })?;
            self.change_flow(in_arc, join, delta);
            let leaving = self.pred[u_out];
            self.set_tree(leaving, false);
            self.set_tree(in_arc, true);
            self.update_tree(in_arc, join, u_in, v_in, u_out, delta);
            self.update_potential(in_arc, u_in, v_in);
        }
        for u in 0..self.root {
            if self.pred[u] >= self.arc_num && self.pred_flow[u] != 0 {
                return Err(Error::Numerical {
                    message: "artificial arc carries flow at optimum".into(),
                    condition: f64::INFINITY,
                });
            }
        }
        Ok(())
    }
}

/// Optimal transport between integer supplies on `xs` and demands on `ys`;
/// `supply` and `demand` must have the same total.
pub(crate) fn solve(xs: &[Vec3], ys: &[Vec3], supply: &[i64], demand: &[i64]) -> Result<Solution> {
    debug_assert_eq!(supply.iter().sum::<i64>(), demand.iter().sum::<i64>());
    let mut b: Vec<i64> = supply.to_vec();
    b.extend(demand.iter().map(|d| -d));
    let mut s = Simplex::new(xs, ys, &b);
    s.run()?;
    let mut arcs: Vec<(usize, usize, i64)> = (0..s.root)
        .filter(|&u| s.pred[u] < s.arc_num && s.pred_flow[u] > 0)
        .map(|u| {
            let e = s.pred[u];
            (e / s.n2, e % s.n2, s.pred_flow[u])
        })
        .collect();
    arcs.sort_unstable();
    Ok(Solution { arcs })
}
