//! Transportation simplex for balanced problems with integer masses.
//!
//! The basis is a spanning tree on the bipartite row/column graph with
//! `n + m - 1` cells (degenerate cells carry zero flow). Prices come from the
//! tree, entering cells from a rotating block search, and the leaving cell
//! from the unique cycle closed by the entering cell.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::reduce::Compensated;

#[derive(Clone, Copy, Debug)]
struct Cell {
    i: usize,
    j: usize,
    flow: u64,
}

pub(crate) struct Solution {
    /// `sum flow_ij c_ij`.
    pub cost: f64,
    pub pivots: usize,
}

struct Tree {
    n: usize,
    m: usize,
    cells: Vec<Cell>,
    /// Basis cells touching each node; rows are `0..n`, columns `n..n+m`.
    adj: Vec<Vec<usize>>,
}

impl Tree {
    fn northwest(supply: &[u64], demand: &[u64]) -> Self {
        let (n, m) = (supply.len(), demand.len());
        let mut s = supply.to_vec();
        let mut d = demand.to_vec();
        let mut tree = Tree {
            n,
            m,
            cells: Vec::with_capacity(n + m - 1),
            adj: vec![Vec::new(); n + m],
        };
        let (mut i, mut j) = (0, 0);
        while i < n && j < m {
            let q = s[i].min(d[j]);
            tree.push(Cell { i, j, flow: q });
            s[i] -= q;
            d[j] -= q;
            if s[i] == 0 && i + 1 < n {
                i += 1;
            } else {
                j += 1;
            }
        }
        debug_assert_eq!(tree.cells.len(), n + m - 1);
        tree
    }

    fn push(&mut self, c: Cell) {
        let k = self.cells.len();
        self.adj[c.i].push(k);
        self.adj[self.n + c.j].push(k);
        self.cells.push(c);
    }

    fn unlink(&mut self, k: usize) {
        let c = self.cells[k];
        for node in [c.i, self.n + c.j] {
            let list = &mut self.adj[node];
            let pos = list.iter().position(|&e| e == k).expect("cell linked");
            list.swap_remove(pos);
        }
    }

    fn replace(&mut self, k: usize, c: Cell) {
        self.unlink(k);
        self.cells[k] = c;
        self.adj[c.i].push(k);
        self.adj[self.n + c.j].push(k);
    }

    fn other(&self, k: usize, node: usize) -> usize {
        let c = self.cells[k];
        if node == c.i {
            self.n + c.j
        } else {
            c.i
        }
    }

    /// Dual prices with `u_0 = 0` so that `u_i + v_j = c_ij` on the basis.
    fn potentials(&self, cost: &[f64], pot: &mut [f64], seen: &mut [bool], queue: &mut VecDeque<usize>) {
        seen.iter_mut().for_each(|s| *s = false);
        pot[0] = 0.0;
        seen[0] = true;
        queue.clear();
        queue.push_back(0);
        while let Some(node) = queue.pop_front() {
            for &k in &self.adj[node] {
                let next = self.other(k, node);
                if !seen[next] {
                    let c = self.cells[k];
                    pot[next] = cost[c.i * self.m + c.j] - pot[node];
                    seen[next] = true;
                    queue.push_back(next);
                }
            }
        }
    }

    /// Basis cells on the tree path from row `i` to column `j`, in order.
    fn path(&self, i: usize, j: usize, parent: &mut [usize], queue: &mut VecDeque<usize>) -> Vec<usize> {
        const NONE: usize = usize::MAX;
        parent.iter_mut().for_each(|p| *p = NONE);
        let target = self.n + j;
        parent[i] = usize::MAX - 1;
        queue.clear();
        queue.push_back(i);
        while let Some(node) = queue.pop_front() {
            if node == target {
                break;
            }
            for &k in &self.adj[node] {
                let next = self.other(k, node);
                if parent[next] == NONE {
                    parent[next] = k;
                    queue.push_back(next);
                }
            }
        }
        let mut edges = Vec::new();
        let mut node = target;
        while node != i {
            let k = parent[node];
            edges.push(k);
            node = self.other(k, node);
        }
        edges.reverse();
        edges
    }
}

/// Minimises `sum c_ij f_ij` subject to row sums `supply` and column sums
/// `demand` (equal totals). `cost` is row-major `n x m`.
pub(crate) fn solve(cost: &[f64], supply: &[u64], demand: &[u64]) -> Result<Solution> {
    let (n, m) = (supply.len(), demand.len());
    debug_assert_eq!(cost.len(), n * m);
    debug_assert_eq!(supply.iter().sum::<u64>(), demand.iter().sum::<u64>());
    let mut tree = Tree::northwest(supply, demand);
    let scale = cost.iter().fold(1.0f64, |a, &c| a.max(c.abs()));
    let eps = 1e-12 * scale;
    let cells = n * m;
    let block = ((cells as f64).sqrt().ceil() as usize).max(16).min(cells);
    let max_pivots = 1000 * (n + m) + 10_000;

    let mut pot = vec![0.0; n + m];
    let mut seen = vec![false; n + m];
    let mut parent = vec![0usize; n + m];
    let mut queue = VecDeque::with_capacity(n + m);
    let mut cursor = 0usize;
    let mut pivots = 0usize;

    loop {
        tree.potentials(cost, &mut pot, &mut seen, &mut queue);
        // block search for an improving cell
        let mut best: Option<(usize, f64)> = None;
        let mut scanned = 0;
        while scanned < cells {
            let stop = (scanned + block).min(cells);
            while scanned < stop {
                let k = cursor;
                cursor += 1;
                if cursor == cells {
                    cursor = 0;
                }
                scanned += 1;
                let (i, j) = (k / m, k % m);
                let red = cost[k] - pot[i] - pot[n + j];
                if red < -eps && best.is_none_or(|(_, b)| red < b) {
                    best = Some((k, red));
                }
            }
            if best.is_some() {
                break;
            }
        }
        let Some((k, _)) = best else { break };
        if pivots >= max_pivots {
            return Err(Error::NotConverged {
                iterations: pivots,
                marginal_error: f64::NAN,
            });
        }
        pivots += 1;

        let (ei, ej) = (k / m, k % m);
        let path = tree.path(ei, ej, &mut parent, &mut queue);
        // edges at even positions lose flow
        let (mut leave, mut theta) = (path[0], u64::MAX);
        for &e in path.iter().step_by(2) {
            if tree.cells[e].flow < theta {
                theta = tree.cells[e].flow;
                leave = e;
            }
        }
        for (pos, &e) in path.iter().enumerate() {
            if pos % 2 == 0 {
                tree.cells[e].flow -= theta;
            } else {
                tree.cells[e].flow += theta;
            }
        }
        tree.replace(leave, Cell { i: ei, j: ej, flow: theta });
    }

    let mut acc = Compensated::default();
    for c in &tree.cells {
        if c.flow > 0 {
            acc.add(c.flow as f64 * cost[c.i * m + c.j]);
        }
    }
    Ok(Solution {
        cost: acc.value(),
        pivots,
    })
}
