//! Star discrepancy: exact in one dimension, grid-enumeration lower bound in
//! general.

use super::PointSet;
use crate::error::{invalid_arg, Error, Result};

/// Default node budget for [`star_discrepancy_lower_bound`].
pub const DEFAULT_STAR_BUDGET: u64 = 1 << 26;

/// Exact one-dimensional star discrepancy
/// `max_i max(i/n - u_(i), u_(i) - (i-1)/n)`.
pub fn star_discrepancy_1d(ps: &PointSet) -> Result<f64> {
    if ps.s() != 1 {
        return Err(invalid_arg(format!(
            "star_discrepancy_1d needs s = 1, got {}",
            ps.s()
        )));
    }
    let mut u = ps.as_slice().to_vec();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    Ok(u.iter()
        .enumerate()
        .map(|(i, &x)| {
            let i = i as f64;
            ((i + 1.0) / n - x).max(x - i / n)
        })
        .fold(0.0, f64::max))
}

/// Maximum local discrepancy over every grid node built from the point
/// coordinates and 1, counting both the open box `[0,v)` and the closed box
/// `[0,v]`. A lower bound on the star discrepancy, exact when `s = 1`.
///
/// If the grid has more than `budget` nodes, the bound is evaluated on an
/// evenly thinned grid instead and returned as the `partial` value of
/// [`Error::BudgetExceeded`].
pub fn star_discrepancy_lower_bound(ps: &PointSet, budget: u64) -> Result<f64> {
    let s = ps.s();
    let grids: Vec<Vec<f64>> = (0..s)
        .map(|j| {
            let mut g = ps.column(j);
            g.push(1.0);
            g.sort_by(f64::total_cmp);
            g.dedup();
            g
        })
        .collect();
    let needed = grids
        .iter()
        .fold(1u64, |acc, g| acc.saturating_mul(g.len() as u64));
    if needed <= budget {
        return Ok(GridSearch::new(ps, &grids).run());
    }
    let per_axis = ((budget as f64).powf(1.0 / s as f64).floor() as usize).max(2);
    let thinned: Vec<Vec<f64>> = grids.iter().map(|g| thin(g, per_axis)).collect();
    let partial = GridSearch::new(ps, &thinned).run();
    Err(Error::BudgetExceeded {
        budget,
        needed,
        partial: Some(partial),
    })
}

/// Evenly spaced ranks of `g`, always keeping the final value 1.
fn thin(g: &[f64], k: usize) -> Vec<f64> {
    if g.len() <= k {
        return g.to_vec();
    }
    let last = g.len() - 1;
    let mut out: Vec<f64> = (1..=k).map(|r| g[(r * last) / k]).collect();
    out.dedup();
    out
}

struct GridSearch<'a> {
    ps: &'a PointSet,
    grids: &'a [Vec<f64>],
    n: f64,
}

impl<'a> GridSearch<'a> {
    fn new(ps: &'a PointSet, grids: &'a [Vec<f64>]) -> Self {
        Self {
            ps,
            grids,
            n: ps.n() as f64,
        }
    }

    fn run(&self) -> f64 {
        let s = self.ps.s();
        let mut order: Vec<usize> = (0..self.ps.n()).collect();
        // Keeping indices sorted by the last coordinate lets the innermost
        // axis be swept with two pointers.
        order.sort_by(|&a, &b| self.ps.row(a)[s - 1].total_cmp(&self.ps.row(b)[s - 1]));
        self.recurse(0, &order, &order, 1.0)
    }

    fn recurse(&self, axis: usize, open: &[usize], closed: &[usize], vol: f64) -> f64 {
        let s = self.ps.s();
        let grid = &self.grids[axis];
        if axis + 1 == s {
            let (mut io, mut ic) = (0, 0);
            let mut best: f64 = 0.0;
            for &v in grid {
                while io < open.len() && self.ps.row(open[io])[axis] < v {
                    io += 1;
                }
                while ic < closed.len() && self.ps.row(closed[ic])[axis] <= v {
                    ic += 1;
                }
                let box_vol = vol * v;
                best = best
                    .max(box_vol - io as f64 / self.n)
                    .max(ic as f64 / self.n - box_vol);
            }
            return best;
        }
        let mut best: f64 = 0.0;
        let mut o = Vec::with_capacity(open.len());
        let mut c = Vec::with_capacity(closed.len());
        for &v in grid {
            o.clear();
            c.clear();
            o.extend(open.iter().copied().filter(|&i| self.ps.row(i)[axis] < v));
            c.extend(closed.iter().copied().filter(|&i| self.ps.row(i)[axis] <= v));
            best = best.max(self.recurse(axis + 1, &o, &c, vol * v));
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmc_points::{pseudo_random, Family};

    fn ps1(u: Vec<f64>) -> PointSet {
        let n = u.len();
        PointSet::new(u, n, 1, Family::PseudoRandom, None).unwrap()
    }

    #[test]
    fn one_dim_examples() {
        assert_eq!(star_discrepancy_1d(&ps1(vec![0.5])).unwrap(), 0.5);
        let n = 10;
        let grid: Vec<f64> = (1..=n).map(|i| (2.0 * i as f64 - 1.0) / (2.0 * n as f64)).collect();
        let d = star_discrepancy_1d(&ps1(grid)).unwrap();
        assert!((d - 0.05).abs() < 1e-15);
        assert_eq!(star_discrepancy_1d(&ps1(vec![0.0; 7])).unwrap(), 1.0);
    }

    #[test]
    fn one_dim_rejects_multivariate() {
        let ps = pseudo_random(4, 2, 1).unwrap();
        assert!(star_discrepancy_1d(&ps).is_err());
    }

    #[test]
    fn single_centre_point() {
        let ps = PointSet::new(vec![0.5, 0.5], 1, 2, Family::PseudoRandom, None).unwrap();
        let d = star_discrepancy_lower_bound(&ps, DEFAULT_STAR_BUDGET).unwrap();
        assert!((d - 0.75).abs() < 1e-15);
    }

    #[test]
    fn lower_bound_is_exact_in_one_dim() {
        for seed in 0..100 {
            let n = 1 + (seed as usize * 7) % 40;
            let ps = pseudo_random(n, 1, seed).unwrap();
            let exact = star_discrepancy_1d(&ps).unwrap();
            let lb = star_discrepancy_lower_bound(&ps, DEFAULT_STAR_BUDGET).unwrap();
            assert!((exact - lb).abs() < 1e-15, "seed {seed}: {exact} vs {lb}");
        }
    }

    #[test]
    fn budget_exceeded_reports_partial_bound() {
        let ps = pseudo_random(40, 4, 3).unwrap();
        match star_discrepancy_lower_bound(&ps, 10_000) {
            Err(Error::BudgetExceeded { partial: Some(p), needed, .. }) => {
                assert_eq!(needed, 41u64.pow(4));
                let full = star_discrepancy_lower_bound(&ps, u64::MAX).unwrap();
                assert!(p > 0.0 && p <= full + 1e-15, "{p} vs {full}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn brute_force_agreement_in_two_dims() {
        // Independent oracle: enumerate nodes directly and count naively.
        let ps = pseudo_random(12, 2, 11).unwrap();
        let mut xs = ps.column(0);
        let mut ys = ps.column(1);
        xs.push(1.0);
        ys.push(1.0);
        let mut best: f64 = 0.0;
        for &a in &xs {
            for &b in &ys {
                let open = ps.rows().filter(|r| r[0] < a && r[1] < b).count() as f64 / 12.0;
                let closed = ps.rows().filter(|r| r[0] <= a && r[1] <= b).count() as f64 / 12.0;
                best = best.max(a * b - open).max(closed - a * b);
            }
        }
        let lb = star_discrepancy_lower_bound(&ps, DEFAULT_STAR_BUDGET).unwrap();
        assert!((best - lb).abs() < 1e-15);
    }
}
