//! Optimal transport between uniform empirical measures.
//!
//! Exact `W_p` (sorting in one dimension, transportation simplex otherwise),
//! log-domain Sinkhorn and the debiased Sinkhorn divergence, and sliced
//! Wasserstein with seeded directions.

mod cost;
mod one_d;
mod simplex;
mod sinkhorn;

use rand::Rng as _;
use rand_distr::StandardNormal;

pub use cost::{CostSpec, Metric};
pub use one_d::wasserstein_1d;
pub use sinkhorn::{sinkhorn_divergence, sinkhorn_entropic, SinkhornOptions, SinkhornResult};

use crate::error::{invalid_arg, Error, Result};
use crate::generators::EmpiricalMeasure;
use crate::reduce::{ordered_map, sum};
use crate::seed::{self, stream};

/// Largest `n * m` the exact LP accepts by default.
pub const DEFAULT_LP_BUDGET: u64 = 512 * 512;

fn same_dim(x: &EmpiricalMeasure, y: &EmpiricalMeasure) -> Result<()> {
    if x.d() != y.d() {
        return Err(invalid_arg(format!("samples live in dimensions {} and {}", x.d(), y.d())));
    }
    Ok(())
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// One-dimensional `W_p` between two measures with `d = 1`.
pub fn wasserstein_1d_measures(x: &EmpiricalMeasure, y: &EmpiricalMeasure, p: f64) -> Result<f64> {
    if x.d() != 1 || y.d() != 1 {
        return Err(invalid_arg(format!(
            "one-dimensional Wasserstein needs d = 1, got {} and {}",
            x.d(),
            y.d()
        )));
    }
    wasserstein_1d(x.as_slice(), y.as_slice(), p)
}

/// Exact `W_p` from the transport linear program, within the default budget.
pub fn wasserstein_lp(x: &EmpiricalMeasure, y: &EmpiricalMeasure, cost: &CostSpec) -> Result<f64> {
    wasserstein_lp_with_budget(x, y, cost, DEFAULT_LP_BUDGET)
}

pub fn wasserstein_lp_with_budget(
    x: &EmpiricalMeasure,
    y: &EmpiricalMeasure,
    cost: &CostSpec,
    budget: u64,
) -> Result<f64> {
    cost.validated()?;
    same_dim(x, y)?;
    let (n, m) = (x.n() as u64, y.n() as u64);
    let needed = n.saturating_mul(m);
    if needed > budget {
        return Err(Error::BudgetExceeded {
            budget,
            needed,
            partial: None,
        });
    }
    let g = gcd(n, m);
    let c = cost.matrix(x.as_slice(), y.as_slice(), x.d());
    let sol = simplex::solve(&c, &vec![m / g; n as usize], &vec![n / g; m as usize])?;
    log::debug!("transport LP {n}x{m} solved in {} pivots", sol.pivots);
    let total = sol.cost / (n * m / g) as f64;
    let total = total.max(0.0);
    Ok(if cost.p == 1.0 { total } else { total.powf(1.0 / cost.p) })
}

/// Exact `W_p`: sorting when `d = 1`, the LP otherwise.
pub fn wasserstein(x: &EmpiricalMeasure, y: &EmpiricalMeasure, cost: &CostSpec) -> Result<f64> {
    same_dim(x, y)?;
    if x.d() == 1 {
        cost.validated()?;
        wasserstein_1d(x.as_slice(), y.as_slice(), cost.p)
    } else {
        wasserstein_lp(x, y, cost)
    }
}

/// How slice directions are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceDirections {
    /// Normalised pseudo-random Gaussians.
    #[default]
    PseudoRandom,
    /// Normalised Gaussians from a scrambled Sobol set (not part of the
    /// usual protocol).
    Qmc,
}

/// `L` unit directions in `R^d`, row-major.
pub fn slice_directions(d: usize, slices: usize, seed: u64, kind: SliceDirections) -> Result<Vec<f64>> {
    if d == 0 || slices == 0 {
        return Err(invalid_arg("need d >= 1 and at least one slice"));
    }
    let raw: Vec<f64> = match kind {
        SliceDirections::PseudoRandom => {
            let mut rng = seed::rng(seed::derive(seed, &[stream::DIRECTIONS]));
            (0..d * slices).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
        }
        SliceDirections::Qmc => {
            let ps = crate::qmc_points::sobol(slices, d, Some(seed::derive(seed, &[stream::DIRECTIONS])))?;
            let spec = crate::generators::GeneratorSpec::GaussianStd(d);
            crate::generators::generate(&spec, &[], &ps, 0)?.into_vec()
        }
    };
    Ok(raw
        .chunks_exact(d)
        .flat_map(|g| {
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            g.iter().map(move |v| if norm > 0.0 { v / norm } else { 1.0 / (d as f64).sqrt() })
        })
        .collect())
}

/// Sliced Wasserstein with pseudo-random directions.
pub fn sliced_wasserstein(
    x: &EmpiricalMeasure,
    y: &EmpiricalMeasure,
    slices: usize,
    p: f64,
    direction_seed: u64,
) -> Result<f64> {
    sliced_wasserstein_with(x, y, slices, p, direction_seed, SliceDirections::PseudoRandom)
}

/// Average of one-dimensional `W_p` over `slices` projections. With `d = 1`
/// every projection is `+-x`, so the plain one-dimensional distance is
/// returned.
pub fn sliced_wasserstein_with(
    x: &EmpiricalMeasure,
    y: &EmpiricalMeasure,
    slices: usize,
    p: f64,
    direction_seed: u64,
    kind: SliceDirections,
) -> Result<f64> {
    same_dim(x, y)?;
    if slices == 0 {
        return Err(invalid_arg("need at least one slice"));
    }
    let d = x.d();
    if d == 1 {
        return wasserstein_1d(x.as_slice(), y.as_slice(), p);
    }
    let dirs = slice_directions(d, slices, direction_seed, kind)?;
    let project = |m: &EmpiricalMeasure, xi: &[f64]| -> Vec<f64> {
        m.rows().map(|r| r.iter().zip(xi).map(|(a, b)| a * b).sum()).collect()
    };
    let per_slice = ordered_map(slices, |l| {
        let xi = &dirs[l * d..(l + 1) * d];
        wasserstein_1d(&project(x, xi), &project(y, xi), p)
    });
    let vals = per_slice.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(sum(vals) / slices as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random(n: usize, d: usize, seed: u64) -> EmpiricalMeasure {
        let mut rng = seed::rng(seed);
        EmpiricalMeasure::new((0..n * d).map(|_| rng.gen::<f64>()).collect(), n, d).unwrap()
    }

    #[test]
    fn lp_small_cases() {
        let cost = CostSpec::default();
        let x = random(9, 3, 1);
        assert!(wasserstein_lp(&x, &x, &cost).unwrap().abs() < 1e-15);
        let a = EmpiricalMeasure::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let b = EmpiricalMeasure::from_rows(&[vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!((wasserstein_lp(&a, &b, &cost).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lp_matches_sorting_in_one_dimension() {
        let mut rng = seed::rng(2);
        for t in 0..40 {
            let n = rng.gen_range(1..=64);
            let m = rng.gen_range(1..=64);
            let x = random(n, 1, 10 + t);
            let y = random(m, 1, 100 + t);
            for p in [1.0, 2.0] {
                let cost = CostSpec::new(Metric::Euclidean, p).unwrap();
                let lp = wasserstein_lp(&x, &y, &cost).unwrap();
                let sorted = wasserstein_1d_measures(&x, &y, p).unwrap();
                assert!((lp - sorted).abs() < 1e-9, "n={n} m={m} p={p}: {lp} vs {sorted}");
            }
        }
    }

    #[test]
    fn lp_triangle_inequality() {
        let cost = CostSpec::default();
        let mut rng = seed::rng(3);
        for t in 0..100 {
            let d = rng.gen_range(1..=3);
            let sizes: Vec<usize> = (0..3).map(|_| rng.gen_range(1..=32)).collect();
            let x = random(sizes[0], d, 1000 + 3 * t);
            let y = random(sizes[1], d, 1001 + 3 * t);
            let z = random(sizes[2], d, 1002 + 3 * t);
            let xz = wasserstein_lp(&x, &z, &cost).unwrap();
            let xy = wasserstein_lp(&x, &y, &cost).unwrap();
            let yz = wasserstein_lp(&y, &z, &cost).unwrap();
            assert!(xz <= xy + yz + 1e-9);
        }
    }

    #[test]
    fn lp_budget() {
        let x = random(30, 2, 4);
        let err = wasserstein_lp_with_budget(&x, &x, &CostSpec::default(), 100).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { needed: 900, .. }));
    }

    #[test]
    fn lp_at_full_budget() {
        let x = random(512, 2, 5);
        let y = random(512, 2, 6);
        let w = wasserstein_lp(&x, &y, &CostSpec::default()).unwrap();
        assert!(w > 0.0 && w < 0.2);
    }

    #[test]
    fn sliced_properties() {
        let x = random(40, 3, 7);
        assert_eq!(sliced_wasserstein(&x, &x, 20, 1.0, 1).unwrap(), 0.0);
        let y = random(25, 3, 8);
        let a = sliced_wasserstein(&x, &y, 50, 2.0, 9).unwrap();
        assert_eq!(a.to_bits(), sliced_wasserstein(&x, &y, 50, 2.0, 9).unwrap().to_bits());
        assert!(sliced_wasserstein_with(&x, &y, 50, 2.0, 9, SliceDirections::Qmc).unwrap() > 0.0);

        let u = random(30, 1, 10);
        let v = random(20, 1, 11);
        assert_eq!(
            sliced_wasserstein(&u, &v, 7, 1.0, 3).unwrap(),
            wasserstein_1d_measures(&u, &v, 1.0).unwrap()
        );
    }

    #[test]
    fn sliced_circle_average() {
        let x = EmpiricalMeasure::from_rows(&[vec![0.0, 0.0]]).unwrap();
        let y = EmpiricalMeasure::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let s = sliced_wasserstein(&x, &y, 100_000, 1.0, 12).unwrap();
        assert!((s - 2.0 / std::f64::consts::PI).abs() < 0.01);
    }

    #[test]
    fn dims_must_agree() {
        let x = random(3, 2, 1);
        let y = random(3, 1, 2);
        assert!(wasserstein(&x, &y, &CostSpec::default()).is_err());
        assert!(wasserstein_1d_measures(&x, &x, 1.0).is_err());
    }
}
