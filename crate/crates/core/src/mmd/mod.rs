//! Kernels and squared maximum mean discrepancy estimators.
//!
//! Rows of both samples are put in lexicographic order before any kernel
//! sum, and the cross term always runs with the lexicographically smaller
//! sample first. Together with fixed-block compensated summation this makes
//! every estimator invariant to row order and exactly symmetric in its two
//! arguments, independent of thread count.

mod kernel;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};
use crate::generators::{generate, EmpiricalMeasure, GeneratorSpec};
use crate::qmc_points::PointSet;
use crate::reduce::{blocked_sum, Compensated};

pub use kernel::{KernelKind, KernelSpec, MaternNu};

/// Which MMD² estimator to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MmdEstimator {
    /// Off-diagonal within-sample sums over `n^2` and `m^2`.
    #[default]
    Plugin,
    /// Same normalisation with the diagonal included.
    VStatistic,
    /// Off-diagonal sums over `n(n-1)` and `m(m-1)`.
    UStatistic,
}

/// Rows of `m` in lexicographic order (by `total_cmp`).
fn sorted_rows(m: &EmpiricalMeasure) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..m.n()).collect();
    idx.sort_by(|&a, &b| lex_cmp(m.row(a), m.row(b)));
    let mut out = Vec::with_capacity(m.as_slice().len());
    for i in idx {
        out.extend_from_slice(m.row(i));
    }
    out
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| a.len().cmp(&b.len()))
}

/// `sum_{i<j} k(x_i, x_j)`.
fn upper_sum(x: &[f64], d: usize, k: &KernelSpec) -> f64 {
    let n = x.len() / d;
    blocked_sum(n, |start, end| {
        let mut acc = Compensated::default();
        for i in start..end {
            let xi = &x[i * d..(i + 1) * d];
            acc.add(k.row_sum(xi, &x[(i + 1) * d..]));
        }
        acc.value()
    })
}

/// `sum_{i,j} k(x_i, y_j)`.
fn cross_sum(x: &[f64], y: &[f64], d: usize, k: &KernelSpec) -> f64 {
    let n = x.len() / d;
    blocked_sum(n, |start, end| {
        let mut acc = Compensated::default();
        for xi in x[start * d..end * d].chunks_exact(d) {
            acc.add(k.row_sum(xi, y));
        }
        acc.value()
    })
}

struct Sums {
    /// Off-diagonal within-sample sums (both orderings counted).
    sxx: f64,
    syy: f64,
    cross: f64,
    n: f64,
    m: f64,
}

fn kernel_sums(x: &EmpiricalMeasure, y: &EmpiricalMeasure, k: &KernelSpec) -> Result<Sums> {
    if x.d() != y.d() {
        return Err(invalid_arg(format!(
            "samples live in dimensions {} and {}",
            x.d(),
            y.d()
        )));
    }
    let d = x.d();
    let xs = sorted_rows(x);
    let ys = sorted_rows(y);
    let sxx = 2.0 * upper_sum(&xs, d, k);
    let syy = 2.0 * upper_sum(&ys, d, k);
    let cross = if lex_cmp(&xs, &ys).is_le() {
        cross_sum(&xs, &ys, d, k)
    } else {
        cross_sum(&ys, &xs, d, k)
    };
    Ok(Sums {
        sxx,
        syy,
        cross,
        n: x.n() as f64,
        m: y.n() as f64,
    })
}

/// Plug-in MMD² with the diagonal excluded from the within-sample sums and
/// `n^2`, `m^2` normalisation. Can be negative for tiny samples.
pub fn mmd2_plugin(x: &EmpiricalMeasure, y: &EmpiricalMeasure, k: &KernelSpec) -> Result<f64> {
    mmd2_plugin_with(x, y, k, false)
}

/// Plug-in estimator, optionally adding the diagonal (the V-statistic).
pub fn mmd2_plugin_with(
    x: &EmpiricalMeasure,
    y: &EmpiricalMeasure,
    k: &KernelSpec,
    include_diagonal: bool,
) -> Result<f64> {
    let s = kernel_sums(x, y, k)?;
    let (mut sxx, mut syy) = (s.sxx, s.syy);
    if include_diagonal {
        sxx += s.n * k.diagonal();
        syy += s.m * k.diagonal();
    }
    Ok((sxx / (s.n * s.n) + syy / (s.m * s.m)) - 2.0 * s.cross / (s.n * s.m))
}

/// Unbiased U-statistic. Needs at least two rows on each side.
pub fn mmd2_u(x: &EmpiricalMeasure, y: &EmpiricalMeasure, k: &KernelSpec) -> Result<f64> {
    if x.n() < 2 || y.n() < 2 {
        return Err(Error::InsufficientData(format!(
            "U-statistic needs n, m >= 2, got {} and {}",
            x.n(),
            y.n()
        )));
    }
    let s = kernel_sums(x, y, k)?;
    Ok((s.sxx / (s.n * (s.n - 1.0)) + s.syy / (s.m * (s.m - 1.0))) - 2.0 * s.cross / (s.n * s.m))
}

pub fn mmd2(x: &EmpiricalMeasure, y: &EmpiricalMeasure, k: &KernelSpec, est: MmdEstimator) -> Result<f64> {
    match est {
        MmdEstimator::Plugin => mmd2_plugin_with(x, y, k, false),
        MmdEstimator::VStatistic => mmd2_plugin_with(x, y, k, true),
        MmdEstimator::UStatistic => mmd2_u(x, y, k),
    }
}

/// Finite-difference gradient, with a per-coordinate flag telling whether
/// the one-sided fallback was used.
#[derive(Clone, Debug, PartialEq)]
pub struct FdGradient {
    pub grad: Vec<f64>,
    pub one_sided: Vec<bool>,
}

/// `1e-4 (1 + |theta_j|)` per coordinate.
pub fn default_fd_steps(theta: &[f64]) -> Vec<f64> {
    theta.iter().map(|t| 1e-4 * (1.0 + t.abs())).collect()
}

/// Central differences of `f`. When one side of coordinate `j` is outside
/// the admissible set (`f` returns `InvalidParameter`), falls back to the
/// one-sided difference against `f(theta)`.
pub fn central_difference<F>(f: F, theta: &[f64], steps: &[f64]) -> Result<FdGradient>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if steps.len() != theta.len() {
        return Err(invalid_arg("one step per coordinate expected"));
    }
    let mut f0: Option<f64> = None;
    let mut centre = |f: &F| -> Result<f64> {
        if f0.is_none() {
            f0 = Some(f(theta)?);
        }
        Ok(f0.unwrap_or_default())
    };
    let mut grad = Vec::with_capacity(theta.len());
    let mut one_sided = Vec::with_capacity(theta.len());
    let mut probe = theta.to_vec();
    for j in 0..theta.len() {
        let h = steps[j];
        probe[j] = theta[j] + h;
        let plus = inadmissible_to_none(f(&probe))?;
        probe[j] = theta[j] - h;
        let minus = inadmissible_to_none(f(&probe))?;
        probe[j] = theta[j];
        let (g, flag) = match (plus, minus) {
            (Some(p), Some(m)) => ((p - m) / (2.0 * h), false),
            (Some(p), None) => ((p - centre(&f)?) / h, true),
            (None, Some(m)) => ((centre(&f)? - m) / h, true),
            (None, None) => {
                return Err(crate::error::invalid_param(format!(
                    "both perturbations of coordinate {j} are inadmissible"
                )))
            }
        };
        grad.push(g);
        one_sided.push(flag);
    }
    Ok(FdGradient { grad, one_sided })
}

fn inadmissible_to_none(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::InvalidParameter(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Gradient of `theta -> mmd2_plugin(G_theta(ps), y)` by central
/// differences, reusing `ps` at every perturbed parameter.
pub fn mmd2_grad_theta(
    spec: &GeneratorSpec,
    theta: &[f64],
    ps: &PointSet,
    y: &EmpiricalMeasure,
    k: &KernelSpec,
    steps: Option<&[f64]>,
    fallback_seed: u64,
) -> Result<FdGradient> {
    spec.check_params(theta)?;
    let default;
    let steps = match steps {
        Some(s) => s,
        None => {
            default = default_fd_steps(theta);
            &default
        }
    };
    let objective = |t: &[f64]| -> Result<f64> {
        let x = generate(spec, t, ps, fallback_seed)?;
        mmd2_plugin(&x, y, k)
    };
    central_difference(objective, theta, steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmc_points::{pseudo_random, sobol};

    fn gaussian(n: usize, d: usize, shift: f64, seed: u64) -> EmpiricalMeasure {
        let ps = pseudo_random(n, d, seed).unwrap();
        let m = generate(&GeneratorSpec::GaussianStd(d), &[], &ps, 0).unwrap();
        EmpiricalMeasure::new(m.as_slice().iter().map(|v| v + shift).collect(), n, d).unwrap()
    }

    fn naive(x: &EmpiricalMeasure, y: &EmpiricalMeasure, k: &KernelSpec, u: bool) -> f64 {
        let within = |a: &EmpiricalMeasure| {
            let mut s = 0.0;
            for i in 0..a.n() {
                for j in 0..a.n() {
                    if i != j {
                        s += k.eval(a.row(i), a.row(j)).unwrap();
                    }
                }
            }
            s
        };
        let mut c = 0.0;
        for i in 0..x.n() {
            for j in 0..y.n() {
                c += k.eval(x.row(i), y.row(j)).unwrap();
            }
        }
        let (n, m) = (x.n() as f64, y.n() as f64);
        let (dn, dm) = if u { (n * (n - 1.0), m * (m - 1.0)) } else { (n * n, m * m) };
        within(x) / dn + within(y) / dm - 2.0 * c / (n * m)
    }

    #[test]
    fn single_points() {
        let k = KernelSpec::squared_exponential(1.0, 1.0).unwrap();
        let x = EmpiricalMeasure::new(vec![0.3], 1, 1).unwrap();
        assert_eq!(mmd2_plugin(&x, &x, &k).unwrap(), -2.0);
        let y = EmpiricalMeasure::new(vec![1.3], 1, 1).unwrap();
        assert!((mmd2_plugin(&x, &y, &k).unwrap() + 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!(matches!(mmd2_u(&x, &y, &k), Err(Error::InsufficientData(_))));
        // V-statistic of identical singletons vanishes
        assert_eq!(mmd2_plugin_with(&x, &x, &k, true).unwrap(), 0.0);
    }

    #[test]
    fn u_statistic_two_points() {
        let k = KernelSpec::squared_exponential(1.3, 0.9).unwrap();
        let x = EmpiricalMeasure::new(vec![0.1, 0.7], 2, 1).unwrap();
        let k12 = k.eval(&[0.1], &[0.7]).unwrap();
        let got = mmd2_u(&x, &x, &k).unwrap();
        assert!((got - (k12 - k.diagonal())).abs() < 1e-14);
    }

    #[test]
    fn matches_naive_loops() {
        let k = KernelSpec::matern(MaternNu::FiveHalves, 1.2, 0.8).unwrap();
        for (n, m, seed) in [(2, 3, 1), (16, 16, 2), (7, 13, 3), (16, 5, 4)] {
            let x = gaussian(n, 3, 0.0, seed);
            let y = gaussian(m, 3, 0.4, seed + 100);
            assert!((mmd2_plugin(&x, &y, &k).unwrap() - naive(&x, &y, &k, false)).abs() < 1e-12);
            assert!((mmd2_u(&x, &y, &k).unwrap() - naive(&x, &y, &k, true)).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_symmetry_and_permutation_invariance() {
        let k = KernelSpec::default_for_dim(2);
        let x = gaussian(300, 2, 0.0, 5);
        let y = gaussian(200, 2, 0.5, 6);
        let xy = mmd2_plugin(&x, &y, &k).unwrap();
        assert_eq!(xy.to_bits(), mmd2_plugin(&y, &x, &k).unwrap().to_bits());
        let rev: Vec<usize> = (0..300).rev().collect();
        let xr = x.select(&rev).unwrap();
        assert_eq!(xy.to_bits(), mmd2_plugin(&xr, &y, &k).unwrap().to_bits());
        assert_eq!(mmd2_u(&x, &y, &k).unwrap().to_bits(), mmd2_u(&y, &xr, &k).unwrap().to_bits());
    }

    #[test]
    fn separation_and_consistency() {
        let k = KernelSpec::squared_exponential(1.0, 1.5).unwrap();
        let n = 1 << 12;
        let x = gaussian(n, 1, 0.0, 10);
        let y = gaussian(n, 1, 0.0, 11);
        let z = gaussian(n, 1, 1.0, 12);
        assert!(mmd2_plugin(&x, &y, &k).unwrap().abs() < 0.01);
        assert!(mmd2_plugin(&x, &z, &k).unwrap() > 0.05);
    }

    #[test]
    fn u_minus_plugin_identity() {
        let k = KernelSpec::squared_exponential(1.0, 0.6).unwrap();
        let x = gaussian(9, 2, 0.0, 20);
        let y = gaussian(12, 2, 0.1, 21);
        let within = |a: &EmpiricalMeasure| {
            let n = a.n() as f64;
            2.0 * upper_sum(&sorted_rows(a), 2, &k) * (1.0 / (n * (n - 1.0)) - 1.0 / (n * n))
        };
        let diff = mmd2_u(&x, &y, &k).unwrap() - mmd2_plugin(&x, &y, &k).unwrap();
        assert!((diff - within(&x) - within(&y)).abs() < 1e-12);
    }

    #[test]
    fn gradient_of_theta_free_generator_is_zero() {
        let ps = sobol(64, 2, Some(1)).unwrap();
        let y = gaussian(64, 2, 0.0, 1);
        let g = mmd2_grad_theta(&GeneratorSpec::Uniform(2), &[], &ps, &y, &KernelSpec::default_for_dim(2), None, 0)
            .unwrap();
        assert!(g.grad.is_empty());
    }

    #[test]
    fn location_gradient_sign() {
        let spec = GeneratorSpec::GandK(1);
        let star = [3.0, 1.0, 1.0, 0.5, 0.0];
        let y = generate(&spec, &star, &sobol(512, 1, Some(3)).unwrap(), 0).unwrap();
        let ps = sobol(512, 1, Some(4)).unwrap();
        let k = KernelSpec::default_for_dim(1);
        for (shift, sign) in [(1.0, 1.0), (-1.0, -1.0)] {
            let mut th = star;
            th[0] += shift;
            let g = mmd2_grad_theta(&spec, &th, &ps, &y, &k, None, 0).unwrap();
            assert!(g.grad[0] * sign > 0.0, "shift {shift}: {:?}", g.grad);
        }
    }

    #[test]
    fn one_sided_at_boundary() {
        // the next variant of b would be non-positive
        let f = |t: &[f64]| {
            if t[0] <= 0.0 {
                Err(crate::error::invalid_param("b <= 0"))
            } else {
                Ok(t[0] * t[0])
            }
        };
        let g = central_difference(f, &[1e-5], &[2e-5]).unwrap();
        assert!(g.one_sided[0]);
        assert!((g.grad[0] - 4e-5).abs() < 1e-9);
        let g = central_difference(f, &[1.0], &[1e-4]).unwrap();
        assert!(!g.one_sided[0] && (g.grad[0] - 2.0).abs() < 1e-8);
    }
}
