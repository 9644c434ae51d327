use serde::{Deserialize, Serialize};

use super::CostSpec;
use crate::error::{invalid_arg, invalid_param, Error, Result};
use crate::generators::EmpiricalMeasure;
use crate::reduce::{ordered_map, Compensated};

/// Outcome of an entropic OT solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinkhornResult {
    /// `<C, P> + lambda KL(P | a x b)` at the final plan.
    pub value: f64,
    pub iterations: usize,
    /// Largest absolute row-marginal violation (columns are exact).
    pub marginal_error: f64,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinkhornOptions {
    pub lambda: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> f64 {
    1e-9
}

fn default_max_iter() -> usize {
    10_000
}

impl SinkhornOptions {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(invalid_param(format!("regularisation must be > 0, got {}", self.lambda)));
        }
        if !(self.tol > 0.0) {
            return Err(invalid_param(format!("tolerance must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(invalid_param("max_iter must be at least 1"));
        }
        Ok(())
    }
}

fn lex_le(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> bool {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| a.n().cmp(&b.n()))
        .is_le()
}

/// `-lambda log sum_k exp(w + (h_k - c_k) / lambda)`.
fn soft_min(costs: &[f64], h: &[f64], log_w: f64, lambda: f64) -> f64 {
    let mut hi = f64::NEG_INFINITY;
    for (c, hk) in costs.iter().zip(h) {
        hi = hi.max((hk - c) / lambda);
    }
    let s: f64 = costs.iter().zip(h).map(|(c, hk)| ((hk - c) / lambda - hi).exp()).sum();
    -lambda * (log_w + hi + s.ln())
}

/// Log-domain Sinkhorn between uniform measures on `x` and `y`.
///
/// Runs on the arguments in a canonical order, so swapping `x` and `y` gives
/// a bit-identical result.
pub fn sinkhorn_entropic(
    x: &EmpiricalMeasure,
    y: &EmpiricalMeasure,
    cost: &CostSpec,
    opts: &SinkhornOptions,
) -> Result<SinkhornResult> {
    opts.validate()?;
    cost.validated()?;
    if x.d() != y.d() {
        return Err(invalid_arg(format!("samples live in dimensions {} and {}", x.d(), y.d())));
    }
    let (x, y) = if lex_le(x, y) { (x, y) } else { (y, x) };
    let (n, m, d) = (x.n(), y.n(), x.d());
    let lambda = opts.lambda;
    let c = cost.matrix(x.as_slice(), y.as_slice(), d);
    let ct = {
        let mut t = vec![0.0; n * m];
        for i in 0..n {
            for j in 0..m {
                t[j * n + i] = c[i * m + j];
            }
        }
        t
    };
    let (a, b) = (1.0 / n as f64, 1.0 / m as f64);
    let (log_a, log_b) = (a.ln(), b.ln());
    let update_f = |g: &[f64]| ordered_map(n, |i| soft_min(&c[i * m..(i + 1) * m], g, log_b, lambda));
    let update_g = |f: &[f64]| ordered_map(m, |j| soft_min(&ct[j * n..(j + 1) * n], f, log_a, lambda));

    let mut f = update_f(&vec![0.0; m]);
    let mut g = update_g(&f);
    let mut iterations = 1;
    let (converged, marginal_error, row_mass) = loop {
        // the next f-update reveals the row sums of the current plan
        let f_next = update_f(&g);
        let row_mass: Vec<f64> = f.iter().zip(&f_next).map(|(fo, fn_)| a * ((fo - fn_) / lambda).exp()).collect();
        let err = row_mass.iter().map(|r| (r - a).abs()).fold(0.0, f64::max);
        if err <= opts.tol || iterations >= opts.max_iter || !err.is_finite() {
            break (err <= opts.tol, err, row_mass);
        }
        f = f_next;
        g = update_g(&f);
        iterations += 1;
    };

    let mut acc = Compensated::default();
    for (r, fi) in row_mass.iter().zip(&f) {
        acc.add(r * fi);
    }
    for gj in &g {
        acc.add(b * gj);
    }
    Ok(SinkhornResult {
        value: acc.value(),
        iterations,
        marginal_error,
        converged,
    })
}

/// Debiased Sinkhorn divergence. A non-converged sub-solve is an error.
pub fn sinkhorn_divergence(
    x: &EmpiricalMeasure,
    y: &EmpiricalMeasure,
    cost: &CostSpec,
    opts: &SinkhornOptions,
) -> Result<f64> {
    let solve = |p: &EmpiricalMeasure, q: &EmpiricalMeasure| -> Result<f64> {
        let r = sinkhorn_entropic(p, q, cost, opts)?;
        if !r.converged {
            return Err(Error::NotConverged {
                iterations: r.iterations,
                marginal_error: r.marginal_error,
            });
        }
        Ok(r.value)
    };
    let xy = solve(x, y)?;
    let xx = solve(x, x)?;
    let yy = solve(y, y)?;
    Ok(xy - 0.5 * (xx + yy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::{wasserstein_lp, Metric};
    use rand::Rng;

    fn random(n: usize, d: usize, seed: u64) -> EmpiricalMeasure {
        let mut rng = crate::seed::rng(seed);
        EmpiricalMeasure::new((0..n * d).map(|_| rng.gen::<f64>()).collect(), n, d).unwrap()
    }

    #[test]
    fn single_point_is_zero() {
        let x = EmpiricalMeasure::new(vec![0.4, 0.2], 1, 2).unwrap();
        let r = sinkhorn_entropic(&x, &x, &CostSpec::default(), &SinkhornOptions::new(1.0)).unwrap();
        assert!(r.converged);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn small_lambda_approaches_lp() {
        let x = random(4, 1, 1);
        let y = random(4, 1, 2);
        let cost = CostSpec::new(Metric::Euclidean, 2.0).unwrap();
        let mut opts = SinkhornOptions::new(1e-3);
        opts.tol = 1e-6;
        opts.max_iter = 1_000_000;
        let r = sinkhorn_entropic(&x, &y, &cost, &opts).unwrap();
        assert!(r.converged);
        let w = wasserstein_lp(&x, &y, &cost).unwrap().powi(2);
        assert!((r.value - w).abs() < 1e-2, "{} vs {w}", r.value);
    }

    #[test]
    fn symmetric_and_feasible() {
        let x = random(20, 2, 3);
        let y = random(13, 2, 4);
        let cost = CostSpec::default();
        let opts = SinkhornOptions::new(0.5);
        let a = sinkhorn_entropic(&x, &y, &cost, &opts).unwrap();
        let b = sinkhorn_entropic(&y, &x, &cost, &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.converged && a.marginal_error <= opts.tol);
    }

    #[test]
    fn monotone_in_lambda() {
        let x = random(15, 2, 5);
        let y = random(15, 2, 6);
        let cost = CostSpec::default();
        let mut prev = f64::NEG_INFINITY;
        for lam in [0.01, 0.1, 1.0, 10.0] {
            let opts = SinkhornOptions {
                max_iter: 100_000,
                ..SinkhornOptions::new(lam)
            };
            let r = sinkhorn_entropic(&x, &y, &cost, &opts).unwrap();
            assert!(r.converged, "lambda {lam}: {r:?}");
            assert!(r.value >= prev - 1e-12, "lambda {lam}");
            prev = r.value;
        }
    }

    #[test]
    fn divergence_properties() {
        let cost = CostSpec::default();
        let x = random(10, 2, 7);
        let opts = SinkhornOptions::new(1.0);
        assert!(sinkhorn_divergence(&x, &x, &cost, &opts).unwrap().abs() <= 2.0 * opts.tol);
        let mut rng = crate::seed::rng(8);
        for t in 0..100u64 {
            let d = rng.gen_range(1..=3);
            let p = random(rng.gen_range(1..=32), d, 100 + t);
            let q = random(rng.gen_range(1..=32), d, 200 + t);
            let lam = [0.1, 1.0, 10.0][t as usize % 3];
            let opts = SinkhornOptions {
                max_iter: 100_000,
                ..SinkhornOptions::new(lam)
            };
            let s = sinkhorn_divergence(&p, &q, &cost, &opts).unwrap();
            assert!(s >= -2.0 * opts.tol, "instance {t}: {s}");
        }
    }

    #[test]
    fn large_lambda_energy_limit() {
        let cost = CostSpec::default();
        let x = random(16, 2, 9);
        let y = EmpiricalMeasure::new(random(16, 2, 10).as_slice().iter().map(|v| v + 0.3).collect(), 16, 2)
            .unwrap();
        let mean_cost = |p: &EmpiricalMeasure, q: &EmpiricalMeasure| {
            let mut s = 0.0;
            for a in p.rows() {
                for b in q.rows() {
                    s += cost.cost(a, b);
                }
            }
            s / (p.n() * q.n()) as f64
        };
        let energy = 2.0 * mean_cost(&x, &y) - mean_cost(&x, &x) - mean_cost(&y, &y);
        let s = sinkhorn_divergence(&x, &y, &cost, &SinkhornOptions::new(1e3)).unwrap();
        assert!((s - 0.5 * energy).abs() <= 0.05 * 0.5 * energy, "{s} vs {}", 0.5 * energy);
    }

    #[test]
    fn reports_non_convergence() {
        let x = random(30, 2, 11);
        let y = random(30, 2, 12);
        let mut opts = SinkhornOptions::new(1e-3);
        opts.max_iter = 3;
        let r = sinkhorn_entropic(&x, &y, &CostSpec::default(), &opts).unwrap();
        assert!(!r.converged && r.iterations == 3);
        assert!(matches!(
            sinkhorn_divergence(&x, &y, &CostSpec::default(), &opts),
            Err(Error::NotConverged { .. })
        ));
    }
}
