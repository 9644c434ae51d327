use rand::Rng as _;

use super::normal::clamp_unit;
use super::EmpiricalMeasure;
use crate::error::{invalid_arg, invalid_param, Result};
use crate::qmc_points::{PointSet, ONE_MINUS_EPS};
use crate::reduce::ordered_map;
use crate::seed::{self, stream};

/// Coordinates reserved for the fractional gamma parts: one block of three
/// per component.
const FRACTIONAL_BLOCK: usize = 3;
const COMPONENTS: usize = 5;

/// One Ahrens-Dieter proposal for `Gamma(alpha, 1)` with `0 < alpha < 1`.
///
/// Returns `Ok(Some(x))` on acceptance and `Ok(None)` on rejection.
pub fn gamma_ahrens_dieter(alpha: f64, u: [f64; 3]) -> Result<Option<f64>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid_param(format!("Ahrens-Dieter needs 0 < alpha < 1, got {alpha}")));
    }
    let e = std::f64::consts::E;
    let b = (alpha + e) / e;
    let p = b * u[0];
    if p <= 1.0 {
        let x = p.powf(1.0 / alpha);
        Ok((u[1] <= (-x).exp()).then_some(x))
    } else {
        let x = -((b - p) / alpha).ln();
        Ok((u[2] <= x.powf(alpha - 1.0)).then_some(x))
    }
}

/// `s(theta)`: the integer parts plus 15 reserved coordinates whenever some
/// component has a fractional part.
pub fn bivbeta_input_dim(theta: &[f64]) -> usize {
    let whole: usize = theta.iter().map(|t| t.floor() as usize).sum();
    if theta.iter().any(|t| t.fract() != 0.0) {
        whole + COMPONENTS * FRACTIONAL_BLOCK
    } else {
        whole
    }
}

/// Ratio step mapping five positive gamma variates to `(0,1)^2`.
pub fn bivbeta_combine(g: [f64; 5]) -> [f64; 2] {
    let g = g.map(|v| v.max(f64::MIN_POSITIVE));
    let x1 = (g[0] + g[2]) / (g[0] + g[2] + g[3] + g[4]);
    let x2 = (g[1] + g[3]) / (g[1] + g[2] + g[3] + g[4]);
    [open_unit(x1), open_unit(x2)]
}

fn open_unit(x: f64) -> f64 {
    x.clamp(f64::MIN_POSITIVE, ONE_MINUS_EPS)
}

/// Bivariate Beta with shape vector `theta` (all entries > 0).
///
/// Integer parts of each gamma are sums of exponentials from consecutive
/// coordinates. A fractional part uses its reserved three-coordinate block
/// for the first proposal; rejected proposals fall back to a ChaCha stream
/// derived from `fallback_seed`, the row and the component.
pub fn bivbeta_generate(theta: &[f64], ps: &PointSet, fallback_seed: u64) -> Result<EmpiricalMeasure> {
    if theta.len() != COMPONENTS {
        return Err(invalid_arg("bivariate Beta takes 5 parameters"));
    }
    if let Some(t) = theta.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
        return Err(invalid_param(format!("bivariate Beta needs theta > 0, got {t}")));
    }
    let s = bivbeta_input_dim(theta);
    if ps.s() != s {
        return Err(invalid_arg(format!("bivariate Beta needs s = {s}, point set has {}", ps.s())));
    }
    let whole: Vec<usize> = theta.iter().map(|t| t.floor() as usize).collect();
    let frac: Vec<f64> = theta.iter().map(|t| t.fract()).collect();
    let block_start: usize = whole.iter().sum();

    let rows = ordered_map(ps.n(), |i| -> Result<[f64; 2]> {
        let u = ps.row(i);
        let mut g = [0.0; 5];
        let mut offset = 0;
        for c in 0..COMPONENTS {
            let mut acc = 0.0;
            for &v in &u[offset..offset + whole[c]] {
                acc -= clamp_unit(v).ln();
            }
            offset += whole[c];
            if frac[c] != 0.0 {
                let b = block_start + FRACTIONAL_BLOCK * c;
                acc += fractional_gamma(frac[c], [u[b], u[b + 1], u[b + 2]], || {
                    seed::derive(fallback_seed, &[stream::FALLBACK, i as u64, c as u64])
                })?;
            }
            g[c] = acc;
        }
        Ok(bivbeta_combine(g))
    });
    let mut out = Vec::with_capacity(2 * ps.n());
    for r in rows {
        out.extend_from_slice(&r?);
    }
    Ok(EmpiricalMeasure::from_parts(out, ps.n(), 2))
}

fn fractional_gamma(alpha: f64, first: [f64; 3], fallback: impl FnOnce() -> u64) -> Result<f64> {
    if let Some(x) = gamma_ahrens_dieter(alpha, first)? {
        return Ok(x);
    }
    let mut rng = seed::rng(fallback());
    loop {
        let u = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
        if let Some(x) = gamma_ahrens_dieter(alpha, u)? {
            return Ok(x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmc_points::sobol;

    #[test]
    fn hand_evaluated_proposals() {
        let x = gamma_ahrens_dieter(0.5, [0.5, 0.5, 0.0]).unwrap().unwrap();
        assert!((x - 0.35043).abs() < 1e-5);
        // p > 1 branch: x = -ln((b - p) / alpha)
        let x = gamma_ahrens_dieter(0.5, [0.9, 0.0, 0.2]).unwrap().unwrap();
        assert!((x - 1.44059).abs() < 1e-5, "{x}");
        assert_eq!(gamma_ahrens_dieter(0.5, [0.5, 0.9, 0.0]).unwrap(), None);
        assert!(gamma_ahrens_dieter(1.0, [0.5; 3]).is_err());
        assert!(gamma_ahrens_dieter(0.0, [0.5; 3]).is_err());
    }

    #[test]
    fn gamma_mean_matches_alpha() {
        let alpha = 0.3;
        let mut rng = seed::rng(9);
        let n = 200_000u64;
        let mut total = 0.0;
        for t in 0..n {
            total += fractional_gamma(alpha, [rng.gen(), rng.gen(), rng.gen()], || t).unwrap();
        }
        assert!((total / n as f64 - alpha).abs() < 0.01);
    }

    #[test]
    fn input_dimension_rule() {
        assert_eq!(bivbeta_input_dim(&[1.0; 5]), 5);
        assert_eq!(bivbeta_input_dim(&[2.0, 1.0, 3.0, 1.0, 1.0]), 8);
        assert_eq!(bivbeta_input_dim(&[1.5, 1.0, 1.0, 1.0, 1.0]), 20);
        assert_eq!(bivbeta_input_dim(&[0.5; 5]), 15);
    }

    #[test]
    fn symmetric_combine() {
        assert_eq!(bivbeta_combine([1.0; 5]), [0.5, 0.5]);
        let [a, b] = bivbeta_combine([0.0, 0.0, 0.0, 0.0, 1e300]);
        assert!(a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0);
    }

    #[test]
    fn beta22_marginal_means() {
        let ps = sobol(1 << 14, 5, Some(4)).unwrap();
        let m = bivbeta_generate(&[1.0; 5], &ps, 0).unwrap();
        let mean = m.mean();
        assert!((mean[0] - 0.5).abs() < 0.02 && (mean[1] - 0.5).abs() < 0.02);
        assert!(m.as_slice().iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn integer_shapes_ignore_fallback() {
        let theta = [2.0, 1.0, 3.0, 1.0, 2.0];
        let ps = sobol(256, 9, Some(8)).unwrap();
        let a = bivbeta_generate(&theta, &ps, 1).unwrap();
        let b = bivbeta_generate(&theta, &ps, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fractional_shapes_are_reproducible() {
        let theta = [1.5, 0.7, 2.2, 1.0, 0.4];
        let ps = sobol(512, bivbeta_input_dim(&theta), Some(8)).unwrap();
        let a = bivbeta_generate(&theta, &ps, 3).unwrap();
        assert_eq!(a, bivbeta_generate(&theta, &ps, 3).unwrap());
        assert!(a.as_slice().iter().all(|&x| x > 0.0 && x < 1.0));
        // marginal means of Beta(t1+t3, t4+t5) and Beta(t2+t4, t3+t5)
        let mean = a.mean();
        assert!((mean[0] - 3.7 / 5.1).abs() < 0.03);
        assert!((mean[1] - 1.7 / 4.3).abs() < 0.03);
    }

    #[test]
    fn unscrambled_zero_inputs_stay_inside() {
        let ps = sobol(64, 5, None).unwrap();
        let m = bivbeta_generate(&[1.0; 5], &ps, 0).unwrap();
        assert!(m.as_slice().iter().all(|&x| x > 0.0 && x < 1.0));
    }
}
