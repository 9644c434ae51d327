use std::f64::consts::PI;

use super::normal::{clamp_unit, normal_icdf_unchecked};
use super::EmpiricalMeasure;
use crate::error::{invalid_param, Result};
use crate::qmc_points::PointSet;
use crate::reduce::ordered_map;

/// Skewness damping constant of the g-and-k family.
const C: f64 = 0.8;

fn eigenvalue(d: usize, rho: f64, k: usize) -> f64 {
    1.0 + 2.0 * rho * (k as f64 * PI / (d as f64 + 1.0)).cos()
}

pub(crate) fn check_psd(d: usize, rho: f64) -> Result<()> {
    for k in 1..=d {
        let lam = eigenvalue(d, rho, k);
        // tolerate rounding right at the boundary
        if lam < -1e-12 {
            return Err(invalid_param(format!(
                "correlation {rho} makes the {d}x{d} tridiagonal matrix indefinite"
            )));
        }
    }
    Ok(())
}

/// Symmetric square root of the `d x d` tridiagonal Toeplitz matrix with
/// unit diagonal and `rho` off the diagonal, returned row-major.
///
/// Uses the sine eigenbasis, so no numerical factorisation is involved.
pub fn toeplitz_sqrt(d: usize, rho: f64) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(crate::error::invalid_arg("dimension must be at least 1"));
    }
    check_psd(d, rho)?;
    let h = PI / (d as f64 + 1.0);
    let root: Vec<f64> = (1..=d).map(|k| eigenvalue(d, rho, k).max(0.0).sqrt()).collect();
    let scale = 2.0 / (d as f64 + 1.0);
    let mut s = vec![0.0; d * d];
    for i in 1..=d {
        for j in i..=d {
            let v: f64 = (1..=d)
                .map(|k| root[k - 1] * (i as f64 * k as f64 * h).sin() * (j as f64 * k as f64 * h).sin())
                .sum();
            s[(i - 1) * d + (j - 1)] = scale * v;
            s[(j - 1) * d + (i - 1)] = scale * v;
        }
    }
    Ok(s)
}

/// The scalar g-and-k transform of a standard normal `z`.
#[inline]
pub fn gandk_quantile(theta: &[f64], z: f64) -> f64 {
    let (a, b, g, k) = (theta[0], theta[1], theta[2], theta[3]);
    // (1 - e^{-gz}) / (1 + e^{-gz}) == tanh(gz / 2), without overflow
    let skew = 1.0 + C * (0.5 * g * z).tanh();
    a + b * skew * (1.0 + z * z).powf(k) * z
}

/// Multivariate g-and-k: `z = S Phi^{-1}(u)` then the scalar map per
/// coordinate. `theta = (a, b, g, k, rho)` with `k` taken as is.
pub fn gandk_generate(theta: &[f64], ps: &PointSet) -> Result<EmpiricalMeasure> {
    if theta.len() != 5 {
        return Err(crate::error::invalid_arg("g-and-k takes 5 parameters"));
    }
    if !(theta[1] > 0.0) {
        return Err(invalid_param(format!("g-and-k scale must be > 0, got {}", theta[1])));
    }
    let d = ps.s();
    let s = toeplitz_sqrt(d, theta[4])?;
    let rows = ordered_map(ps.n(), |i| {
        let g: Vec<f64> = ps.row(i).iter().map(|&u| normal_icdf_unchecked(clamp_unit(u))).collect();
        (0..d)
            .map(|r| {
                let z = if d == 1 {
                    g[0]
                } else {
                    s[r * d..(r + 1) * d].iter().zip(&g).map(|(a, b)| a * b).sum()
                };
                gandk_quantile(theta, z)
            })
            .collect::<Vec<_>>()
    });
    Ok(EmpiricalMeasure::from_parts(rows.concat(), ps.n(), d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::normal_icdf;
    use crate::qmc_points::{sobol, Family};

    fn matmul(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
        let mut c = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                c[i * d + j] = (0..d).map(|k| a[i * d + k] * b[k * d + j]).sum();
            }
        }
        c
    }

    #[test]
    fn sqrt_small_cases() {
        assert!((toeplitz_sqrt(1, 0.3).unwrap()[0] - 1.0).abs() < 1e-15);
        let s = toeplitz_sqrt(5, 0.0).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((s[i * 5 + j] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sqrt_squares_to_sigma() {
        for (d, rho) in [(5, 0.1), (2, 0.4), (10, -0.45), (30, 0.5)] {
            let s = toeplitz_sqrt(d, rho).unwrap();
            let ss = matmul(&s, &s, d);
            for i in 0..d {
                for j in 0..d {
                    let want = if i == j {
                        1.0
                    } else if i.abs_diff(j) == 1 {
                        rho
                    } else {
                        0.0
                    };
                    assert!((ss[i * d + j] - want).abs() < 1e-10, "d={d} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn indefinite_rejected() {
        assert!(matches!(toeplitz_sqrt(5, 0.6), Err(crate::Error::InvalidParameter(_))));
        assert!(toeplitz_sqrt(1, 0.9).is_ok());
    }

    #[test]
    fn centre_maps_to_location() {
        let ps = PointSet::new(vec![0.5; 3], 1, 3, Family::Sobol, None).unwrap();
        let m = gandk_generate(&[2.5, 1.3, 0.7, 0.2, 0.3], &ps).unwrap();
        assert!(m.as_slice().iter().all(|&x| (x - 2.5).abs() < 1e-15));
    }

    #[test]
    fn reduces_to_standard_normal() {
        let ps = sobol(64, 1, Some(2)).unwrap();
        let m = gandk_generate(&[0.0, 1.0, 0.0, 0.0, 0.0], &ps).unwrap();
        for (x, &u) in m.as_slice().iter().zip(ps.as_slice()) {
            assert_eq!(*x, normal_icdf(clamp_unit(u)).unwrap());
        }
    }

    #[test]
    fn independent_coordinates_decouple() {
        let theta = [3.0, 1.0, 1.0, 0.5, 0.0];
        let ps = sobol(32, 2, Some(5)).unwrap();
        let joint = gandk_generate(&theta, &ps).unwrap();
        for j in 0..2 {
            let col = PointSet::new(ps.column(j), 32, 1, Family::Sobol, None).unwrap();
            let single = gandk_generate(&theta, &col).unwrap();
            for i in 0..32 {
                assert!((joint.row(i)[j] - single.row(i)[0]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn monotone_quantile() {
        let theta = [3.0, 1.0, 1.0, 0.5, 0.0];
        let mut prev = f64::NEG_INFINITY;
        for i in 1..1000 {
            let z = normal_icdf(i as f64 / 1000.0).unwrap();
            let x = gandk_quantile(&theta, z);
            assert!(x > prev, "not increasing at {i}");
            prev = x;
        }
    }
}
