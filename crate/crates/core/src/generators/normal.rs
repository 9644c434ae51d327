use crate::error::{Error, Result};

/// Inputs are clamped to `[EPS, 1 - EPS]` before inverse-CDF and log
/// transforms.
pub const CLAMP_EPS: f64 = f64::EPSILON / 2.0;

#[inline]
pub fn clamp_unit(u: f64) -> f64 {
    u.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS)
}

/// Standard normal CDF via `erfc`.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];
const P_LOW: f64 = 0.02425;

/// Lower-tail quantile for `p <= 0.5`: rational approximation followed by
/// one Halley step against the `erfc` CDF.
fn lower_quantile(p: f64) -> f64 {
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Standard normal quantile, absolute error below `1e-9` on `(0, 1)`.
pub fn normal_icdf(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(u));
    }
    Ok(normal_icdf_unchecked(u))
}

#[inline]
pub(crate) fn normal_icdf_unchecked(u: f64) -> f64 {
    if u == 0.5 {
        0.0
    } else if u < 0.5 {
        lower_quantile(u)
    } else {
        // 1 - u is exact for u >= 0.5
        -lower_quantile(1.0 - u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmc_points::pseudo_random;

    #[test]
    fn centre_and_known_quantile() {
        assert_eq!(normal_icdf(0.5).unwrap(), 0.0);
        // 97.5% quantile to 16 digits
        assert!((normal_icdf(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((normal_icdf(0.025).unwrap() + 1.959_963_984_540_054).abs() < 1e-12);
    }

    #[test]
    fn round_trip_through_cdf() {
        let ps = pseudo_random(1000, 1, 17).unwrap();
        for &u in ps.as_slice() {
            let u = clamp_unit(u);
            let x = normal_icdf(u).unwrap();
            assert!((normal_cdf(x) - u).abs() < 1e-9, "u = {u}");
        }
        for &u in &[1e-300, 1e-50, 1e-16, CLAMP_EPS, 1.0 - CLAMP_EPS, 0.02425, 0.97575] {
            let x = normal_icdf(u).unwrap();
            let back = if u < 0.5 { normal_cdf(x) } else { 1.0 - normal_cdf(x) };
            let target = if u < 0.5 { u } else { 1.0 - u };
            assert!(((back - target) / target).abs() < 1e-9, "u = {u}");
        }
    }

    #[test]
    fn out_of_domain() {
        for u in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(normal_icdf(u), Err(Error::Domain(_))));
        }
        assert_eq!(clamp_unit(0.0), CLAMP_EPS);
        assert!(clamp_unit(1.0) < 1.0);
    }

    #[test]
    fn monotone_on_grid() {
        let mut prev = f64::NEG_INFINITY;
        for i in 1..10_000 {
            let x = normal_icdf(i as f64 / 10_000.0).unwrap();
            assert!(x > prev);
            prev = x;
        }
    }
}
