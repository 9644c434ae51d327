use crate::error::{invalid_arg, invalid_param, Result};
use crate::reduce::Compensated;

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

#[inline]
fn pow_abs(t: f64, p: f64) -> f64 {
    let a = t.abs();
    if p == 1.0 {
        a
    } else if p == 2.0 {
        a * a
    } else {
        a.powf(p)
    }
}

/// `W_p` between two uniform samples on the real line.
///
/// Equal sizes pair the order statistics. Otherwise the quantile functions
/// are integrated exactly over the merged breakpoints `i/n` and `j/m`.
pub fn wasserstein_1d(x: &[f64], y: &[f64], p: f64) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(invalid_arg("empty sample"));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(invalid_param(format!("cost exponent must be >= 1, got {p}")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(invalid_arg("non-finite sample value"));
    }
    let xs = sorted(x);
    let ys = sorted(y);
    let (n, m) = (xs.len(), ys.len());
    let mut acc = Compensated::default();
    let total = if n == m {
        for (a, b) in xs.iter().zip(&ys) {
            acc.add(pow_abs(a - b, p));
        }
        acc.value() / n as f64
    } else {
        // breakpoints in units of 1/(n m): x_(i) covers (i m, (i+1) m]
        let (mut i, mut j) = (0usize, 0usize);
        let mut t = 0u64;
        let (nu, mu) = (n as u64, m as u64);
        while i < n && j < m {
            let next_x = (i as u64 + 1) * mu;
            let next_y = (j as u64 + 1) * nu;
            let next = next_x.min(next_y);
            acc.add((next - t) as f64 * pow_abs(xs[i] - ys[j], p));
            t = next;
            if next_x == next {
                i += 1;
            }
            if next_y == next {
                j += 1;
            }
        }
        acc.value() / (nu * mu) as f64
    };
    Ok(if p == 1.0 { total } else { total.powf(1.0 / p) })
}
