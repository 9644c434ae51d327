//! Rank-1 lattice rules with optional random shift.

use rand::Rng as _;

use super::{Family, PointSet, ONE_MINUS_EPS};
use crate::error::{invalid_arg, Result};
use crate::seed;

/// Generating vectors for `n = 2^6 .. 2^14`, `s <= 10`, from a
/// component-by-component search on the weighted `P_2` criterion with
/// product weights `gamma_j = 1/j^2` (see [`cbc_generating_vector`]).
const TABLE: [(u32, [u64; 10]); 9] = [
    (6, [1, 19, 29, 11, 25, 7, 15, 23, 17, 31]),
    (7, [1, 47, 19, 53, 11, 31, 25, 39, 15, 57]),
    (8, [1, 75, 97, 47, 41, 55, 17, 65, 89, 67]),
    (9, [1, 149, 113, 193, 31, 243, 163, 203, 69, 229]),
    (10, [1, 275, 167, 403, 317, 181, 103, 297, 49, 193]),
    (11, [1, 791, 591, 957, 107, 177, 753, 347, 257, 739]),
    (12, [1, 1557, 1087, 701, 1163, 321, 1649, 207, 1827, 1203]),
    (13, [1, 2431, 3739, 3175, 985, 1473, 3623, 2647, 343, 95]),
    (14, [1, 6229, 2691, 4955, 1105, 4335, 465, 1435, 1003, 4049]),
];

/// How a lattice is shifted modulo one.
#[derive(Debug, Clone, PartialEq)]
pub enum LatticeShift {
    None,
    /// Uniform shift drawn from the seed.
    Seeded(u64),
    /// Explicit per-dimension shift.
    Explicit(Vec<f64>),
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Tabulated generating vector when available, otherwise a CBC search.
pub fn default_generating_vector(n: usize, s: usize) -> Result<Vec<u64>> {
    if n.is_power_of_two() && s <= 10 {
        let m = n.trailing_zeros();
        if let Some((_, z)) = TABLE.iter().find(|(e, _)| *e == m) {
            return Ok(z[..s].to_vec());
        }
    }
    cbc_generating_vector(n, s)
}

/// Component-by-component construction minimising the weighted `P_2`
/// worst-case error with weights `1/j^2`. Cost is `O(s n^2)`.
///
/// Candidates are the integers in `1..n` coprime with `n`; ties within a
/// relative `1e-12` go to the smallest candidate.
pub fn cbc_generating_vector(n: usize, s: usize) -> Result<Vec<u64>> {
    if n < 2 || s == 0 {
        return Err(invalid_arg("CBC needs n >= 2 and s >= 1"));
    }
    let nn = n as u64;
    let candidates: Vec<u64> = (1..nn).filter(|&c| gcd(c, nn) == 1).collect();
    let two_pi2 = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
    let b2 = |x: f64| x * x - x + 1.0 / 6.0;
    let mut prod = vec![1.0; n];
    let mut z = Vec::with_capacity(s);
    for j in 1..=s {
        let gamma = 1.0 / (j * j) as f64;
        let errs: Vec<f64> = candidates
            .iter()
            .map(|&c| {
                let total: f64 = (0..nn)
                    .map(|i| {
                        let x = ((c * i) % nn) as f64 / n as f64;
                        prod[i as usize] * (1.0 + gamma * two_pi2 * b2(x))
                    })
                    .sum();
                total / n as f64
            })
            .collect();
        let min = errs.iter().copied().fold(f64::INFINITY, f64::min);
        let pick = candidates[errs.iter().position(|&e| e <= min * (1.0 + 1e-12)).unwrap()];
        for (i, p) in prod.iter_mut().enumerate() {
            let x = ((pick * i as u64) % nn) as f64 / n as f64;
            *p *= 1.0 + gamma * two_pi2 * b2(x);
        }
        z.push(pick);
    }
    Ok(z)
}

/// Points `frac(i z / n + shift)` for `i = 0..n`.
pub fn rank1_lattice(n: usize, generating_vector: &[u64], shift: LatticeShift) -> Result<PointSet> {
    let s = generating_vector.len();
    if n == 0 || s == 0 {
        return Err(invalid_arg("point sets need n >= 1 and s >= 1"));
    }
    for &zj in generating_vector {
        if gcd(zj % n as u64, n as u64) != 1 {
            log::warn!("generating-vector component {zj} is not coprime with n = {n}");
        }
    }
    let (delta, seed) = match shift {
        LatticeShift::None => (vec![0.0; s], None),
        LatticeShift::Seeded(seed) => {
            let mut rng = seed::rng(seed);
            ((0..s).map(|_| rng.gen::<f64>()).collect(), Some(seed))
        }
        LatticeShift::Explicit(d) => {
            if d.len() != s {
                return Err(invalid_arg(format!("shift has {} entries, need {s}", d.len())));
            }
            (d, None)
        }
    };
    let nn = n as u128;
    let mut points = Vec::with_capacity(n * s);
    for i in 0..n as u128 {
        for (&zj, &dj) in generating_vector.iter().zip(&delta) {
            let base = ((i * zj as u128) % nn) as f64 / n as f64;
            let x = base + dj;
            let x = x - x.floor();
            points.push(x.min(ONE_MINUS_EPS));
        }
    }
    Ok(PointSet::from_parts(points, n, s, Family::Lattice, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15)
    }

    #[test]
    fn unshifted_one_dim() {
        let ps = rank1_lattice(4, &[1], LatticeShift::None).unwrap();
        assert_eq!(ps.as_slice(), &[0.0, 0.25, 0.5, 0.75]);
    }

    #[test]
    fn explicit_shift_wraps() {
        let ps = rank1_lattice(4, &[1], LatticeShift::Explicit(vec![0.1])).unwrap();
        assert!(close(ps.as_slice(), &[0.1, 0.35, 0.6, 0.85]));
        let ps = rank1_lattice(4, &[1], LatticeShift::Explicit(vec![0.8])).unwrap();
        assert!(close(ps.as_slice(), &[0.8, 0.05, 0.3, 0.55]));
    }

    #[test]
    fn two_dim_modular_arithmetic() {
        let ps = rank1_lattice(5, &[1, 2], LatticeShift::None).unwrap();
        let want = [0.0, 0.0, 0.2, 0.4, 0.4, 0.8, 0.6, 0.2, 0.8, 0.6];
        assert!(close(ps.as_slice(), &want));
    }

    #[test]
    fn seeded_shift_is_reproducible() {
        let z = default_generating_vector(64, 3).unwrap();
        let a = rank1_lattice(64, &z, LatticeShift::Seeded(9)).unwrap();
        assert_eq!(a, rank1_lattice(64, &z, LatticeShift::Seeded(9)).unwrap());
        assert_eq!(a.seed(), Some(9));
    }

    #[test]
    fn table_matches_cbc_for_small_n() {
        for m in [6u32, 7] {
            let n = 1usize << m;
            let from_cbc = cbc_generating_vector(n, 10).unwrap();
            assert_eq!(default_generating_vector(n, 10).unwrap(), from_cbc, "n = {n}");
        }
    }

    #[test]
    fn cbc_fallback_for_untabulated_n() {
        let z = default_generating_vector(101, 3).unwrap();
        assert_eq!(z.len(), 3);
        assert_eq!(z[0], 1);
    }
}
