use rand::seq::SliceRandom;

use super::{Family, PointSet, ONE_MINUS_EPS};
use crate::error::{invalid_arg, Result};
use crate::seed;

/// The first `count` primes.
pub fn primes(count: usize) -> Vec<u32> {
    let mut out: Vec<u32> = Vec::with_capacity(count);
    let mut candidate = 2u32;
    while out.len() < count {
        if out
            .iter()
            .take_while(|&&p| p * p <= candidate)
            .all(|&p| candidate % p != 0)
        {
            out.push(candidate);
        }
        candidate += 1;
    }
    out
}

/// The `j`-th prime, 1-based (`nth_prime(1) == 2`).
pub fn nth_prime(j: usize) -> u32 {
    *primes(j).last().expect("j >= 1")
}

/// Number of base-`b` digits needed to resolve `2^-52`.
fn digit_count(base: u32) -> usize {
    (52.0 / (base as f64).log2()).ceil() as usize
}

/// Horner evaluation of `sum_k perm_k(d_k) b^-(k+1)` over `digits` digits,
/// least significant first so leading zero digits contribute exactly zero.
fn permuted_inverse(mut index: u64, base: u32, digits: usize, perms: Option<&[Vec<u32>]>) -> f64 {
    let b = base as u64;
    let mut ds = [0u32; 64];
    for d in ds.iter_mut().take(digits) {
        *d = (index % b) as u32;
        index /= b;
    }
    let inv = 1.0 / base as f64;
    let mut acc = 0.0;
    for k in (0..digits).rev() {
        let d = match perms {
            Some(p) => p[k][ds[k] as usize],
            None => ds[k],
        };
        acc = (d as f64 + acc) * inv;
    }
    acc.min(ONE_MINUS_EPS)
}

/// Base-`b` radical inverse of `index`.
pub fn radical_inverse(index: u64, base: u32) -> f64 {
    permuted_inverse(index, base, digit_count(base), None)
}

pub fn van_der_corput(n: usize, base: u32) -> Result<PointSet> {
    if base < 2 {
        return Err(invalid_arg(format!("base must be >= 2, got {base}")));
    }
    if n == 0 {
        return Err(invalid_arg("point sets need n >= 1"));
    }
    let points = (0..n as u64).map(|i| radical_inverse(i, base)).collect();
    Ok(PointSet::from_parts(points, n, 1, Family::VanDerCorput, None))
}

/// Halton points; dimension `j` uses the `j`-th prime. With a seed, each
/// digit position of each dimension gets an independent uniform permutation
/// of the digit alphabet.
pub fn halton(n: usize, s: usize, scramble_seed: Option<u64>) -> Result<PointSet> {
    match scramble_seed {
        None => build(n, s, None, |_, _, _| None),
        Some(seed) => build(n, s, Some(seed), |dim, base, digits| {
            let mut rng = seed::rng(seed::derive(seed, &[dim as u64]));
            Some(
                (0..digits)
                    .map(|_| {
                        let mut p: Vec<u32> = (0..base).collect();
                        p.shuffle(&mut rng);
                        p
                    })
                    .collect(),
            )
        }),
    }
}

/// Halton points with caller-supplied digit permutations.
///
/// `perms(dim, base, digits)` returns one permutation of `0..base` per digit
/// position (most significant first).
pub fn halton_permuted<F>(n: usize, s: usize, mut perms: F) -> Result<PointSet>
where
    F: FnMut(usize, u32, usize) -> Vec<Vec<u32>>,
{
    build(n, s, None, |d, b, k| Some(perms(d, b, k)))
}

fn build<F>(n: usize, s: usize, seed: Option<u64>, mut perms: F) -> Result<PointSet>
where
    F: FnMut(usize, u32, usize) -> Option<Vec<Vec<u32>>>,
{
    if n == 0 || s == 0 {
        return Err(invalid_arg("point sets need n >= 1 and s >= 1"));
    }
    let bases = primes(s);
    let mut points = vec![0.0; n * s];
    for (j, &base) in bases.iter().enumerate() {
        let digits = digit_count(base);
        let p = perms(j, base, digits);
        if let Some(p) = &p {
            if p.len() != digits || p.iter().any(|q| q.len() != base as usize) {
                return Err(invalid_arg(format!(
                    "dimension {j}: need {digits} permutations of 0..{base}"
                )));
            }
        }
        for i in 0..n {
            points[i * s + j] = permuted_inverse(i as u64, base, digits, p.as_deref());
        }
    }
    Ok(PointSet::from_parts(points, n, s, Family::Halton, seed))
}
