//! QMC and RQMC point sets in `[0,1)^s` and their star discrepancy.

mod halton;
mod lattice;
mod sobol;
mod star;

pub use halton::{halton, halton_permuted, nth_prime, primes, radical_inverse, van_der_corput};
pub use lattice::{
    cbc_generating_vector, default_generating_vector, rank1_lattice, LatticeShift,
};
pub use sobol::{sobol, sobol_with_table, DirectionNumbers, SOBOL_BITS};
pub use star::{star_discrepancy_1d, star_discrepancy_lower_bound, DEFAULT_STAR_BUDGET};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Result};
use crate::seed;

/// Largest double strictly below one.
pub const ONE_MINUS_EPS: f64 = 1.0 - f64::EPSILON / 2.0;

/// Sequence family a point set was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Sobol,
    Halton,
    Lattice,
    VanDerCorput,
    PseudoRandom,
}

impl Family {
    /// Documented log-exponent `alpha_s` of the star-discrepancy bound
    /// `O(n^-1 (log n)^alpha_s)`. Informational only.
    pub fn alpha(self, s: usize) -> Option<f64> {
        let s = s as f64;
        match self {
            Family::Sobol => Some(s - 1.0),
            Family::Halton => Some(s),
            Family::Lattice if s == 2.0 => Some(2.0),
            Family::Lattice => Some(s),
            Family::VanDerCorput => Some(1.0),
            Family::PseudoRandom => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Sobol => "sobol",
            Family::Halton => "halton",
            Family::Lattice => "lattice",
            Family::VanDerCorput => "van_der_corput",
            Family::PseudoRandom => "pseudo_random",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sobol" => Ok(Family::Sobol),
            "halton" => Ok(Family::Halton),
            "lattice" => Ok(Family::Lattice),
            "vdc" | "van_der_corput" | "vandercorput" => Ok(Family::VanDerCorput),
            "mc" | "random" | "pseudo_random" | "pseudorandom" => Ok(Family::PseudoRandom),
            other => Err(invalid_arg(format!("unknown point-set family `{other}`"))),
        }
    }
}

/// `n` points in `[0,1)^s`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<f64>,
    n: usize,
    s: usize,
    family: Family,
    seed: Option<u64>,
}

impl PointSet {
    /// Wraps a row-major coordinate buffer, checking the unit-cube invariant.
    pub fn new(
        points: Vec<f64>,
        n: usize,
        s: usize,
        family: Family,
        seed: Option<u64>,
    ) -> Result<Self> {
        if n == 0 || s == 0 {
            return Err(invalid_arg("point sets need n >= 1 and s >= 1"));
        }
        if points.len() != n * s {
            return Err(invalid_arg(format!(
                "expected {} coordinates for {n}x{s}, got {}",
                n * s,
                points.len()
            )));
        }
        if let Some(bad) = points.iter().find(|u| !(0.0..1.0).contains(*u)) {
            return Err(invalid_arg(format!("coordinate {bad} is outside [0, 1)")));
        }
        Ok(Self {
            points,
            n,
            s,
            family,
            seed,
        })
    }

    pub(crate) fn from_parts(
        points: Vec<f64>,
        n: usize,
        s: usize,
        family: Family,
        seed: Option<u64>,
    ) -> Self {
        debug_assert_eq!(points.len(), n * s);
        debug_assert!(points.iter().all(|u| (0.0..1.0).contains(u)));
        Self {
            points,
            n,
            s,
            family,
            seed,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Randomization seed; `None` for deterministic constructions.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.points
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.s..(i + 1) * self.s]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.s)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// First `k` coordinates of every point, as a projected point set.
    pub fn leading_dims(&self, k: usize) -> Result<PointSet> {
        if k == 0 || k > self.s {
            return Err(invalid_arg(format!("cannot project {} dims onto {k}", self.s)));
        }
        let points = self.rows().flat_map(|r| r[..k].iter().copied()).collect();
        Ok(PointSet::from_parts(points, self.n, k, self.family, self.seed))
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.points
    }
}

/// I.i.d. uniform points from a seeded ChaCha stream.
pub fn pseudo_random(n: usize, s: usize, seed: u64) -> Result<PointSet> {
    if n == 0 || s == 0 {
        return Err(invalid_arg("point sets need n >= 1 and s >= 1"));
    }
    let mut rng = seed::rng(seed);
    let points = (0..n * s).map(|_| rng.gen::<f64>()).collect();
    Ok(PointSet::from_parts(
        points,
        n,
        s,
        Family::PseudoRandom,
        Some(seed),
    ))
}

/// Any family by name. `scramble_seed = None` gives the deterministic
/// construction; pseudo-random points then use seed 0.
pub fn point_set(family: Family, n: usize, s: usize, scramble_seed: Option<u64>) -> Result<PointSet> {
    match family {
        Family::Sobol => sobol(n, s, scramble_seed),
        Family::Halton => halton(n, s, scramble_seed),
        Family::Lattice => {
            let z = default_generating_vector(n, s)?;
            let shift = scramble_seed.map_or(LatticeShift::None, LatticeShift::Seeded);
            rank1_lattice(n, &z, shift)
        }
        Family::VanDerCorput if s != 1 => Err(invalid_arg("van der Corput points are one-dimensional")),
        Family::VanDerCorput => match scramble_seed {
            None => van_der_corput(n, 2),
            Some(seed) => sobol(n, 1, Some(seed)),
        },
        Family::PseudoRandom => pseudo_random(n, s, scramble_seed.unwrap_or(0)),
    }
}
