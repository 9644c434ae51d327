//! Gray-code digital Sobol sequence with optional linear matrix scrambling
//! and digital shift.
//!
//! Direction numbers come from a table in the format of the Joe–Kuo
//! `new-joe-kuo-6.*` files: a header line, then one line per dimension
//! `d s a m_1 .. m_s`, starting at dimension 2 (dimension 1 is the van der
//! Corput sequence and is implicit).

use std::path::Path;
use std::sync::OnceLock;

use rand::Rng as _;

use super::{Family, PointSet};
use crate::error::{invalid_arg, Error, Result};
use crate::seed;

/// Output precision: coordinates are integers over `2^SOBOL_BITS`.
pub const SOBOL_BITS: u32 = 52;

const BUNDLED: &str = include_str!("../../data/new-joe-kuo-6.1111");

/// File names looked up inside `QMCD_DATA_DIR`, in order.
const TABLE_FILE_NAMES: [&str; 3] = [
    "new-joe-kuo-6.21201",
    "new-joe-kuo-6.1111",
    "direction_numbers.txt",
];

#[derive(Debug, Clone, PartialEq, Eq)]
struct Primitive {
    degree: u32,
    coeffs: u32,
    m: Vec<u64>,
}

/// Primitive polynomials and initial direction numbers per dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionNumbers {
    // dimension 2 onwards
    entries: Vec<Primitive>,
}

impl DirectionNumbers {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('d') || line.starts_with('#') {
                continue;
            }
            let fields: Vec<u64> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<u64>()
                        .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
                })
                .collect::<Result<_>>()?;
            if fields.len() < 4 {
                return Err(Error::Parse(format!("line {}: too few fields", lineno + 1)));
            }
            let (dim, degree, coeffs) = (fields[0], fields[1] as u32, fields[2] as u32);
            if dim as usize != entries.len() + 2 {
                return Err(Error::Parse(format!(
                    "line {}: expected dimension {}, found {dim}",
                    lineno + 1,
                    entries.len() + 2
                )));
            }
            let m = fields[3..].to_vec();
            if degree == 0 || m.len() != degree as usize || degree >= SOBOL_BITS {
                return Err(Error::Parse(format!(
                    "line {}: degree {degree} does not match {} direction numbers",
                    lineno + 1,
                    m.len()
                )));
            }
            for (k, &mk) in m.iter().enumerate() {
                if mk % 2 == 0 || mk >= 1 << (k + 1) {
                    return Err(Error::Parse(format!(
                        "line {}: m_{} = {mk} must be odd and below 2^{}",
                        lineno + 1,
                        k + 1,
                        k + 1
                    )));
                }
            }
            entries.push(Primitive { degree, coeffs, m });
        }
        Ok(Self { entries })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// The table compiled into the crate (1111 dimensions).
    pub fn bundled() -> &'static DirectionNumbers {
        static TABLE: OnceLock<DirectionNumbers> = OnceLock::new();
        TABLE.get_or_init(|| DirectionNumbers::parse(BUNDLED).expect("bundled table parses"))
    }

    /// The table named by `QMCD_DATA_DIR` when that variable is set,
    /// otherwise the bundled one.
    pub fn default_table() -> Result<&'static DirectionNumbers> {
        static TABLE: OnceLock<std::result::Result<DirectionNumbers, String>> = OnceLock::new();
        let loaded = TABLE.get_or_init(|| match std::env::var_os("QMCD_DATA_DIR") {
            None => Ok(Self::bundled().clone()),
            Some(dir) => {
                let dir = Path::new(&dir);
                TABLE_FILE_NAMES
                    .iter()
                    .map(|f| dir.join(f))
                    .find(|p| p.is_file())
                    .ok_or_else(|| {
                        format!("no direction-number file found in {}", dir.display())
                    })
                    .and_then(|p| Self::from_file(&p).map_err(|e| e.to_string()))
            }
        });
        loaded.as_ref().map_err(|e| Error::Parse(e.clone()))
    }

    /// Number of supported dimensions, including the implicit first one.
    pub fn dimensions(&self) -> usize {
        self.entries.len() + 1
    }

    /// Direction integers `v_1..v_B` for 0-based dimension `dim`, scaled so
    /// that `v_k = m_k 2^(B-k)`.
    fn directions(&self, dim: usize) -> [u64; SOBOL_BITS as usize] {
        let bits = SOBOL_BITS as usize;
        let mut v = [0u64; SOBOL_BITS as usize];
        if dim == 0 {
            for (k, vk) in v.iter_mut().enumerate() {
                *vk = 1 << (bits - 1 - k);
            }
            return v;
        }
        let p = &self.entries[dim - 1];
        let s = p.degree as usize;
        for k in 0..s {
            v[k] = p.m[k] << (bits - 1 - k);
        }
        for k in s..bits {
            let mut x = v[k - s] ^ (v[k - s] >> s);
            for j in 1..s {
                if (p.coeffs >> (s - 1 - j)) & 1 == 1 {
                    x ^= v[k - j];
                }
            }
            v[k] = x;
        }
        v
    }
}

/// Random lower-triangular unit-diagonal binary matrix applied to the digit
/// vector (most significant digit first), followed by a random digital shift.
struct LinearScramble {
    columns: [u64; SOBOL_BITS as usize],
    shift: u64,
}

impl LinearScramble {
    fn draw(rng: &mut seed::Rng) -> Self {
        let bits = SOBOL_BITS as usize;
        let mut columns = [0u64; SOBOL_BITS as usize];
        for (c, col) in columns.iter_mut().enumerate() {
            let diag = 1u64 << (bits - 1 - c);
            let below = diag - 1;
            *col = diag | (rng.gen::<u64>() & below);
        }
        let shift = rng.gen::<u64>() & ((1u64 << bits) - 1);
        Self { columns, shift }
    }

    fn apply(&self, x: u64) -> u64 {
        let bits = SOBOL_BITS as usize;
        let mut y = 0;
        for (c, col) in self.columns.iter().enumerate() {
            if (x >> (bits - 1 - c)) & 1 == 1 {
                y ^= col;
            }
        }
        y
    }
}

/// First `n` points of the `s`-dimensional Sobol sequence using the default
/// direction-number table. With `Some(seed)` the points are scrambled.
pub fn sobol(n: usize, s: usize, scramble_seed: Option<u64>) -> Result<PointSet> {
    sobol_with_table(DirectionNumbers::default_table()?, n, s, scramble_seed)
}

pub fn sobol_with_table(
    table: &DirectionNumbers,
    n: usize,
    s: usize,
    scramble_seed: Option<u64>,
) -> Result<PointSet> {
    if n == 0 || s == 0 {
        return Err(invalid_arg("point sets need n >= 1 and s >= 1"));
    }
    if s > table.dimensions() {
        return Err(Error::UnsupportedDimension {
            requested: s,
            available: table.dimensions(),
        });
    }
    if (n as u128) > (1u128 << SOBOL_BITS) {
        return Err(invalid_arg(format!("n = {n} exceeds 2^{SOBOL_BITS}")));
    }

    let mut rng = scramble_seed.map(seed::rng);
    let mut state = Vec::with_capacity(s);
    let mut dirs = Vec::with_capacity(s);
    for j in 0..s {
        let mut v = table.directions(j);
        let mut x0 = 0u64;
        if let Some(rng) = rng.as_mut() {
            let scr = LinearScramble::draw(rng);
            for vk in v.iter_mut() {
                *vk = scr.apply(*vk);
            }
            x0 = scr.shift;
        }
        dirs.push(v);
        state.push(x0);
    }

    let scale = 1.0 / (1u64 << SOBOL_BITS) as f64;
    let mut points = Vec::with_capacity(n * s);
    for i in 0..n {
        if i > 0 {
            // Gray code: flip the direction indexed by the lowest zero bit of i-1.
            let c = (i - 1).trailing_ones() as usize;
            for (x, v) in state.iter_mut().zip(&dirs) {
                *x ^= v[c];
            }
        }
        points.extend(state.iter().map(|&x| x as f64 * scale));
    }
    Ok(PointSet::from_parts(
        points,
        n,
        s,
        Family::Sobol,
        scramble_seed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_point_is_origin() {
        let ps = sobol(1, 3, None).unwrap();
        assert_eq!(ps.as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn one_dimensional_gray_code_order() {
        let ps = sobol(4, 1, None).unwrap();
        assert_eq!(ps.as_slice(), &[0.0, 0.5, 0.75, 0.25]);
    }

    #[test]
    fn second_dimension_matches_textbook_values() {
        // dimension 2: s=1, a=0, m=1, so v_k = 2^-k ^ v_{k-1}/2 chain
        let ps = sobol(8, 2, None).unwrap();
        let second: Vec<f64> = ps.column(1);
        assert_eq!(
            second,
            vec![0.0, 0.5, 0.25, 0.75, 0.375, 0.875, 0.125, 0.625]
        );
    }

    #[test]
    fn scrambled_one_dim_is_stratified() {
        for seed in [1u64, 2, 99, 12345] {
            let ps = sobol(8, 1, Some(seed)).unwrap();
            let mut bins = [0usize; 8];
            for &u in ps.as_slice() {
                bins[(u * 8.0) as usize] += 1;
            }
            assert_eq!(bins, [1; 8], "seed {seed}");
        }
    }

    #[test]
    fn unsupported_dimension_is_rejected() {
        let table = DirectionNumbers::bundled();
        assert_eq!(table.dimensions(), 1111);
        match sobol_with_table(table, 4, 1112, None) {
            Err(Error::UnsupportedDimension { requested, available }) => {
                assert_eq!((requested, available), (1112, 1111));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(sobol_with_table(table, 2, 1111, Some(3)).is_ok());
    }

    #[test]
    fn parse_rejects_malformed_lines() {
        assert!(DirectionNumbers::parse("d s a m\n2 1 0 2\n").is_err());
        assert!(DirectionNumbers::parse("d s a m\n3 1 0 1\n").is_err());
        assert!(DirectionNumbers::parse("d s a m\n2 2 0 1\n").is_err());
        let t = DirectionNumbers::parse("d s a m\n2 1 0 1\n3 2 1 1 3\n").unwrap();
        assert_eq!(t.dimensions(), 3);
    }
}
