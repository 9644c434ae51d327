use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, invalid_param, Error, Result};

/// Half-integer Matérn smoothness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MaternNu {
    #[serde(rename = "3/2")]
    ThreeHalves,
    #[serde(rename = "5/2")]
    FiveHalves,
    #[serde(rename = "7/2")]
    SevenHalves,
}

impl MaternNu {
    pub fn value(self) -> f64 {
        match self {
            Self::ThreeHalves => 1.5,
            Self::FiveHalves => 2.5,
            Self::SevenHalves => 3.5,
        }
    }
}

/// Stationary kernel on `R^d`.
///
/// The Matérn forms use `t = sqrt(2 nu) r / sigma^2`, i.e. the lengthscale
/// enters squared.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    SquaredExponential { amplitude: f64, lengthscale: f64 },
    Matern { nu: MaternNu, amplitude: f64, lengthscale: f64 },
}

impl KernelSpec {
    pub fn squared_exponential(amplitude: f64, lengthscale: f64) -> Result<Self> {
        Self::SquaredExponential { amplitude, lengthscale }.validated()
    }

    pub fn matern(nu: MaternNu, amplitude: f64, lengthscale: f64) -> Result<Self> {
        Self::Matern { nu, amplitude, lengthscale }.validated()
    }

    /// Kernel by CLI name (`se`, `matern32`, `matern52`, `matern72`).
    pub fn from_name(name: &str, amplitude: f64, lengthscale: f64) -> Result<Self> {
        match name.parse::<KernelKind>()? {
            KernelKind::Se => Self::squared_exponential(amplitude, lengthscale),
            KernelKind::Matern(nu) => Self::matern(nu, amplitude, lengthscale),
        }
    }

    /// Default squared-exponential kernel for dimension `d`: unit amplitude,
    /// lengthscale `1.5 sqrt(d)`.
    pub fn default_for_dim(d: usize) -> Self {
        Self::SquaredExponential {
            amplitude: 1.0,
            lengthscale: 1.5 * (d as f64).sqrt(),
        }
    }

    pub fn validated(self) -> Result<Self> {
        let (a, l) = self.params();
        if !(a > 0.0 && a.is_finite()) || !(l > 0.0 && l.is_finite()) {
            return Err(invalid_param(format!(
                "kernel amplitude and lengthscale must be positive, got {a} and {l}"
            )));
        }
        Ok(self)
    }

    fn params(&self) -> (f64, f64) {
        match *self {
            Self::SquaredExponential { amplitude, lengthscale } => (amplitude, lengthscale),
            Self::Matern { amplitude, lengthscale, .. } => (amplitude, lengthscale),
        }
    }

    pub fn amplitude(&self) -> f64 {
        self.params().0
    }

    pub fn lengthscale(&self) -> f64 {
        self.params().1
    }

    /// Value at zero distance.
    pub fn diagonal(&self) -> f64 {
        let a = self.amplitude();
        a * a
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(invalid_arg(format!(
                "kernel arguments have dimensions {} and {}",
                x.len(),
                y.len()
            )));
        }
        Ok(self.eval_unchecked(x, y))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        self.of_sq_dist(r2)
    }

    /// `sum_j k(x, y_j)` over the rows of `ys`, left to right.
    pub(crate) fn row_sum(&self, x: &[f64], ys: &[f64]) -> f64 {
        let d = x.len();
        match d {
            1 => self.row_sum_by(ys.iter().map(|&y| (x[0] - y) * (x[0] - y))),
            2 => self.row_sum_by(ys.chunks_exact(2).map(|y| {
                let (a, b) = (x[0] - y[0], x[1] - y[1]);
                a * a + b * b
            })),
            _ => self.row_sum_by(
                ys.chunks_exact(d)
                    .map(|y| x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()),
            ),
        }
    }

    #[inline]
    fn row_sum_by(&self, r2s: impl Iterator<Item = f64>) -> f64 {
        let mut acc = 0.0;
        match *self {
            Self::SquaredExponential { amplitude, lengthscale } => {
                let c = 1.0 / (lengthscale * lengthscale);
                for r2 in r2s {
                    acc += (-r2 * c).exp();
                }
                amplitude * amplitude * acc
            }
            Self::Matern { .. } => {
                for r2 in r2s {
                    acc += self.of_sq_dist(r2);
                }
                acc
            }
        }
    }

    /// Kernel as a function of the squared Euclidean distance.
    #[inline]
    pub fn of_sq_dist(&self, r2: f64) -> f64 {
        match *self {
            Self::SquaredExponential { amplitude, lengthscale } => {
                amplitude * amplitude * (-r2 / (lengthscale * lengthscale)).exp()
            }
            Self::Matern { nu, amplitude, lengthscale } => {
                let t = (2.0 * nu.value()).sqrt() * r2.sqrt() / (lengthscale * lengthscale);
                let poly = match nu {
                    MaternNu::ThreeHalves => 1.0 + t,
                    MaternNu::FiveHalves => 1.0 + t + t * t / 3.0,
                    MaternNu::SevenHalves => 1.0 + t + 0.4 * t * t + t * t * t / 15.0,
                };
                amplitude * amplitude * poly * (-t).exp()
            }
        }
    }
}

/// Kernel family selector used by configs and the CLI.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum KernelKind {
    #[default]
    Se,
    Matern(MaternNu),
}

impl FromStr for KernelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "se" | "gaussian" | "rbf" => Self::Se,
            "matern32" => Self::Matern(MaternNu::ThreeHalves),
            "matern52" => Self::Matern(MaternNu::FiveHalves),
            "matern72" => Self::Matern(MaternNu::SevenHalves),
            other => return Err(invalid_arg(format!("unknown kernel '{other}'"))),
        })
    }
}

impl TryFrom<String> for KernelKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<KernelKind> for String {
    fn from(k: KernelKind) -> String {
        k.to_string()
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Se => "se",
            Self::Matern(MaternNu::ThreeHalves) => "matern32",
            Self::Matern(MaternNu::FiveHalves) => "matern52",
            Self::Matern(MaternNu::SevenHalves) => "matern72",
        })
    }
}
