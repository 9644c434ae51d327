use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, invalid_param, Error, Result};

/// Ground metric on `R^d`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Euclidean,
    L1,
    Linf,
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" | "l2" => Ok(Self::Euclidean),
            "l1" | "manhattan" => Ok(Self::L1),
            "linf" | "chebyshev" => Ok(Self::Linf),
            other => Err(invalid_arg(format!("unknown cost '{other}'"))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Euclidean => "euclidean",
            Self::L1 => "l1",
            Self::Linf => "linf",
        })
    }
}

/// Transport cost `c(x, y)^p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    pub metric: Metric,
    pub p: f64,
}

impl Default for CostSpec {
    fn default() -> Self {
        Self {
            metric: Metric::Euclidean,
            p: 1.0,
        }
    }
}

impl CostSpec {
    pub fn new(metric: Metric, p: f64) -> Result<Self> {
        Self { metric, p }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.p >= 1.0) || !self.p.is_finite() {
            return Err(invalid_param(format!("cost exponent must be >= 1, got {}", self.p)));
        }
        Ok(self)
    }

    #[inline]
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let it = x.iter().zip(y).map(|(a, b)| (a - b).abs());
        match self.metric {
            Metric::Euclidean => it.map(|t| t * t).sum::<f64>().sqrt(),
            Metric::L1 => it.sum(),
            Metric::Linf => it.fold(0.0, f64::max),
        }
    }

    /// `c(x, y)^p`.
    #[inline]
    pub fn cost(&self, x: &[f64], y: &[f64]) -> f64 {
        let c = self.distance(x, y);
        if self.p == 1.0 {
            c
        } else if self.p == 2.0 {
            c * c
        } else {
            c.powf(self.p)
        }
    }

    /// Cost matrix, row-major `n x m`.
    pub(crate) fn matrix(&self, x: &[f64], y: &[f64], d: usize) -> Vec<f64> {
        let rows = crate::reduce::ordered_map(x.len() / d, |i| {
            let xi = &x[i * d..(i + 1) * d];
            y.chunks_exact(d).map(|yj| self.cost(xi, yj)).collect::<Vec<_>>()
        });
        rows.concat()
    }
}
