//! Parametric generators `G_theta: [0,1)^s -> R^d`.
//!
//! A generator turns a [`PointSet`] into an [`EmpiricalMeasure`] row by row.
//! All generators are pure: the same spec, parameters, point set and
//! fallback seed always give the same samples.

mod bivbeta;
mod gandk;
mod mlp;
mod normal;

use std::ops::Deref;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, invalid_param, Result};
use crate::qmc_points::PointSet;
use crate::reduce::ordered_map;

pub use bivbeta::{bivbeta_combine, bivbeta_generate, bivbeta_input_dim, gamma_ahrens_dieter};
pub use gandk::{gandk_generate, gandk_quantile, toeplitz_sqrt};
pub use mlp::{mlp_generate, Layer, MlpWeights};
pub use normal::{clamp_unit, normal_cdf, normal_icdf, CLAMP_EPS};

/// Parameter vector with labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    values: Vec<f64>,
    names: Vec<String>,
}

impl ParamVector {
    pub fn new(values: Vec<f64>, names: Vec<String>) -> Result<Self> {
        if values.len() != names.len() {
            return Err(invalid_arg(format!(
                "{} values but {} names",
                values.len(),
                names.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(invalid_param(format!("non-finite parameter {v}")));
        }
        Ok(Self { values, names })
    }

    /// Labels the values with the spec's parameter names.
    pub fn for_spec(spec: &GeneratorSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.param_count() {
            return Err(invalid_arg(format!(
                "{} takes {} parameters, got {}",
                spec.name(),
                spec.param_count(),
                values.len()
            )));
        }
        Self::new(values, spec.param_names())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

impl Deref for ParamVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.values
    }
}

/// Which generator to run.
#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorSpec {
    /// Identity on `[0,1)^d`.
    Uniform(usize),
    /// Independent standard normals by inverse CDF.
    GaussianStd(usize),
    /// Multivariate g-and-k with a tridiagonal Toeplitz correlation.
    GandK(usize),
    /// Bivariate Beta built from five gamma variates.
    BivariateBeta,
    /// Feed-forward decoder with fixed weights.
    SmoothMlp(Arc<MlpWeights>),
}

impl GeneratorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Uniform(_) => "uniform",
            Self::GaussianStd(_) => "gaussian_std",
            Self::GandK(_) => "gandk",
            Self::BivariateBeta => "bivariate_beta",
            Self::SmoothMlp(_) => "smooth_mlp",
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Self::Uniform(_) | Self::GaussianStd(_) | Self::SmoothMlp(_) => 0,
            Self::GandK(_) | Self::BivariateBeta => 5,
        }
    }

    pub fn param_names(&self) -> Vec<String> {
        let names: &[&str] = match self {
            Self::GandK(_) => &["a", "b", "g", "k", "rho"],
            Self::BivariateBeta => &["theta1", "theta2", "theta3", "theta4", "theta5"],
            _ => &[],
        };
        names.iter().map(|s| s.to_string()).collect()
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Self::Uniform(d) | Self::GaussianStd(d) | Self::GandK(d) => *d,
            Self::BivariateBeta => 2,
            Self::SmoothMlp(w) => w.output_dim(),
        }
    }

    /// Input dimension `s(theta)`; only the bivariate Beta depends on theta.
    pub fn input_dim(&self, theta: &[f64]) -> Result<usize> {
        match self {
            Self::Uniform(d) | Self::GaussianStd(d) | Self::GandK(d) => Ok(*d),
            Self::BivariateBeta => {
                self.check_params(theta)?;
                Ok(bivbeta_input_dim(theta))
            }
            Self::SmoothMlp(w) => Ok(w.input_dim()),
        }
    }

    /// Checks length, finiteness and the admissible set.
    pub fn check_params(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.param_count() {
            return Err(invalid_arg(format!(
                "{} takes {} parameters, got {}",
                self.name(),
                self.param_count(),
                theta.len()
            )));
        }
        if let Some(v) = theta.iter().find(|v| !v.is_finite()) {
            return Err(invalid_param(format!("non-finite parameter {v}")));
        }
        match self {
            Self::Uniform(d) | Self::GaussianStd(d) if *d == 0 => {
                Err(invalid_arg("output dimension must be at least 1"))
            }
            Self::GandK(d) => {
                if *d == 0 {
                    return Err(invalid_arg("output dimension must be at least 1"));
                }
                if theta[1] <= 0.0 {
                    return Err(invalid_param(format!("g-and-k scale must be > 0, got {}", theta[1])));
                }
                gandk::check_psd(*d, theta[4])
            }
            Self::BivariateBeta => {
                if let Some(v) = theta.iter().find(|v| **v <= 0.0) {
                    return Err(invalid_param(format!("bivariate Beta needs theta > 0, got {v}")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// `n` samples in `R^d`, uniformly weighted.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    samples: Vec<f64>,
    n: usize,
    d: usize,
}

impl EmpiricalMeasure {
    pub fn new(samples: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(invalid_arg("empirical measures need n >= 1 and d >= 1"));
        }
        if samples.len() != n * d {
            return Err(invalid_arg(format!(
                "expected {} values for {n}x{d}, got {}",
                n * d,
                samples.len()
            )));
        }
        if let Some(v) = samples.iter().find(|v| !v.is_finite()) {
            return Err(invalid_arg(format!("non-finite sample value {v}")));
        }
        Ok(Self { samples, n, d })
    }

    /// Builds a measure from a list of rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(invalid_arg("rows have different lengths"));
        }
        Self::new(rows.concat(), rows.len(), d)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.samples
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.samples[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.samples.chunks_exact(self.d)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// The first `k` rows.
    pub fn head(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.n {
            return Err(invalid_arg(format!("cannot take {k} of {} rows", self.n)));
        }
        Ok(Self {
            samples: self.samples[..k * self.d].to_vec(),
            n: k,
            d: self.d,
        })
    }

    /// Rows picked by index, in the given order.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        let mut out = Vec::with_capacity(idx.len() * self.d);
        for &i in idx {
            if i >= self.n {
                return Err(invalid_arg(format!("row {i} out of range")));
            }
            out.extend_from_slice(self.row(i));
        }
        Self::new(out, idx.len(), self.d)
    }

    /// Coordinate-wise sample mean.
    pub fn mean(&self) -> Vec<f64> {
        (0..self.d)
            .map(|j| crate::reduce::sum(self.rows().map(|r| r[j])) / self.n as f64)
            .collect()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.samples
    }

    pub(crate) fn from_parts(samples: Vec<f64>, n: usize, d: usize) -> Self {
        debug_assert_eq!(samples.len(), n * d);
        Self { samples, n, d }
    }
}

/// Maps every row of `ps` through the generator.
///
/// `fallback_seed` only matters for the bivariate Beta, where rejected
/// gamma proposals are retried with pseudo-random uniforms.
pub fn generate(
    spec: &GeneratorSpec,
    theta: &[f64],
    ps: &PointSet,
    fallback_seed: u64,
) -> Result<EmpiricalMeasure> {
    spec.check_params(theta)?;
    let s = spec.input_dim(theta)?;
    if ps.s() != s {
        return Err(invalid_arg(format!(
            "{} needs {s}-dimensional inputs, point set has {}",
            spec.name(),
            ps.s()
        )));
    }
    let out = match spec {
        GeneratorSpec::Uniform(d) => EmpiricalMeasure::from_parts(ps.as_slice().to_vec(), ps.n(), *d),
        GeneratorSpec::GaussianStd(d) => {
            let rows = ordered_map(ps.n(), |i| {
                ps.row(i)
                    .iter()
                    .map(|&u| normal::normal_icdf_unchecked(clamp_unit(u)))
                    .collect::<Vec<_>>()
            });
            EmpiricalMeasure::from_parts(rows.concat(), ps.n(), *d)
        }
        GeneratorSpec::GandK(_) => gandk_generate(theta, ps)?,
        GeneratorSpec::BivariateBeta => bivbeta_generate(theta, ps, fallback_seed)?,
        GeneratorSpec::SmoothMlp(w) => mlp_generate(w, ps)?,
    };
    if out.samples.iter().any(|v| !v.is_finite()) {
        return Err(invalid_param(format!("{} produced non-finite samples", spec.name())));
    }
    Ok(out)
}

/// Serializable description of a generator, used by config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorConfig {
    Uniform { d: usize },
    GaussianStd { d: usize },
    Gandk { d: usize },
    BivariateBeta,
    SmoothMlp {
        /// CSV weight file; when absent, random weights from `seed`.
        #[serde(default)]
        weights: Option<std::path::PathBuf>,
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_mlp_sizes")]
        sizes: Vec<usize>,
    },
}

fn default_mlp_sizes() -> Vec<usize> {
    MlpWeights::DEFAULT_SIZES.to_vec()
}

impl GeneratorConfig {
    /// Same family with output dimension `d`, for families that have one.
    pub fn with_dim(&self, d: usize) -> Result<Self> {
        Ok(match self {
            Self::Uniform { .. } => Self::Uniform { d },
            Self::GaussianStd { .. } => Self::GaussianStd { d },
            Self::Gandk { .. } => Self::Gandk { d },
            other => {
                if other.build()?.output_dim() != d {
                    return Err(invalid_arg(format!("{} has a fixed output dimension", other.name())));
                }
                other.clone()
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Uniform { .. } => "uniform",
            Self::GaussianStd { .. } => "gaussian_std",
            Self::Gandk { .. } => "gandk",
            Self::BivariateBeta => "bivariate_beta",
            Self::SmoothMlp { .. } => "smooth_mlp",
        }
    }

    pub fn build(&self) -> Result<GeneratorSpec> {
        Ok(match self {
            Self::Uniform { d } => GeneratorSpec::Uniform(*d),
            Self::GaussianStd { d } => GeneratorSpec::GaussianStd(*d),
            Self::Gandk { d } => GeneratorSpec::GandK(*d),
            Self::BivariateBeta => GeneratorSpec::BivariateBeta,
            Self::SmoothMlp { weights, seed, sizes } => {
                let w = match weights {
                    Some(path) => MlpWeights::from_csv(std::fs::File::open(path)?)?,
                    None => MlpWeights::random(sizes, *seed)?,
                };
                GeneratorSpec::SmoothMlp(Arc::new(w))
            }
        })
    }
}
