use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::discrepancy::DiscrepancySpec;
use crate::error::{invalid_arg, Result};
use crate::generators::{EmpiricalMeasure, GeneratorConfig, GeneratorSpec};
use crate::inference::{abc_reject_many, mde, simulate, AbcResult, MdeConfig, MdeResult, Sampler, UniformBox};
use crate::seed::{self, stream};

/// Synthetic data: `m` draws at the true parameter, or a CSV file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DataSource {
    Simulated { m: usize, seed: u64 },
    File { path: std::path::PathBuf },
}

impl DataSource {
    pub fn load(&self, spec: &GeneratorSpec, theta_star: &[f64], base: &Path) -> Result<EmpiricalMeasure> {
        match self {
            Self::Simulated { m, seed } => {
                simulate(spec, theta_star, Sampler::Mc, *m, seed::derive(*seed, &[stream::DATA]))
            }
            Self::File { path } => {
                let path = if path.is_relative() { base.join(path) } else { path.clone() };
                crate::io::read_measure(std::fs::File::open(path)?)
            }
        }
    }
}

/// Repeated MDE fits against one data set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MdeExperiment {
    #[serde(default)]
    pub name: String,
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub theta_star: Vec<f64>,
    pub data: DataSource,
    pub mde: MdeConfig,
    /// SGD start; ignored by DE.
    #[serde(default)]
    pub theta0: Option<Vec<f64>>,
    /// Independent runs, each with its own seed derived from `mde.seed`.
    #[serde(default = "one")]
    pub runs: usize,
}

fn one() -> usize {
    1
}

impl MdeExperiment {
    pub fn from_json(text: &str) -> Result<Self> {
        let e: Self = serde_json::from_str(text)?;
        if e.runs == 0 {
            return Err(invalid_arg("runs must be at least 1"));
        }
        Ok(e)
    }

    /// Run `r` uses seed `derive(mde.seed, [r])`, except a single run which
    /// keeps `mde.seed` itself.
    pub fn run_config(&self, r: usize) -> MdeConfig {
        let mut cfg = self.mde.clone();
        if self.runs > 1 {
            cfg.seed = seed::derive(self.mde.seed, &[r as u64]);
        }
        cfg
    }

    pub fn run(&self, base: &Path) -> Result<(EmpiricalMeasure, Vec<MdeResult>)> {
        let spec = self.generator.build()?;
        let data = self.data.load(&spec, &self.theta_star, base)?;
        let results = (0..self.runs)
            .map(|r| mde(&spec, &data, &self.run_config(r), self.theta0.as_deref()))
            .collect::<Result<Vec<_>>>()?;
        Ok((data, results))
    }
}

/// ABC rejection over several thresholds sharing one set of draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbcExperiment {
    #[serde(default)]
    pub name: String,
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub theta_star: Vec<f64>,
    pub data: DataSource,
    pub discrepancy: DiscrepancySpec,
    pub prior: Vec<[f64; 2]>,
    pub epsilons: Vec<f64>,
    pub attempts: usize,
    pub n_sim: usize,
    pub sampler: Sampler,
    pub seed: u64,
}

impl AbcExperiment {
    pub fn from_json(text: &str) -> Result<Self> {
        let e: Self = serde_json::from_str(text)?;
        if e.epsilons.is_empty() {
            return Err(invalid_arg("need at least one epsilon"));
        }
        Ok(e)
    }

    pub fn run(&self, base: &Path) -> Result<(EmpiricalMeasure, Vec<AbcResult>)> {
        let spec = self.generator.build()?;
        let data = self.data.load(&spec, &self.theta_star, base)?;
        let prior = UniformBox::new(self.prior.clone())?;
        let res = abc_reject_many(
            &prior,
            &spec,
            &data,
            &self.discrepancy,
            &self.epsilons,
            self.attempts,
            self.n_sim,
            self.sampler,
            self.seed,
        )?;
        Ok((data, res))
    }
}
