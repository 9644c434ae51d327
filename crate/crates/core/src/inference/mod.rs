//! Minimum distance estimation and ABC rejection.
//!
//! Every objective evaluation is keyed by a derived seed (run seed, stream,
//! iteration, candidate), so results do not depend on evaluation order or
//! thread count.

mod abc;
mod de;
mod sgd;

use std::borrow::Cow;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::discrepancy::DiscrepancySpec;
use crate::error::{invalid_arg, Error, Result};
use crate::generators::{generate, EmpiricalMeasure, GeneratorSpec};
use crate::io::format_f64;
use crate::qmc_points::{
    default_generating_vector, halton, pseudo_random, rank1_lattice, sobol, Family, LatticeShift, PointSet,
};
use crate::seed::{self, stream};

pub use abc::{abc_accept, abc_draws, abc_reject, abc_reject_many, AbcDraws, AbcResult, Prior, UniformBox};
pub use de::{de_minimize, differential_evolution, DeConfig, DeOutcome};
pub use sgd::{mde_sgd, SgdConfig};

/// Where simulation inputs come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Sampler {
    /// Pseudo-random uniforms.
    Mc,
    /// A randomised QMC family: scrambled Sobol, scrambled Halton or a
    /// randomly shifted lattice.
    Rqmc(Family),
}

impl Sampler {
    /// Point set of `n` points in `[0,1)^s`, randomised by `seed`.
    pub fn draw(&self, n: usize, s: usize, seed: u64) -> Result<PointSet> {
        match self {
            Self::Mc | Self::Rqmc(Family::PseudoRandom) => pseudo_random(n, s, seed),
            Self::Rqmc(Family::Sobol) => sobol(n, s, Some(seed)),
            Self::Rqmc(Family::Halton) => halton(n, s, Some(seed)),
            Self::Rqmc(Family::Lattice) => {
                let z = default_generating_vector(n, s)?;
                rank1_lattice(n, &z, LatticeShift::Seeded(seed))
            }
            Self::Rqmc(Family::VanDerCorput) => {
                if s != 1 {
                    return Err(invalid_arg("van der Corput points are one-dimensional"));
                }
                // base 2 radical inverse is the first Sobol coordinate
                sobol(n, 1, Some(seed))
            }
        }
    }

    pub fn is_qmc(&self) -> bool {
        !matches!(self, Self::Mc | Self::Rqmc(Family::PseudoRandom))
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Mc | Self::Rqmc(Family::PseudoRandom) => f.write_str("mc"),
            Self::Rqmc(fam) => write!(f, "rqmc-{}", fam.name()),
        }
    }
}

impl FromStr for Sampler {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        if s == "mc" {
            return Ok(Self::Mc);
        }
        if s == "rqmc" {
            return Ok(Self::Rqmc(Family::Sobol));
        }
        let fam: Family = s.strip_prefix("rqmc-").unwrap_or(&s).parse()?;
        Ok(match fam {
            Family::PseudoRandom => Self::Mc,
            other => Self::Rqmc(other),
        })
    }
}

impl TryFrom<String> for Sampler {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Sampler> for String {
    fn from(s: Sampler) -> String {
        s.to_string()
    }
}

/// Simulates `n` samples from `G_theta`. Points and the rejection fallback
/// use separate streams derived from `seed`.
pub fn simulate(spec: &GeneratorSpec, theta: &[f64], sampler: Sampler, n: usize, seed: u64) -> Result<EmpiricalMeasure> {
    let s = spec.input_dim(theta)?;
    let ps = sampler.draw(n, s, seed::derive(seed, &[stream::POINTS]))?;
    generate(spec, theta, &ps, seed::derive(seed, &[stream::FALLBACK]))
}

/// Number of simulated samples per objective evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SimSize {
    Fixed(usize),
    /// `n = round(m^exponent)` for data size `m`.
    Exponent { exponent: f64 },
}

impl SimSize {
    pub fn resolve(&self, m: usize) -> Result<usize> {
        let n = match *self {
            Self::Fixed(n) => n,
            Self::Exponent { exponent } => {
                if !(exponent > 0.0 && exponent <= 1.0) {
                    return Err(invalid_arg(format!("exponent must be in (0, 1], got {exponent}")));
                }
                (m as f64).powf(exponent).round() as usize
            }
        };
        if n == 0 {
            return Err(invalid_arg("simulation size must be at least 1"));
        }
        Ok(n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    DifferentialEvolution(DeConfig),
    Sgd(SgdConfig),
}

fn default_true() -> bool {
    true
}

/// Settings shared by both estimators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MdeConfig {
    pub discrepancy: DiscrepancySpec,
    pub sampler: Sampler,
    pub n_sim: SimSize,
    /// Data rows per evaluation; `None` uses all the data.
    #[serde(default)]
    pub minibatch: Option<usize>,
    /// Generations for DE, steps for SGD.
    pub iterations: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
    /// Draw a fresh randomised point set for every evaluation. When false a
    /// single point set is reused throughout.
    #[serde(default = "default_true")]
    pub resample_points: bool,
    /// Evaluate the fitted model against all the data at the end.
    #[serde(default = "default_true")]
    pub full_data_discrepancy: bool,
}

/// One optimiser iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub iteration: usize,
    pub objective: f64,
    pub best_objective: f64,
    pub theta: Vec<f64>,
    /// Seconds since the start of the run. Not written to the trajectory
    /// CSV, which must be reproducible byte for byte.
    pub wall_clock: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MdeResult {
    pub theta_hat: crate::generators::ParamVector,
    pub trajectory: Vec<TrajectoryRecord>,
    pub final_discrepancy_full_data: Option<f64>,
    /// Resolved hyperparameters (population size, F, CR, step, ...).
    pub metadata: serde_json::Value,
}

impl MdeResult {
    /// Trajectory CSV: `iteration,objective,best_objective,<theta names>`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["iteration".to_string(), "objective".into(), "best_objective".into()];
        header.extend(self.theta_hat.names().iter().cloned());
        wtr.write_record(&header)?;
        for r in &self.trajectory {
            let mut row = vec![r.iteration.to_string(), format_f64(r.objective), format_f64(r.best_objective)];
            row.extend(r.theta.iter().map(|&t| format_f64(t)));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Per-iteration wall-clock seconds, kept apart from the trajectory.
    pub fn write_timings_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["iteration", "wall_clock"])?;
        for r in &self.trajectory {
            wtr.write_record([r.iteration.to_string(), format!("{:.6}", r.wall_clock)])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn metadata_json(&self, config: &MdeConfig) -> serde_json::Value {
        serde_json::json!({
            "config": config,
            "resolved": self.metadata,
            "theta_hat": self.theta_hat,
            "final_discrepancy_full_data": self.final_discrepancy_full_data,
        })
    }
}

/// Shared objective plumbing: minibatching, point sets and evaluation.
pub(crate) struct Objective<'a> {
    pub spec: &'a GeneratorSpec,
    pub data: &'a EmpiricalMeasure,
    pub cfg: &'a MdeConfig,
    pub n_sim: usize,
}

impl<'a> Objective<'a> {
    pub fn new(spec: &'a GeneratorSpec, data: &'a EmpiricalMeasure, cfg: &'a MdeConfig) -> Result<Self> {
        if let Some(b) = cfg.minibatch {
            if b == 0 || b > data.n() {
                return Err(invalid_arg(format!("minibatch {b} must be in 1..={}", data.n())));
            }
        }
        if spec.output_dim() != data.d() {
            return Err(invalid_arg(format!(
                "generator produces dimension {}, data has {}",
                spec.output_dim(),
                data.d()
            )));
        }
        Ok(Self {
            spec,
            data,
            cfg,
            n_sim: cfg.n_sim.resolve(data.n())?,
        })
    }

    pub fn minibatch(&self, key: &[u64]) -> Result<Cow<'a, EmpiricalMeasure>> {
        match self.cfg.minibatch {
            Some(b) if b < self.data.n() => {
                let mut path = vec![stream::MINIBATCH];
                path.extend_from_slice(key);
                let mut rng = seed::rng(seed::derive(self.cfg.seed, &path));
                let idx = rand::seq::index::sample(&mut rng, self.data.n(), b).into_vec();
                Ok(Cow::Owned(self.data.select(&idx)?))
            }
            _ => Ok(Cow::Borrowed(self.data)),
        }
    }

    /// Seed for the simulation side of evaluation `key`.
    pub fn sim_seed(&self, key: &[u64]) -> u64 {
        if self.cfg.resample_points {
            seed::derive(self.cfg.seed, key)
        } else {
            seed::derive(self.cfg.seed, &[u64::MAX])
        }
    }

    pub fn evaluate_with(&self, theta: &[f64], sim_seed: u64, batch: &EmpiricalMeasure) -> Result<f64> {
        let x = simulate(self.spec, theta, self.cfg.sampler, self.n_sim, sim_seed)?;
        let v = self.cfg.discrepancy.evaluate_seeded(&x, batch, Some(seed::derive(sim_seed, &[stream::DIRECTIONS])))?;
        if !v.is_finite() {
            return Err(crate::error::invalid_param(format!("objective is {v}")));
        }
        Ok(v)
    }

    /// Fresh minibatch and simulation for evaluation `key`.
    pub fn evaluate(&self, theta: &[f64], key: &[u64]) -> Result<f64> {
        let batch = self.minibatch(key)?;
        self.evaluate_with(theta, self.sim_seed(key), &batch)
    }

    /// Discrepancy between `n_sim` fresh samples at `theta` and all the data.
    pub fn full_data(&self, theta: &[f64]) -> Option<f64> {
        let seed = seed::derive(self.cfg.seed, &[stream::REFERENCE]);
        match self.evaluate_with(theta, seed, self.data) {
            Ok(v) => Some(v),
            Err(e) => {
                log::warn!("full-data discrepancy unavailable: {e}");
                None
            }
        }
    }
}

/// Runs the optimiser named in `cfg`. `theta0` is the SGD start (ignored by
/// DE, which samples its population inside the bounds).
pub fn mde(spec: &GeneratorSpec, data: &EmpiricalMeasure, cfg: &MdeConfig, theta0: Option<&[f64]>) -> Result<MdeResult> {
    match &cfg.optimizer {
        Optimizer::DifferentialEvolution(de) => differential_evolution(spec, data, cfg, de),
        Optimizer::Sgd(sgd) => {
            let theta0 = theta0.ok_or_else(|| invalid_arg("SGD needs a starting parameter"))?;
            mde_sgd(spec, theta0, data, cfg, sgd)
        }
    }
}
