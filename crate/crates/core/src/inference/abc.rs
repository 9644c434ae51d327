use std::io::Write;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{simulate, Sampler};
use crate::discrepancy::DiscrepancySpec;
use crate::error::{invalid_arg, Result};
use crate::generators::{EmpiricalMeasure, GeneratorSpec, ParamVector};
use crate::io::format_f64;
use crate::reduce::ordered_map;
use crate::seed::{self, stream, Rng};

/// Seedable prior over the parameter space.
pub trait Prior: Sync {
    fn dim(&self) -> usize;
    fn sample(&self, rng: &mut Rng) -> Vec<f64>;
}

/// Independent uniform marginals on a box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformBox {
    pub bounds: Vec<[f64; 2]>,
}

impl UniformBox {
    pub fn new(bounds: Vec<[f64; 2]>) -> Result<Self> {
        if bounds.iter().any(|[lo, hi]| !lo.is_finite() || !hi.is_finite() || lo > hi) {
            return Err(invalid_arg("prior bounds must be finite with lo <= hi"));
        }
        Ok(Self { bounds })
    }
}

impl Prior for UniformBox {
    fn dim(&self) -> usize {
        self.bounds.len()
    }

    fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|&[lo, hi]| if lo == hi { lo } else { rng.gen_range(lo..hi) })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbcResult {
    pub accepted: Vec<ParamVector>,
    /// Attempt index of each accepted draw.
    pub accepted_index: Vec<usize>,
    /// Discrepancy of every attempt (`+inf` when simulation failed).
    pub distances: Vec<f64>,
    pub attempted: usize,
    pub epsilon: f64,
    pub acceptance_rate: f64,
}

impl AbcResult {
    /// One row per attempt: `attempt,distance,accepted,<theta names>`.
    pub fn write_csv<W: Write>(&self, w: W, draws: &[ParamVector]) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["attempt".to_string(), "distance".into(), "accepted".into()];
        if let Some(first) = draws.first() {
            header.extend(first.names().iter().cloned());
        }
        wtr.write_record(&header)?;
        let mut acc = self.accepted_index.iter().peekable();
        for (k, d) in self.distances.iter().enumerate() {
            let hit = acc.peek() == Some(&&k);
            if hit {
                acc.next();
            }
            let mut row = vec![k.to_string(), format_f64(*d), (hit as u8).to_string()];
            if let Some(p) = draws.get(k) {
                row.extend(p.iter().map(|&t| format_f64(t)));
            }
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Prior draws and their discrepancies to the data.
pub struct AbcDraws {
    pub thetas: Vec<ParamVector>,
    pub distances: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn abc_draws(
    prior: &dyn Prior,
    spec: &GeneratorSpec,
    data: &EmpiricalMeasure,
    discrepancy: &DiscrepancySpec,
    attempts: usize,
    n_sim: usize,
    sampler: Sampler,
    seed: u64,
) -> Result<AbcDraws> {
    if attempts == 0 {
        return Err(invalid_arg("need at least one attempt"));
    }
    if prior.dim() != spec.param_count() {
        return Err(invalid_arg(format!(
            "prior has dimension {}, generator takes {} parameters",
            prior.dim(),
            spec.param_count()
        )));
    }
    let rows = ordered_map(attempts, |k| {
        let k = k as u64;
        let theta = prior.sample(&mut seed::rng(seed::derive(seed, &[stream::PRIOR, k])));
        let sim_seed = seed::derive(seed, &[k]);
        let dist = simulate(spec, &theta, sampler, n_sim, sim_seed)
            .and_then(|x| discrepancy.evaluate_seeded(&x, data, Some(seed::derive(sim_seed, &[stream::DIRECTIONS]))));
        let dist = match dist {
            Ok(v) if !v.is_nan() => v,
            Ok(_) => f64::INFINITY,
            Err(e) => {
                log::debug!("attempt {k} failed: {e}");
                f64::INFINITY
            }
        };
        (theta, dist)
    });
    let mut thetas = Vec::with_capacity(attempts);
    let mut distances = Vec::with_capacity(attempts);
    for (t, d) in rows {
        thetas.push(ParamVector::for_spec(spec, t)?);
        distances.push(d);
    }
    Ok(AbcDraws { thetas, distances })
}

/// Accepts the draws within `epsilon`.
pub fn abc_accept(draws: &AbcDraws, epsilon: f64) -> Result<AbcResult> {
    if !(epsilon >= 0.0) {
        return Err(invalid_arg(format!("epsilon must be >= 0, got {epsilon}")));
    }
    let accepted_index: Vec<usize> = (0..draws.distances.len()).filter(|&k| draws.distances[k] <= epsilon).collect();
    let attempted = draws.distances.len();
    Ok(AbcResult {
        accepted: accepted_index.iter().map(|&k| draws.thetas[k].clone()).collect(),
        acceptance_rate: accepted_index.len() as f64 / attempted as f64,
        accepted_index,
        distances: draws.distances.clone(),
        attempted,
        epsilon,
    })
}

/// ABC rejection: `attempts` prior draws, each simulated with `n_sim`
/// points and kept when its discrepancy to `data` is at most `epsilon`.
#[allow(clippy::too_many_arguments)]
pub fn abc_reject(
    prior: &dyn Prior,
    spec: &GeneratorSpec,
    data: &EmpiricalMeasure,
    discrepancy: &DiscrepancySpec,
    epsilon: f64,
    attempts: usize,
    n_sim: usize,
    sampler: Sampler,
    seed: u64,
) -> Result<AbcResult> {
    let draws = abc_draws(prior, spec, data, discrepancy, attempts, n_sim, sampler, seed)?;
    abc_accept(&draws, epsilon)
}

/// Several thresholds on one shared set of draws, so accepted sets nest.
#[allow(clippy::too_many_arguments)]
pub fn abc_reject_many(
    prior: &dyn Prior,
    spec: &GeneratorSpec,
    data: &EmpiricalMeasure,
    discrepancy: &DiscrepancySpec,
    epsilons: &[f64],
    attempts: usize,
    n_sim: usize,
    sampler: Sampler,
    seed: u64,
) -> Result<Vec<AbcResult>> {
    let draws = abc_draws(prior, spec, data, discrepancy, attempts, n_sim, sampler, seed)?;
    epsilons.iter().map(|&e| abc_accept(&draws, e)).collect()
}
