use web_time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{MdeConfig, MdeResult, Objective, TrajectoryRecord};
use crate::error::{invalid_arg, Result};
use crate::generators::{EmpiricalMeasure, GeneratorSpec, ParamVector};
use crate::reduce::ordered_map;
use crate::seed::{self, stream};

fn default_f() -> f64 {
    0.8
}

fn default_cr() -> f64 {
    0.9
}

/// `rand/1/bin` differential evolution settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    /// `[lo, hi]` per parameter.
    pub bounds: Vec<[f64; 2]>,
    /// Population size; `15 p` when absent.
    #[serde(default)]
    pub pop: Option<usize>,
    #[serde(default = "default_f")]
    pub f: f64,
    #[serde(default = "default_cr")]
    pub cr: f64,
}

impl DeConfig {
    pub fn new(bounds: Vec<[f64; 2]>) -> Self {
        Self {
            bounds,
            pop: None,
            f: default_f(),
            cr: default_cr(),
        }
    }

    pub fn population(&self) -> usize {
        self.pop.unwrap_or(15 * self.bounds.len())
    }

    fn validate(&self) -> Result<()> {
        if self.bounds.is_empty() {
            return Err(invalid_arg("differential evolution needs at least one parameter"));
        }
        for (j, [lo, hi]) in self.bounds.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(invalid_arg(format!("bad bounds [{lo}, {hi}] for parameter {j}")));
            }
        }
        if self.population() < 4 {
            return Err(invalid_arg("population must be at least 4"));
        }
        if !(self.f > 0.0 && self.f <= 2.0) || !(0.0..=1.0).contains(&self.cr) {
            return Err(invalid_arg(format!("need 0 < F <= 2 and 0 <= CR <= 1, got {} and {}", self.f, self.cr)));
        }
        Ok(())
    }
}

/// Outcome of [`de_minimize`].
#[derive(Clone, Debug, PartialEq)]
pub struct DeOutcome {
    pub best: Vec<f64>,
    pub best_value: f64,
    pub trajectory: Vec<TrajectoryRecord>,
}

/// Minimises a possibly noisy objective over a box.
///
/// `objective(theta, key)` receives a unique key `[generation, member,
/// role]` (role 0 for the current member, 1 for its trial) that it may use
/// to derive randomness. Every member is re-evaluated each generation.
/// Errors and non-finite values count as `+inf`. The best point ever
/// evaluated is returned.
pub fn de_minimize<F>(objective: F, cfg: &DeConfig, generations: usize, seed: u64) -> Result<DeOutcome>
where
    F: Fn(&[f64], &[u64]) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let p = cfg.bounds.len();
    let np = cfg.population();
    let start = Instant::now();
    let clip = |j: usize, v: f64| v.clamp(cfg.bounds[j][0], cfg.bounds[j][1]);
    let score = |theta: &[f64], key: &[u64]| -> f64 {
        match objective(theta, key) {
            Ok(v) if v.is_finite() => v,
            Ok(v) => {
                log::debug!("objective {v} at {theta:?}");
                f64::INFINITY
            }
            Err(e) => {
                log::debug!("objective failed at {theta:?}: {e}");
                f64::INFINITY
            }
        }
    };

    let mut rng = seed::rng(seed::derive(seed, &[stream::POPULATION]));
    let mut pop: Vec<Vec<f64>> = (0..np)
        .map(|_| {
            cfg.bounds
                .iter()
                .map(|&[lo, hi]| if lo == hi { lo } else { rng.gen_range(lo..=hi) })
                .collect()
        })
        .collect();

    let mut best = pop[0].clone();
    let mut best_value = f64::INFINITY;
    let mut trajectory = Vec::with_capacity(generations);
    for g in 1..=generations as u64 {
        let fitness = ordered_map(np, |i| score(&pop[i], &[g, i as u64, 0]));
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let mut rng = seed::rng(seed::derive(seed, &[stream::MUTATION, g, i as u64]));
                let mut pick = |avoid: &[usize]| loop {
                    let r = rng.gen_range(0..np);
                    if !avoid.contains(&r) {
                        break r;
                    }
                };
                let r1 = pick(&[i]);
                let r2 = pick(&[i, r1]);
                let r3 = pick(&[i, r1, r2]);
                let jrand = rng.gen_range(0..p);
                (0..p)
                    .map(|j| {
                        if j == jrand || rng.gen::<f64>() < cfg.cr {
                            clip(j, pop[r1][j] + cfg.f * (pop[r2][j] - pop[r3][j]))
                        } else {
                            pop[i][j]
                        }
                    })
                    .collect()
            })
            .collect();
        let trial_fitness = ordered_map(np, |i| score(&trials[i], &[g, i as u64, 1]));

        let mut gen_best = f64::INFINITY;
        for (i, trial) in trials.into_iter().enumerate() {
            let (f_cur, f_trial) = (fitness[i], trial_fitness[i]);
            if f_cur < best_value {
                best_value = f_cur;
                best = pop[i].clone();
            }
            if f_trial < best_value {
                best_value = f_trial;
                best = trial.clone();
            }
            let kept = if f_trial <= f_cur {
                pop[i] = trial;
                f_trial
            } else {
                f_cur
            };
            gen_best = gen_best.min(kept);
        }
        trajectory.push(TrajectoryRecord {
            iteration: g as usize,
            objective: gen_best,
            best_objective: best_value,
            theta: best.clone(),
            wall_clock: start.elapsed().as_secs_f64(),
        });
        log::debug!("generation {g}: best {best_value:.6e}");
    }
    Ok(DeOutcome {
        best,
        best_value,
        trajectory,
    })
}

/// Minimum distance estimation by differential evolution.
pub fn differential_evolution(
    spec: &GeneratorSpec,
    data: &EmpiricalMeasure,
    cfg: &MdeConfig,
    de: &DeConfig,
) -> Result<MdeResult> {
    if de.bounds.len() != spec.param_count() {
        return Err(invalid_arg(format!(
            "{} bounds for {} parameters",
            de.bounds.len(),
            spec.param_count()
        )));
    }
    let obj = Objective::new(spec, data, cfg)?;
    let out = de_minimize(|theta, key| obj.evaluate(theta, key), de, cfg.iterations, cfg.seed)?;
    let full = if cfg.full_data_discrepancy {
        obj.full_data(&out.best)
    } else {
        None
    };
    Ok(MdeResult {
        theta_hat: ParamVector::for_spec(spec, out.best)?,
        trajectory: out.trajectory,
        final_discrepancy_full_data: full,
        metadata: serde_json::json!({
            "optimizer": "differential_evolution",
            "strategy": "rand/1/bin",
            "population": de.population(),
            "f": de.f,
            "cr": de.cr,
            "n_sim": obj.n_sim,
            "best_objective": out.best_value,
        }),
    })
}
