use web_time::Instant;

use serde::{Deserialize, Serialize};

use super::{MdeConfig, MdeResult, Objective, TrajectoryRecord};
use crate::error::{invalid_arg, Result};
use crate::generators::{EmpiricalMeasure, GeneratorSpec, ParamVector};
use crate::mmd::central_difference;

/// Fixed-step stochastic gradient descent on finite-difference gradients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub step: f64,
    /// Coordinates optimised on the log scale (`theta_j = exp(phi_j)`).
    #[serde(default)]
    pub exp_coords: Vec<usize>,
    /// Coordinates that move; the rest stay at their starting values. All
    /// coordinates move when absent.
    #[serde(default)]
    pub active: Option<Vec<usize>>,
    /// Box in generator coordinates that iterates are projected onto.
    #[serde(default)]
    pub bounds: Option<Vec<[f64; 2]>>,
    /// Relative finite-difference step: `h_j = fd_step (1 + |phi_j|)`.
    #[serde(default = "default_fd")]
    pub fd_step: f64,
}

fn default_fd() -> f64 {
    1e-4
}

impl SgdConfig {
    pub fn new(step: f64) -> Self {
        Self {
            step,
            exp_coords: Vec::new(),
            active: None,
            bounds: None,
            fd_step: default_fd(),
        }
    }
}

struct Reparam {
    log: Vec<bool>,
}

impl Reparam {
    fn to_gen(&self, phi: &[f64]) -> Vec<f64> {
        phi.iter().zip(&self.log).map(|(&v, &l)| if l { v.exp() } else { v }).collect()
    }

    fn to_opt(&self, theta: &[f64]) -> Result<Vec<f64>> {
        theta
            .iter()
            .zip(&self.log)
            .enumerate()
            .map(|(j, (&v, &l))| {
                if !l {
                    Ok(v)
                } else if v > 0.0 {
                    Ok(v.ln())
                } else {
                    Err(invalid_arg(format!("coordinate {j} is log-scaled but starts at {v}")))
                }
            })
            .collect()
    }

    fn bound_to_opt(&self, j: usize, b: f64) -> f64 {
        if !self.log[j] {
            b
        } else if b > 0.0 {
            b.ln()
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Minimum distance estimation by SGD from `theta0`.
///
/// Each step draws a fresh minibatch and point set, then differentiates the
/// objective on those common inputs. A step whose gradient is not finite is
/// skipped.
pub fn mde_sgd(
    spec: &GeneratorSpec,
    theta0: &[f64],
    data: &EmpiricalMeasure,
    cfg: &MdeConfig,
    sgd: &SgdConfig,
) -> Result<MdeResult> {
    spec.check_params(theta0)?;
    let p = theta0.len();
    if !(sgd.step >= 0.0) || !sgd.step.is_finite() {
        return Err(invalid_arg(format!("step must be finite and >= 0, got {}", sgd.step)));
    }
    if !(sgd.fd_step > 0.0) {
        return Err(invalid_arg("finite-difference step must be > 0"));
    }
    let mut log = vec![false; p];
    for &j in &sgd.exp_coords {
        *log.get_mut(j).ok_or_else(|| invalid_arg(format!("exp coordinate {j} out of range")))? = true;
    }
    let active: Vec<usize> = sgd.active.clone().unwrap_or_else(|| (0..p).collect());
    if active.iter().any(|&j| j >= p) {
        return Err(invalid_arg("active coordinate out of range"));
    }
    if let Some(b) = &sgd.bounds {
        if b.len() != p {
            return Err(invalid_arg(format!("{} bounds for {p} parameters", b.len())));
        }
    }
    let rp = Reparam { log };
    let obj = Objective::new(spec, data, cfg)?;
    let start = Instant::now();
    let mut phi = rp.to_opt(theta0)?;
    let mut best = f64::INFINITY;
    let mut trajectory = Vec::with_capacity(cfg.iterations);
    let mut skipped = 0usize;

    for t in 1..=cfg.iterations as u64 {
        let key = [t];
        let batch = obj.minibatch(&key)?;
        let sim_seed = obj.sim_seed(&key);
        let f = |phi: &[f64]| obj.evaluate_with(&rp.to_gen(phi), sim_seed, &batch);
        let sub = |x: &[f64]| {
            let mut full = phi.clone();
            for (k, &j) in active.iter().enumerate() {
                full[j] = x[k];
            }
            f(&full)
        };
        let x0: Vec<f64> = active.iter().map(|&j| phi[j]).collect();
        let steps: Vec<f64> = x0.iter().map(|v| sgd.fd_step * (1.0 + v.abs())).collect();
        let value = f(&phi);
        let grad = central_difference(sub, &x0, &steps);
        match (value, grad) {
            (Ok(v), Ok(g)) if g.grad.iter().all(|x| x.is_finite()) => {
                best = best.min(v);
                for (k, &j) in active.iter().enumerate() {
                    phi[j] -= sgd.step * g.grad[k];
                    if let Some(b) = &sgd.bounds {
                        phi[j] = phi[j].clamp(rp.bound_to_opt(j, b[j][0]), rp.bound_to_opt(j, b[j][1]));
                    }
                }
                trajectory.push(TrajectoryRecord {
                    iteration: t as usize,
                    objective: v,
                    best_objective: best,
                    theta: rp.to_gen(&phi),
                    wall_clock: start.elapsed().as_secs_f64(),
                });
            }
            (value, grad) => {
                skipped += 1;
                log::warn!(
                    "step {t} skipped: objective {:?}, gradient {:?}",
                    value.as_ref().map_err(|e| e.to_string()),
                    grad.map(|g| g.grad).map_err(|e| e.to_string())
                );
                trajectory.push(TrajectoryRecord {
                    iteration: t as usize,
                    objective: value.unwrap_or(f64::NAN),
                    best_objective: best,
                    theta: rp.to_gen(&phi),
                    wall_clock: start.elapsed().as_secs_f64(),
                });
            }
        }
    }
    let theta_hat = rp.to_gen(&phi);
    let full = if cfg.full_data_discrepancy {
        obj.full_data(&theta_hat)
    } else {
        None
    };
    Ok(MdeResult {
        theta_hat: ParamVector::for_spec(spec, theta_hat)?,
        trajectory,
        final_discrepancy_full_data: full,
        metadata: serde_json::json!({
            "optimizer": "sgd",
            "step": sgd.step,
            "exp_coords": sgd.exp_coords,
            "active": active,
            "fd_step": sgd.fd_step,
            "n_sim": obj.n_sim,
            "skipped_steps": skipped,
        }),
    })
}
