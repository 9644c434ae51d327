//! One enum naming every discrepancy the crate can evaluate, with its
//! hyperparameters, so configs and the inference layer can stay generic.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::generators::EmpiricalMeasure;
use crate::mmd::{mmd2, KernelKind, KernelSpec, MmdEstimator};
use crate::transport::{
    sinkhorn_divergence, sliced_wasserstein_with, wasserstein, wasserstein_lp_with_budget, CostSpec,
    SinkhornOptions, SliceDirections, DEFAULT_LP_BUDGET,
};

fn one() -> f64 {
    1.0
}

fn default_tol() -> f64 {
    1e-9
}

fn default_max_iter() -> usize {
    10_000
}

fn default_budget() -> u64 {
    DEFAULT_LP_BUDGET
}

fn default_slices() -> usize {
    100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiscrepancySpec {
    /// Squared MMD. `lengthscale` defaults to `1.5 sqrt(d)`.
    Mmd {
        #[serde(default)]
        kernel: KernelKind,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        lengthscale: Option<f64>,
        #[serde(default)]
        estimator: MmdEstimator,
        /// Report `MMD = sqrt(MMD²)` instead; needs the V-statistic, the
        /// only estimator that is never negative.
        #[serde(default)]
        root: bool,
    },
    /// Exact `W_p`: sorting in one dimension, the LP otherwise.
    Wasserstein {
        #[serde(default)]
        cost: CostSpec,
        #[serde(default = "default_budget")]
        budget: u64,
    },
    /// Debiased Sinkhorn divergence.
    Sinkhorn {
        #[serde(default)]
        cost: CostSpec,
        lambda: f64,
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
    },
    /// Sliced `W_p`.
    Sliced {
        #[serde(default = "default_slices")]
        slices: usize,
        #[serde(default = "one")]
        p: f64,
        #[serde(default)]
        directions: SliceDirections,
        #[serde(default)]
        direction_seed: u64,
    },
}

impl DiscrepancySpec {
    /// Plug-in MMD² with the default squared-exponential kernel.
    pub fn mmd_default() -> Self {
        Self::Mmd {
            kernel: KernelKind::Se,
            amplitude: 1.0,
            lengthscale: None,
            estimator: MmdEstimator::Plugin,
            root: false,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Mmd { .. } => "mmd",
            Self::Wasserstein { .. } => "wasserstein",
            Self::Sinkhorn { .. } => "sinkhorn",
            Self::Sliced { .. } => "sliced",
        }
    }

    /// Short label with the hyperparameters, used in CSV files and plots.
    pub fn label(&self) -> String {
        match self {
            Self::Mmd { kernel, lengthscale, estimator, root, .. } => {
                let est = match estimator {
                    MmdEstimator::Plugin => "",
                    MmdEstimator::VStatistic if *root => "-root",
                    MmdEstimator::VStatistic => "-v",
                    MmdEstimator::UStatistic => "-u",
                };
                match lengthscale {
                    Some(l) => format!("mmd{est}-{kernel}-l{l}"),
                    None => format!("mmd{est}-{kernel}"),
                }
            }
            Self::Wasserstein { cost, .. } => format!("w{}-{}", cost.p, cost.metric),
            Self::Sinkhorn { cost, lambda, .. } => format!("sinkhorn{}-{}-lam{lambda}", cost.p, cost.metric),
            Self::Sliced { slices, p, .. } => format!("sw{p}-L{slices}"),
        }
    }

    /// True when `D(P, P) = 0` holds exactly for the estimator.
    pub fn vanishes_on_equal_inputs(&self) -> bool {
        !matches!(
            self,
            Self::Mmd {
                estimator: MmdEstimator::Plugin | MmdEstimator::UStatistic,
                ..
            }
        )
    }

    /// Kernel actually used for data of dimension `d`.
    pub fn kernel_for(&self, d: usize) -> Option<Result<KernelSpec>> {
        match self {
            Self::Mmd { kernel, amplitude, lengthscale, .. } => {
                let l = lengthscale.unwrap_or_else(|| 1.5 * (d as f64).sqrt());
                Some(KernelSpec::from_name(&kernel.to_string(), *amplitude, l))
            }
            _ => None,
        }
    }

    /// Whether an `n x m` comparison fits the exact-LP budget.
    pub fn fits_budget(&self, n: usize, m: usize, d: usize) -> bool {
        match self {
            Self::Wasserstein { budget, .. } if d > 1 => (n as u64) * (m as u64) <= *budget,
            _ => true,
        }
    }

    pub fn evaluate(&self, x: &EmpiricalMeasure, y: &EmpiricalMeasure) -> Result<f64> {
        self.evaluate_seeded(x, y, None)
    }

    /// Like [`evaluate`](Self::evaluate); `direction_seed` overrides the
    /// sliced directions seed when given.
    pub fn evaluate_seeded(
        &self,
        x: &EmpiricalMeasure,
        y: &EmpiricalMeasure,
        direction_seed: Option<u64>,
    ) -> Result<f64> {
        match self {
            Self::Mmd { estimator, root, .. } => {
                let k = self.kernel_for(x.d()).expect("mmd has a kernel")?;
                match (root, estimator) {
                    (false, _) => mmd2(x, y, &k, *estimator),
                    (true, MmdEstimator::VStatistic) => Ok(mmd2(x, y, &k, *estimator)?.max(0.0).sqrt()),
                    (true, _) => Err(crate::error::invalid_arg("root MMD needs the v-statistic estimator")),
                }
            }
            Self::Wasserstein { cost, budget } => {
                if x.d() == 1 {
                    wasserstein(x, y, cost)
                } else {
                    wasserstein_lp_with_budget(x, y, cost, *budget)
                }
            }
            Self::Sinkhorn { cost, lambda, tol, max_iter } => {
                let opts = SinkhornOptions {
                    lambda: *lambda,
                    tol: *tol,
                    max_iter: *max_iter,
                };
                sinkhorn_divergence(x, y, cost, &opts)
            }
            Self::Sliced { slices, p, directions, direction_seed: seed } => {
                sliced_wasserstein_with(x, y, *slices, *p, direction_seed.unwrap_or(*seed), *directions)
            }
        }
    }
}
