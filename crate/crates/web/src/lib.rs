//! WebAssembly bindings behind `www/index.html`.
//!
//! Each exported function is a thin wrapper over a plain Rust function
//! returning `Result<_, String>`, so the logic is testable natively.

use qmcd::discrepancy::DiscrepancySpec;
use qmcd::experiments::{aggregate, fit_series, ErrorMode, FitConfig, NGrid, SweepConfig};
use qmcd::generators::GeneratorConfig;
use qmcd::inference::{simulate, Sampler};
use qmcd::qmc_points::{point_set, Family};
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Row-major coordinates of `n` points in dimension `s`. A negative seed
/// means no scrambling.
pub fn points_inner(family: &str, n: usize, s: usize, seed: i64) -> Result<Vec<f64>, String> {
    let family: Family = family.parse().map_err(err)?;
    let seed = (seed >= 0).then_some(seed as u64);
    Ok(point_set(family, n, s, seed).map_err(err)?.into_vec())
}

/// Samples from a two-dimensional generator: `gandk`, `bivariate_beta` or
/// `gaussian`. `theta` is comma separated; empty for the Gaussian.
pub fn samples_inner(generator: &str, theta: &str, n: usize, sampler: &str, seed: u64) -> Result<Vec<f64>, String> {
    let cfg = match generator {
        "gandk" => GeneratorConfig::Gandk { d: 2 },
        "bivariate_beta" => GeneratorConfig::BivariateBeta,
        "gaussian" => GeneratorConfig::GaussianStd { d: 2 },
        other => return Err(format!("unknown generator `{other}`")),
    };
    let theta: Vec<f64> = theta
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| format!("bad parameter `{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    let sampler: Sampler = sampler.parse().map_err(err)?;
    let spec = cfg.build().map_err(err)?;
    Ok(simulate(&spec, &theta, sampler, n, seed).map_err(err)?.into_vec())
}

/// Mean error per `n = 2^4 .. 2^log2_max` for MC and scrambled Sobol on
/// the uniform model in one dimension, with fitted slopes, as JSON.
pub fn complexity_inner(discrepancy: &str, log2_max: u32, reps: usize, seed: u64) -> Result<String, String> {
    let disc: DiscrepancySpec = match discrepancy {
        "mmd" => serde_json::from_str(r#"{"kind":"mmd","lengthscale":1.5}"#),
        "wasserstein" => serde_json::from_str(r#"{"kind":"wasserstein"}"#),
        "sinkhorn" => serde_json::from_str(r#"{"kind":"sinkhorn","lambda":2.0,"cost":{"p":2.0}}"#),
        other => return Err(format!("unknown discrepancy `{other}`")),
    }
    .map_err(err)?;
    if !(5..=12).contains(&log2_max) {
        return Err("log2_max must be between 5 and 12".into());
    }
    let cfg = SweepConfig {
        name: "demo".into(),
        generator: GeneratorConfig::Uniform { d: 1 },
        theta: vec![],
        discrepancies: vec![disc],
        samplers: vec![Sampler::Mc, Sampler::Rqmc(Family::Sobol)],
        dims: vec![],
        n_grid: NGrid::Log2 {
            log2_min: 4,
            log2_max,
        },
        repetitions: reps.clamp(1, 50),
        mode: ErrorMode::SelfVsSelf { identical_sides: false },
        seed,
        fit: FitConfig::default(),
    };
    let out = qmcd::experiments::complexity_sweep(&cfg).map_err(err)?;
    let cells = aggregate(&out.records);
    let fits: Vec<_> = fit_series(&cells, &cfg.fit).into_iter().filter_map(Result::ok).collect();
    let series: Vec<_> = cfg
        .samplers
        .iter()
        .map(|s| {
            let label = s.label();
            let points: Vec<_> = cells
                .iter()
                .filter(|c| c.sampler == label)
                .map(|c| serde_json::json!({"n": c.n, "mean": c.mean, "min": c.min, "max": c.max}))
                .collect();
            let slope = fits.iter().find(|f| f.sampler == label).map(|f| f.fit.slope);
            serde_json::json!({"sampler": label, "slope": slope, "points": points})
        })
        .collect();
    Ok(serde_json::json!({ "series": series }).to_string())
}

#[wasm_bindgen]
pub fn points(family: &str, n: usize, s: usize, seed: i64) -> Result<Vec<f64>, JsValue> {
    points_inner(family, n, s, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn samples(generator: &str, theta: &str, n: usize, sampler: &str, seed: u64) -> Result<Vec<f64>, JsValue> {
    samples_inner(generator, theta, n, sampler, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn complexity(discrepancy: &str, log2_max: u32, reps: usize, seed: u64) -> Result<String, JsValue> {
    complexity_inner(discrepancy, log2_max, reps, seed).map_err(|e| JsValue::from_str(&e))
}
