use qmcd::inference::{
    abc_reject, de_minimize, mde, mde_sgd, simulate, DeConfig, MdeConfig, Optimizer, Sampler, SgdConfig, SimSize,
    UniformBox,
};
use qmcd::{DiscrepancySpec, Family, GeneratorSpec};
use serde_json::json;

fn mmd_v() -> DiscrepancySpec {
    serde_json::from_value(json!({"kind": "mmd", "estimator": "v_statistic"})).unwrap()
}

fn location_setup() -> (GeneratorSpec, qmcd::EmpiricalMeasure) {
    // g = k = 0 turns the g-and-k into N(a, b^2)
    let spec = GeneratorSpec::GandK(1);
    let data = simulate(&spec, &[0.0, 1.0, 0.0, 0.0, 0.0], Sampler::Rqmc(Family::Sobol), 1024, 11).unwrap();
    (spec, data)
}

fn sgd_config(step: f64, iterations: usize) -> (MdeConfig, SgdConfig) {
    let sgd = SgdConfig { active: Some(vec![0]), ..SgdConfig::new(step) };
    let cfg = MdeConfig {
        discrepancy: mmd_v(),
        sampler: Sampler::Rqmc(Family::Sobol),
        n_sim: SimSize::Fixed(512),
        minibatch: None,
        iterations,
        seed: 5,
        optimizer: Optimizer::Sgd(sgd.clone()),
        resample_points: true,
        full_data_discrepancy: false,
    };
    (cfg, sgd)
}

#[test]
fn sgd_recovers_a_gaussian_location() {
    let (spec, data) = location_setup();
    let (cfg, sgd) = sgd_config(0.1, 2000);
    let res = mde_sgd(&spec, &[1.0, 1.0, 0.0, 0.0, 0.0], &data, &cfg, &sgd).unwrap();
    let th = res.theta_hat.values();
    assert!(th[0].abs() < 0.05, "location estimate {}", th[0]);
    assert_eq!(&th[1..], &[1.0, 0.0, 0.0, 0.0]);
}

#[test]
fn sgd_with_zero_step_or_zero_iterations_stays_put() {
    let (spec, data) = location_setup();
    let theta0 = [0.7, 1.0, 0.0, 0.0, 0.0];
    let (cfg, sgd) = sgd_config(0.0, 20);
    let res = mde_sgd(&spec, &theta0, &data, &cfg, &sgd).unwrap();
    assert_eq!(res.theta_hat.values(), &theta0);
    assert!(res.trajectory.iter().all(|t| t.theta == theta0));

    let (cfg, sgd) = sgd_config(0.1, 0);
    let res = mde_sgd(&spec, &theta0, &data, &cfg, &sgd).unwrap();
    assert_eq!(res.theta_hat.values(), &theta0);
}

#[test]
fn de_is_elitist_and_deterministic() {
    let bowl = |t: &[f64], _key: &[u64]| Ok((t[0] - 0.3).powi(2) + 2.0 * (t[1] + 0.5).powi(2));
    let cfg = DeConfig::new(vec![[-2.0, 2.0], [-2.0, 2.0]]);
    let a = de_minimize(bowl, &cfg, 60, 42).unwrap();
    let b = de_minimize(bowl, &cfg, 60, 42).unwrap();
    assert_eq!(a.best, b.best);
    assert_eq!(a.trajectory.len(), b.trajectory.len());
    for (x, y) in a.trajectory.iter().zip(&b.trajectory) {
        assert_eq!((x.objective.to_bits(), &x.theta), (y.objective.to_bits(), &y.theta));
    }
    for w in a.trajectory.windows(2) {
        assert!(w[1].best_objective <= w[0].best_objective);
    }
    assert!((a.best[0] - 0.3).abs() < 1e-3 && (a.best[1] + 0.5).abs() < 1e-3, "{:?}", a.best);
    let c = de_minimize(bowl, &cfg, 60, 43).unwrap();
    assert_ne!(a.trajectory[0].theta, c.trajectory[0].theta);
}

#[test]
fn mde_with_de_runs_from_config() {
    let (spec, data) = location_setup();
    let mut cfg = sgd_config(0.1, 15).0;
    cfg.optimizer = Optimizer::DifferentialEvolution(DeConfig::new(vec![
        [-1.0, 1.0],
        [1.0, 1.0],
        [0.0, 0.0],
        [0.0, 0.0],
        [0.0, 0.0],
    ]));
    cfg.n_sim = SimSize::Fixed(128);
    cfg.full_data_discrepancy = true;
    let a = mde(&spec, &data, &cfg, None).unwrap();
    let b = mde(&spec, &data, &cfg, None).unwrap();
    assert_eq!(a.theta_hat, b.theta_hat);
    assert_eq!(a.trajectory.len(), 15);
    assert!(a.final_discrepancy_full_data.is_some());
    assert!(a.theta_hat.values()[0].abs() < 0.3);
}

#[test]
fn abc_at_zero_threshold_accepts_nothing() {
    let spec = GeneratorSpec::GandK(1);
    let data = simulate(&spec, &[3.0, 1.0, 1.0, 0.5, 0.0], Sampler::Mc, 100, 3).unwrap();
    let prior = UniformBox::new(vec![[0.0, 10.0], [1.0, 1.0], [1.0, 1.0], [0.5, 0.5], [0.0, 0.0]]).unwrap();
    let w1: DiscrepancySpec = serde_json::from_value(json!({"kind": "wasserstein"})).unwrap();
    let res = abc_reject(&prior, &spec, &data, &w1, 0.0, 1000, 100, Sampler::Rqmc(Family::Sobol), 8).unwrap();
    assert_eq!(res.attempted, 1000);
    assert_eq!(res.acceptance_rate, 0.0);
    assert!(res.accepted.is_empty());
}
