use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use qmcd::discrepancy::DiscrepancySpec;
use qmcd::error::{Error, Result};
use qmcd::experiments::{self, AbcExperiment, MdeExperiment, SweepConfig};
use qmcd::generators::GeneratorConfig;
use qmcd::inference::{simulate, Sampler};
use qmcd::mmd::MmdEstimator;
use qmcd::qmc_points::{point_set, Family};
use qmcd::{io, with_jobs};
use serde_json::{json, Map, Value};

use crate::{AbcArgs, Command, DiscrepancyArgs, PlotArgs, PointsArgs, RunArgs, SimulateArgs, SweepArgs};

fn invalid_arg(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub fn run(cmd: &Command) -> Result<String> {
    match cmd {
        Command::Points(a) => points(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Discrepancy(a) => with_jobs(a.jobs, || discrepancy(a))?,
        Command::Sweep(a) => sweep(a),
        Command::Mde(a) => with_jobs(a.jobs, || mde(a))?,
        Command::Abc(a) => with_jobs(a.run.jobs, || abc(a))?,
        Command::Plot(a) => plot(a),
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| invalid_arg(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn argv() -> Vec<String> {
    std::env::args().collect()
}

/// `pts.csv` -> `pts.manifest.json`.
fn manifest_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.manifest.json"))
}

fn write_manifest(path: &Path, mut body: Value) -> Result<()> {
    if let Value::Object(m) = &mut body {
        m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        m.insert("argv".into(), json!(argv()));
    }
    let mut text = serde_json::to_string_pretty(&body)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn points(a: &PointsArgs) -> Result<String> {
    let family: Family = a.family.parse()?;
    let seed = match (family, a.scramble_seed) {
        (Family::PseudoRandom, None) => Some(a.seed.unwrap_or(0)),
        (_, s) => s,
    };
    let ps = point_set(family, a.n, a.s, seed)?;
    io::write_point_set(create(&a.out)?, &ps)?;
    write_manifest(
        &manifest_path(&a.out),
        json!({"command": "points", "family": family.name(), "n": a.n, "s": a.s, "scramble_seed": seed}),
    )?;
    Ok(format!("wrote {} {} points in dimension {} to {}", ps.n(), family.name(), ps.s(), a.out.display()))
}

fn generator_config(a: &SimulateArgs) -> Result<GeneratorConfig> {
    let mut value = match &a.config {
        Some(p) => read_json(p)?,
        None => json!({}),
    };
    let obj = value.as_object_mut().ok_or_else(|| invalid_arg("generator config must be a JSON object"))?;
    if let Some(g) = &a.generator {
        let kind = match g.as_str() {
            "gaussian" => "gaussian_std",
            "bivbeta" => "bivariate_beta",
            "mlp" => "smooth_mlp",
            other => other,
        };
        obj.insert("kind".into(), json!(kind));
    }
    if !obj.contains_key("kind") {
        return Err(invalid_arg("need --generator or a --config naming the generator"));
    }
    if let Some(d) = a.d {
        obj.insert("d".into(), json!(d));
    }
    let cfg: GeneratorConfig = serde_json::from_value(value)?;
    Ok(cfg)
}

fn simulate_cmd(a: &SimulateArgs) -> Result<String> {
    let cfg = generator_config(a)?;
    let spec = cfg.build()?;
    let sampler: Sampler = a.sampler.parse()?;
    let m = simulate(&spec, &a.theta, sampler, a.n, a.seed)?;
    io::write_measure(create(&a.out)?, &m)?;
    write_manifest(
        &manifest_path(&a.out),
        json!({"command": "simulate", "generator": cfg, "theta": a.theta, "n": a.n,
               "sampler": sampler, "seed": a.seed}),
    )?;
    Ok(format!("wrote {} {} samples in dimension {} to {}", m.n(), spec.name(), m.d(), a.out.display()))
}

fn set(obj: &mut Map<String, Value>, key: &str, v: Option<Value>) {
    if let Some(v) = v {
        obj.insert(key.into(), v);
    }
}

/// Config file first, then flags on top.
pub(crate) fn discrepancy_spec(a: &DiscrepancyArgs) -> Result<DiscrepancySpec> {
    let mut value = match &a.config {
        Some(p) => read_json(p)?,
        None => json!({}),
    };
    let obj = value.as_object_mut().ok_or_else(|| invalid_arg("discrepancy config must be a JSON object"))?;
    if let Some(k) = &a.kind {
        obj.insert("kind".into(), json!(k.to_ascii_lowercase()));
    }
    if !obj.contains_key("kind") {
        obj.insert("kind".into(), json!("mmd"));
    }
    let kind = obj["kind"].as_str().unwrap_or_default().to_string();
    match kind.as_str() {
        "mmd" => {
            set(obj, "kernel", a.kernel.as_ref().map(|k| json!(k)));
            set(obj, "lengthscale", a.lengthscale.map(|l| json!(l)));
            set(obj, "amplitude", a.amplitude.map(|l| json!(l)));
            let est = a.estimator.as_deref().map(|e| match e {
                "v" => "v_statistic",
                "u" => "u_statistic",
                other => other,
            });
            set(obj, "estimator", est.map(|e| json!(e)));
        }
        "wasserstein" | "sinkhorn" => {
            let mut cost = obj.get("cost").cloned().unwrap_or_else(|| json!({}));
            if let Some(c) = cost.as_object_mut() {
                set(c, "metric", a.cost.as_ref().map(|m| json!(m)));
                set(c, "p", a.p.map(|p| json!(p)));
            }
            obj.insert("cost".into(), cost);
            set(obj, "lambda", a.lambda.map(|l| json!(l)));
        }
        "sliced" => {
            set(obj, "slices", a.slices.map(|s| json!(s)));
            set(obj, "p", a.p.map(|p| json!(p)));
            set(obj, "direction_seed", a.seed.map(|s| json!(s)));
        }
        other => return Err(invalid_arg(format!("unknown discrepancy kind `{other}`"))),
    }
    Ok(serde_json::from_value(value)?)
}

fn discrepancy(a: &DiscrepancyArgs) -> Result<String> {
    let spec = discrepancy_spec(a)?;
    let x = io::read_measure(File::open(&a.x).map_err(|e| invalid_arg(format!("{}: {e}", a.x.display())))?)?;
    let y = io::read_measure(File::open(&a.y).map_err(|e| invalid_arg(format!("{}: {e}", a.y.display())))?)?;
    let value = spec.evaluate(&x, &y)?;
    if let DiscrepancySpec::Mmd {
        estimator: MmdEstimator::Plugin,
        ..
    } = spec
    {
        if x == y {
            eprintln!(
                "note: the plug-in estimator drops the diagonal terms, so comparing a sample with itself \
                 gives -2 k(x,x) / n rather than 0"
            );
        }
    }
    if let Some(out) = &a.out {
        write_manifest(
            out,
            json!({"command": "discrepancy", "spec": spec, "x": a.x, "y": a.y, "value": value}),
        )?;
    }
    Ok(format!("{} {}", spec.label(), io::format_f64(value)))
}

fn sweep(a: &SweepArgs) -> Result<String> {
    let mut cfg: SweepConfig = serde_json::from_value(read_json(&a.config)?)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let art = experiments::run_sweep(&cfg, &a.out, a.jobs)?;
    for f in &art.fits {
        log::info!("slope {} {} d={}: {:.3}", f.discrepancy, f.sampler, f.d, f.fit.slope);
    }
    let slopes: Vec<String> = art
        .fits
        .iter()
        .map(|f| format!("{}/{}/d{}={:.3}", f.discrepancy, f.sampler, f.d, f.fit.slope))
        .collect();
    Ok(format!(
        "sweep {}: {} records, {} missing, slopes [{}] -> {}",
        if cfg.name.is_empty() { "-" } else { cfg.name.as_str() },
        art.output.records.len(),
        art.output.missing.len(),
        slopes.join(", "),
        a.out.display()
    ))
}

fn mde(a: &RunArgs) -> Result<String> {
    let mut exp = MdeExperiment::from_json(&fs::read_to_string(&a.config)?)?;
    if let Some(s) = a.seed {
        exp.mde.seed = s;
    }
    let base = a.config.parent().unwrap_or(Path::new("."));
    let t0 = std::time::Instant::now();
    let (data, results) = exp.run(base)?;
    fs::create_dir_all(&a.out)?;
    let mut runs = Vec::new();
    for (r, res) in results.iter().enumerate() {
        res.write_csv(create(&a.out.join(format!("trajectory_run{r}.csv")))?)?;
        res.write_timings_csv(create(&a.out.join(format!("timings_run{r}.csv")))?)?;
        runs.push(res.metadata_json(&exp.run_config(r)));
    }
    let errors: Option<Vec<f64>> = (exp.theta_star.len() == results[0].theta_hat.len()).then(|| {
        results
            .iter()
            .map(|res| res.theta_hat.iter().zip(&exp.theta_star).map(|(t, s)| (t - s) * (t - s)).sum::<f64>().sqrt())
            .collect()
    });
    write_manifest(
        &a.out.join("manifest.json"),
        json!({"command": "mde", "experiment": exp, "data_rows": data.n(), "runs": runs,
               "errors": errors, "timings": {"total_seconds": t0.elapsed().as_secs_f64()}}),
    )?;
    let fmt = |v: &[f64]| v.iter().map(|t| format!("{t:.4}")).collect::<Vec<_>>().join(",");
    let mut line = format!("mde {} run(s): theta_hat[0] = ({})", results.len(), fmt(&results[0].theta_hat));
    if let Some(e) = errors {
        line.push_str(&format!(", l2 errors [{}]", fmt(&e)));
    }
    line.push_str(&format!(" -> {}", a.out.display()));
    Ok(line)
}

fn abc(a: &AbcArgs) -> Result<String> {
    let mut exp = AbcExperiment::from_json(&fs::read_to_string(&a.run.config)?)?;
    if let Some(s) = a.run.seed {
        exp.seed = s;
    }
    if !a.epsilon.is_empty() {
        exp.epsilons = a.epsilon.clone();
    }
    let base = a.run.config.parent().unwrap_or(Path::new("."));
    let t0 = std::time::Instant::now();
    let (_, results) = exp.run(base)?;
    fs::create_dir_all(&a.run.out)?;
    let mut rates = Vec::new();
    for (i, res) in results.iter().enumerate() {
        res.write_csv(create(&a.run.out.join(format!("abc_eps{i}.csv")))?, &res.accepted)?;
        rates.push(json!({"epsilon": res.epsilon, "accepted": res.accepted.len(), "rate": res.acceptance_rate}));
    }
    write_manifest(
        &a.run.out.join("manifest.json"),
        json!({"command": "abc", "experiment": exp, "results": rates,
               "timings": {"total_seconds": t0.elapsed().as_secs_f64()}}),
    )?;
    let parts: Vec<String> =
        results.iter().map(|r| format!("eps={}: {}/{}", r.epsilon, r.accepted.len(), r.attempted)).collect();
    Ok(format!("abc accepted {} -> {}", parts.join(", "), a.run.out.display()))
}

fn plot(a: &PlotArgs) -> Result<String> {
    let records = experiments::read_records_csv(File::open(&a.input)?)?;
    let cells = experiments::aggregate(&records);
    fs::create_dir_all(&a.out)?;
    let mut names = Vec::new();
    for (panel, series) in experiments::panels(&cells) {
        let name = format!("{panel}.svg");
        fs::write(a.out.join(&name), experiments::render_svg(&panel, &series)?)?;
        names.push(name);
    }
    Ok(format!("wrote {} plot(s) to {}: {}", names.len(), a.out.display(), names.join(", ")))
}
