//! Sample-complexity sweeps, slope fits, plots and the MDE/ABC studies.

mod aggregate;
mod output;
mod studies;
mod sweep;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

pub use aggregate::{aggregate, fit_series, fit_slope, fit_window, CellSummary, SeriesFit, SlopeFit};
pub use output::{
    emit_cells_csv, emit_fits_csv, emit_missing_csv, emit_records_csv, emit_timings_csv, panels, read_records_csv,
    render_svg, Series,
};
pub use studies::{AbcExperiment, DataSource, MdeExperiment};
pub use sweep::{
    complexity_sweep, measure_hash, ErrorMode, FitConfig, MissingCell, NGrid, SweepConfig, SweepOutput, SweepRecord,
};

use crate::error::Result;

/// Everything [`run_sweep`] produced.
#[derive(Clone, Debug)]
pub struct SweepArtifacts {
    pub output: SweepOutput,
    pub cells: Vec<CellSummary>,
    pub fits: Vec<SeriesFit>,
    /// Series that could not be fitted, with the reason.
    pub unfitted: Vec<String>,
    pub files: Vec<PathBuf>,
}

/// Runs a sweep and writes `records.csv`, `cells.csv`, `fits.csv`,
/// `missing.csv`, `timings.csv`, one SVG per (discrepancy, d) panel and
/// `manifest.json` into `out_dir`. Every file except the timings and the
/// manifest's `timings` entry is byte-identical across reruns.
pub fn run_sweep(cfg: &SweepConfig, out_dir: &Path, jobs: Option<usize>) -> Result<SweepArtifacts> {
    std::fs::create_dir_all(out_dir)?;
    let t0 = web_time::Instant::now();
    let output = crate::with_jobs(jobs, || complexity_sweep(cfg))??;
    let elapsed = t0.elapsed().as_secs_f64();
    let cells = aggregate(&output.records);
    let mut fits = Vec::new();
    let mut unfitted = Vec::new();
    for f in fit_series(&cells, &cfg.fit) {
        match f {
            Ok(f) => fits.push(f),
            Err(e) => {
                log::warn!("{e}");
                unfitted.push(e);
            }
        }
    }

    let mut files = Vec::new();
    let mut create = |name: &str| -> Result<BufWriter<File>> {
        let p = out_dir.join(name);
        files.push(p.clone());
        Ok(BufWriter::new(File::create(p)?))
    };
    emit_records_csv(create("records.csv")?, &output.records)?;
    emit_cells_csv(create("cells.csv")?, &cells)?;
    emit_fits_csv(create("fits.csv")?, &fits)?;
    emit_missing_csv(create("missing.csv")?, &output.missing)?;
    emit_timings_csv(create("timings.csv")?, &output.records)?;
    let mut panel_files = Vec::new();
    for (panel, series) in panels(&cells) {
        let name = format!("{panel}.svg");
        let title = if cfg.name.is_empty() { panel.clone() } else { format!("{} {panel}", cfg.name) };
        let svg = render_svg(&title, &series)?;
        std::fs::write(out_dir.join(&name), svg)?;
        panel_files.push(name);
    }
    let manifest = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "grid": cfg.n_grid.resolve()?,
        "records": output.records.len(),
        "missing": output.missing.len(),
        "fits": fits,
        "unfitted": unfitted,
        "plots": panel_files,
        "timings": { "total_seconds": elapsed, "jobs": jobs },
    });
    let mut w = create("manifest.json")?;
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    std::io::Write::write_all(&mut w, b"\n")?;
    drop(w);
    files.extend(panel_files.iter().map(|n| out_dir.join(n)));
    Ok(SweepArtifacts {
        output,
        cells,
        fits,
        unfitted,
        files,
    })
}
