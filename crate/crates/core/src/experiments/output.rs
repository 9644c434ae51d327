use std::fmt::Write as _;
use std::io::{Read, Write};

use super::aggregate::{CellSummary, SeriesFit};
use super::sweep::{MissingCell, SweepRecord};
use crate::error::{Error, Result};
use crate::io::format_f64;

const RECORD_HEADER: [&str; 9] = [
    "generator",
    "discrepancy",
    "sampler",
    "d",
    "n",
    "repetition",
    "value",
    "signed",
    "reference_hash",
];

/// Sweep records, without wall-clock times (see [`emit_timings_csv`]).
pub fn emit_records_csv<W: Write>(w: W, records: &[SweepRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(RECORD_HEADER)?;
    for r in records {
        wtr.write_record([
            r.generator.clone(),
            r.discrepancy.clone(),
            r.sampler.clone(),
            r.d.to_string(),
            r.n.to_string(),
            r.repetition.to_string(),
            format_f64(r.value),
            format_f64(r.signed),
            r.reference_hash.map(|h| format!("{h:016x}")).unwrap_or_default(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(r: R) -> Result<Vec<SweepRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if header != RECORD_HEADER {
        return Err(Error::Parse(format!("unexpected record header {header:?}")));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> { rec[k].parse().map_err(|e| Error::Parse(format!("{}: {e}", RECORD_HEADER[k]))) };
        let int = |k: usize| -> Result<usize> { rec[k].parse().map_err(|e| Error::Parse(format!("{}: {e}", RECORD_HEADER[k]))) };
        let hash = if rec[8].is_empty() {
            None
        } else {
            Some(u64::from_str_radix(&rec[8], 16).map_err(|e| Error::Parse(format!("reference_hash: {e}")))?)
        };
        out.push(SweepRecord {
            generator: rec[0].to_string(),
            discrepancy: rec[1].to_string(),
            sampler: rec[2].to_string(),
            d: int(3)?,
            n: int(4)?,
            repetition: int(5)?,
            value: num(6)?,
            signed: num(7)?,
            reference_hash: hash,
            wall_clock: 0.0,
        });
    }
    Ok(out)
}

pub fn emit_timings_csv<W: Write>(w: W, records: &[SweepRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["discrepancy", "sampler", "d", "n", "repetition", "wall_clock"])?;
    for r in records {
        wtr.write_record([
            r.discrepancy.clone(),
            r.sampler.clone(),
            r.d.to_string(),
            r.n.to_string(),
            r.repetition.to_string(),
            format!("{:.6}", r.wall_clock),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn emit_cells_csv<W: Write>(w: W, cells: &[CellSummary]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["generator", "discrepancy", "sampler", "d", "n", "count", "mean", "min", "max"])?;
    for c in cells {
        wtr.write_record([
            c.generator.clone(),
            c.discrepancy.clone(),
            c.sampler.clone(),
            c.d.to_string(),
            c.n.to_string(),
            c.count.to_string(),
            format_f64(c.mean),
            format_f64(c.min),
            format_f64(c.max),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn emit_fits_csv<W: Write>(w: W, fits: &[SeriesFit]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["discrepancy", "sampler", "d", "slope", "intercept", "residual_rms", "n_min", "n_max", "points"])?;
    for f in fits {
        wtr.write_record([
            f.discrepancy.clone(),
            f.sampler.clone(),
            f.d.to_string(),
            format_f64(f.fit.slope),
            format_f64(f.fit.intercept),
            format_f64(f.fit.residual_rms),
            f.fit.n_min.to_string(),
            f.fit.n_max.to_string(),
            f.fit.points.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn emit_missing_csv<W: Write>(w: W, missing: &[MissingCell]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["discrepancy", "sampler", "d", "n", "repetition", "reason"])?;
    for m in missing {
        wtr.write_record([
            m.discrepancy.clone(),
            m.sampler.clone(),
            m.d.to_string(),
            m.n.to_string(),
            m.repetition.to_string(),
            m.reason.clone(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// One line of a log-log plot: `(n, mean, min, max)` per grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(usize, f64, f64, f64)>,
}

/// Series grouped into panels by (discrepancy, d), one series per sampler.
pub fn panels(cells: &[CellSummary]) -> Vec<(String, Vec<Series>)> {
    let mut out: Vec<(String, Vec<Series>)> = Vec::new();
    for c in cells {
        let panel = format!("{}_d{}", c.discrepancy, c.d);
        let idx = match out.iter().position(|(p, _)| *p == panel) {
            Some(i) => i,
            None => {
                out.push((panel, Vec::new()));
                out.len() - 1
            }
        };
        let label = format!("{} {}", c.sampler, c.discrepancy);
        let series = &mut out[idx].1;
        let s = match series.iter().position(|s| s.label == label) {
            Some(i) => i,
            None => {
                series.push(Series {
                    label,
                    points: Vec::new(),
                });
                series.len() - 1
            }
        };
        series[s].points.push((c.n, c.mean, c.min, c.max));
    }
    out
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Standalone log-log SVG: mean polylines with min/max whiskers and a
/// legend. Output bytes depend only on the input.
pub fn render_svg(title: &str, series: &[Series]) -> Result<String> {
    let pts: Vec<&(usize, f64, f64, f64)> = series.iter().flat_map(|s| &s.points).collect();
    if pts.is_empty() {
        return Err(Error::InsufficientData("nothing to plot".into()));
    }
    let positive = |v: f64| v > 0.0 && v.is_finite();
    let lx = |n: usize| (n.max(1) as f64).log2();
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &&(n, mean, lo, hi) in &pts {
        x0 = x0.min(lx(n));
        x1 = x1.max(lx(n));
        for v in [mean, lo, hi] {
            if positive(v) {
                y0 = y0.min(v.log10());
                y1 = y1.max(v.log10());
            }
        }
    }
    if !y0.is_finite() {
        (y0, y1) = (-1.0, 0.0);
    }
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let (w, h, ml, mr, mt, mb) = (640.0, 440.0, 70.0, 20.0, 40.0, 50.0);
    let px = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let py = |y: f64| mt + (y1 - y) / (y1 - y0) * (h - mt - mb);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, esc(title));
    let _ = writeln!(
        svg,
        r#"<rect x="{ml}" y="{mt}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        w - ml - mr,
        h - mt - mb
    );
    for k in (x0.ceil() as i64)..=(x1.floor() as i64) {
        let x = px(k as f64);
        let _ = writeln!(svg, r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#ddd"/>"##, mt, h - mb);
        let _ = writeln!(svg, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">2^{k}</text>"#, h - mb + 16.0);
    }
    for k in (y0 as i64)..=(y1 as i64) {
        let y = py(k as f64);
        let _ = writeln!(svg, r##"<line x1="{ml}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/>"##, w - mr);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">1e{k}</text>"#, ml - 6.0, y + 4.0);
    }
    let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">n</text>"#, w / 2.0, h - 10.0);
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">error</text>"#,
        h / 2.0,
        h / 2.0
    );

    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut sorted = s.points.clone();
        sorted.sort_by_key(|p| p.0);
        let coords: Vec<String> = sorted
            .iter()
            .filter(|p| positive(p.1))
            .map(|p| format!("{:.2},{:.2}", px(lx(p.0)), py(p.1.log10())))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            coords.join(" ")
        );
        for p in sorted.iter().filter(|p| positive(p.2) && positive(p.3)) {
            let x = px(lx(p.0));
            let _ = writeln!(
                svg,
                r#"<line class="whisker" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{color}"/>"#,
                py(p.2.log10()),
                py(p.3.log10())
            );
        }
        let ly = mt + 16.0 + 18.0 * i as f64;
        let lx0 = w - mr - 170.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx0:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
            lx0 + 20.0
        );
        let _ = writeln!(svg, r#"<text class="legend" x="{:.1}" y="{:.1}">{}</text>"#, lx0 + 26.0, ly + 4.0, esc(&s.label));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
