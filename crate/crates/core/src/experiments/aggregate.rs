use serde::{Deserialize, Serialize};

use super::sweep::{FitConfig, SweepRecord};
use crate::error::{Error, Result};
use crate::reduce::sum;

/// Mean, min and max over repetitions of one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub generator: String,
    pub discrepancy: String,
    pub sampler: String,
    pub d: usize,
    pub n: usize,
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Least-squares line through `(log2 n, log2 error)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub points: usize,
}

/// Slope of one (discrepancy, sampler, d) series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesFit {
    pub discrepancy: String,
    pub sampler: String,
    pub d: usize,
    pub fit: SlopeFit,
}

/// Groups records by (discrepancy, d, sampler, n), keeping first-seen order.
pub fn aggregate(records: &[SweepRecord]) -> Vec<CellSummary> {
    let mut keys: Vec<(String, String, usize, usize)> = Vec::new();
    let mut groups: Vec<Vec<&SweepRecord>> = Vec::new();
    let mut index = std::collections::HashMap::new();
    for r in records {
        let key = (r.discrepancy.clone(), r.sampler.clone(), r.d, r.n);
        let slot = *index.entry(key.clone()).or_insert_with(|| {
            keys.push(key);
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[slot].push(r);
    }
    groups
        .into_iter()
        .map(|g| {
            let first = g[0];
            let values: Vec<f64> = g.iter().map(|r| r.value).collect();
            CellSummary {
                generator: first.generator.clone(),
                discrepancy: first.discrepancy.clone(),
                sampler: first.sampler.clone(),
                d: first.d,
                n: first.n,
                count: values.len(),
                mean: sum(values.iter().copied()) / values.len() as f64,
                min: values.iter().copied().fold(f64::INFINITY, f64::min),
                max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect()
}

/// OLS of `log2(error)` on `log2(n)`. Points with non-positive error are
/// dropped; fewer than four remaining is an error.
pub fn fit_slope(points: &[(usize, f64)]) -> Result<SlopeFit> {
    fit_slope_min(points, 4)
}

fn fit_slope_min(points: &[(usize, f64)], min_points: usize) -> Result<SlopeFit> {
    let kept: Vec<(f64, f64, usize)> = points
        .iter()
        .filter(|(n, e)| *n > 0 && *e > 0.0 && e.is_finite())
        .map(|&(n, e)| ((n as f64).log2(), e.log2(), n))
        .collect();
    let distinct = {
        let mut ns: Vec<usize> = kept.iter().map(|p| p.2).collect();
        ns.sort_unstable();
        ns.dedup();
        ns.len()
    };
    if distinct < min_points.max(2) {
        return Err(Error::InsufficientData(format!(
            "slope fit needs {} distinct n with positive error, got {distinct}",
            min_points.max(2)
        )));
    }
    let k = kept.len() as f64;
    let mx = sum(kept.iter().map(|p| p.0)) / k;
    let my = sum(kept.iter().map(|p| p.1)) / k;
    let sxy = sum(kept.iter().map(|p| (p.0 - mx) * (p.1 - my)));
    let sxx = sum(kept.iter().map(|p| (p.0 - mx) * (p.0 - mx)));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss = sum(kept.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)));
    Ok(SlopeFit {
        slope,
        intercept,
        residual_rms: (rss / k).sqrt(),
        n_min: kept.iter().map(|p| p.2).min().unwrap_or(0),
        n_max: kept.iter().map(|p| p.2).max().unwrap_or(0),
        points: kept.len(),
    })
}

/// Grid points used by the fit: the upper half of the grid (but at least
/// `min_points`) when `upper_half` is set, all of them otherwise.
pub fn fit_window(points: &[(usize, f64)], fit: &FitConfig) -> Vec<(usize, f64)> {
    let mut sorted = points.to_vec();
    sorted.sort_by_key(|p| p.0);
    if !fit.upper_half {
        return sorted;
    }
    let keep = sorted.len().div_ceil(2).max(fit.min_points).min(sorted.len());
    sorted.split_off(sorted.len() - keep)
}

/// Fits every (discrepancy, sampler, d) series of mean errors.
pub fn fit_series(cells: &[CellSummary], fit: &FitConfig) -> Vec<std::result::Result<SeriesFit, String>> {
    let mut keys: Vec<(String, String, usize)> = Vec::new();
    for c in cells {
        let k = (c.discrepancy.clone(), c.sampler.clone(), c.d);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(disc, sampler, d)| {
            let pts: Vec<(usize, f64)> = cells
                .iter()
                .filter(|c| c.discrepancy == disc && c.sampler == sampler && c.d == d)
                .map(|c| (c.n, c.mean))
                .collect();
            fit_slope_min(&fit_window(&pts, fit), fit.min_points)
                .map(|f| SeriesFit {
                    discrepancy: disc.clone(),
                    sampler: sampler.clone(),
                    d,
                    fit: f,
                })
                .map_err(|e| format!("{disc} {sampler} d={d}: {e}"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<usize> {
        (6..=13).map(|k| 1usize << k).collect()
    }

    #[test]
    fn exact_power_laws() {
        for alpha in [1.0, 0.5, 0.73] {
            let pts: Vec<(usize, f64)> = grid().iter().map(|&n| (n, 3.0 * (n as f64).powf(-alpha))).collect();
            let f = fit_slope(&pts).unwrap();
            assert!((f.slope + alpha).abs() < 1e-12, "{alpha}: {}", f.slope);
            assert!(f.residual_rms < 1e-12);
        }
    }

    #[test]
    fn log_factor_flattens() {
        let pts: Vec<(usize, f64)> = grid().iter().map(|&n| (n, (n as f64).ln() / n as f64)).collect();
        let f = fit_slope(&pts).unwrap();
        assert!(f.slope > -1.0 && f.slope < -0.75, "{}", f.slope);
        // closed form: slope = -1 + cov(x, log2 log n) / var(x)
        let xs: Vec<f64> = (6..=13).map(|k| k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x * 2f64.ln()).log2()).collect();
        let mx = xs.iter().sum::<f64>() / 8.0;
        let my = ys.iter().sum::<f64>() / 8.0;
        let c: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let v: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        assert!((f.slope - (-1.0 + c / v)).abs() < 1e-12);
    }

    #[test]
    fn drops_nonpositive_and_needs_four() {
        let pts = [(64, 1.0), (128, 0.0), (256, 0.25), (512, -1.0), (1024, 0.0625)];
        assert!(matches!(fit_slope(&pts), Err(Error::InsufficientData(_))));
        let pts = [(64, 1.0), (128, 0.0), (256, 0.25), (512, 0.125), (1024, 0.0625)];
        let f = fit_slope(&pts).unwrap();
        assert_eq!(f.points, 4);
    }

    #[test]
    fn window_selection() {
        let pts: Vec<(usize, f64)> = grid().iter().map(|&n| (n, 1.0)).collect();
        let w = fit_window(&pts, &FitConfig::default());
        assert_eq!(w.first().unwrap().0, 1024);
        assert_eq!(w.len(), 4);
        let short: Vec<(usize, f64)> = pts[..6].to_vec();
        assert_eq!(fit_window(&short, &FitConfig::default()).len(), 4);
    }

    #[test]
    fn aggregation_recomputes() {
        let rec = |n: usize, r: usize, v: f64| SweepRecord {
            generator: "g".into(),
            discrepancy: "mmd".into(),
            sampler: "mc".into(),
            d: 1,
            n,
            repetition: r,
            value: v,
            signed: v,
            reference_hash: None,
            wall_clock: 0.0,
        };
        let records = vec![rec(8, 0, 0.1), rec(8, 1, 0.3), rec(16, 0, 0.05), rec(16, 1, 0.07)];
        let cells = aggregate(&records);
        assert_eq!(cells.len(), 2);
        assert!((cells[0].mean - 0.2).abs() < 1e-15);
        assert_eq!((cells[0].min, cells[0].max), (0.1, 0.3));
        assert!((cells[1].mean - 0.06).abs() < 1e-15);
    }
}
