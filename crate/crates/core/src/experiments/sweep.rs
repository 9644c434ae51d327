use web_time::Instant;

use serde::{Deserialize, Serialize};

use crate::discrepancy::DiscrepancySpec;
use crate::error::{invalid_arg, Result};
use crate::generators::{EmpiricalMeasure, GeneratorConfig, GeneratorSpec};
use crate::inference::{simulate, Sampler};
use crate::reduce::ordered_map;
use crate::seed::{self, stream};

/// How the error of a cell is measured.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorMode {
    /// `|D(P^n, Q^n)|` between two independent simulated sets of equal size.
    /// `identical_sides` reuses one seed for both, as a sanity check.
    SelfVsSelf {
        #[serde(default)]
        identical_sides: bool,
    },
    /// `|D(P^n, Q^m)|` against a fixed pseudo-random reference sample of
    /// size `m_ref`, shared by every sampler with the same repetition.
    VsReference { m_ref: usize },
}

impl Default for ErrorMode {
    fn default() -> Self {
        Self::SelfVsSelf { identical_sides: false }
    }
}

impl ErrorMode {
    pub fn label(&self) -> &'static str {
        match self {
            Self::SelfVsSelf { .. } => "self_vs_self",
            Self::VsReference { .. } => "vs_reference",
        }
    }
}

/// Sample sizes, as a list or a range of powers of two.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NGrid {
    List(Vec<usize>),
    Log2 { log2_min: u32, log2_max: u32 },
}

impl NGrid {
    pub fn resolve(&self) -> Result<Vec<usize>> {
        let grid = match self {
            Self::List(v) => v.clone(),
            Self::Log2 { log2_min, log2_max } => {
                if log2_max < log2_min || *log2_max > 40 {
                    return Err(invalid_arg(format!("bad log2 range {log2_min}..={log2_max}")));
                }
                (*log2_min..=*log2_max).map(|k| 1usize << k).collect()
            }
        };
        if grid.is_empty() || grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid_arg("n grid must be non-empty, positive and strictly increasing"));
        }
        Ok(grid)
    }
}

fn default_reps() -> usize {
    25
}

fn default_true() -> bool {
    true
}

fn default_min_points() -> usize {
    4
}

/// Which grid points enter the slope fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    #[serde(default = "default_true")]
    pub upper_half: bool,
    #[serde(default = "default_min_points")]
    pub min_points: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            upper_half: true,
            min_points: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(default)]
    pub name: String,
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub theta: Vec<f64>,
    pub discrepancies: Vec<DiscrepancySpec>,
    pub samplers: Vec<Sampler>,
    /// Output dimensions to sweep; the generator's own when empty.
    #[serde(default)]
    pub dims: Vec<usize>,
    pub n_grid: NGrid,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    #[serde(default)]
    pub mode: ErrorMode,
    pub seed: u64,
    #[serde(default)]
    pub fit: FitConfig,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(invalid_arg("repetitions must be at least 1"));
        }
        if self.discrepancies.is_empty() || self.samplers.is_empty() {
            return Err(invalid_arg("need at least one discrepancy and one sampler"));
        }
        self.n_grid.resolve()?;
        for spec in self.generators()? {
            spec.check_params(&self.theta)?;
        }
        if let ErrorMode::VsReference { m_ref } = self.mode {
            if m_ref == 0 {
                return Err(invalid_arg("reference size must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> Result<Vec<usize>> {
        if self.dims.is_empty() {
            Ok(vec![self.generator.build()?.output_dim()])
        } else {
            Ok(self.dims.clone())
        }
    }

    fn generators(&self) -> Result<Vec<GeneratorSpec>> {
        self.dims()?
            .into_iter()
            .map(|d| self.generator.with_dim(d)?.build())
            .collect()
    }
}

/// One evaluated cell and repetition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub generator: String,
    pub discrepancy: String,
    pub sampler: String,
    pub d: usize,
    pub n: usize,
    pub repetition: usize,
    /// The error `|D|`.
    pub value: f64,
    /// `D` before taking the absolute value.
    pub signed: f64,
    /// Fingerprint of the data side in reference mode.
    pub reference_hash: Option<u64>,
    pub wall_clock: f64,
}

/// A cell that could not be evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissingCell {
    pub discrepancy: String,
    pub sampler: String,
    pub d: usize,
    pub n: usize,
    pub repetition: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepOutput {
    pub records: Vec<SweepRecord>,
    pub missing: Vec<MissingCell>,
}

/// FNV-1a over the bit patterns of a measure.
pub fn measure_hash(m: &EmpiricalMeasure) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in m.as_slice() {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

struct Job {
    di: usize,
    si: usize,
    ni: usize,
    r: usize,
}

/// Runs every (discrepancy, d, sampler, n, repetition) cell.
///
/// Seeds depend on `(seed, d, n, repetition)` only, so switching samplers
/// leaves the reference side and the slice directions untouched. Cells that
/// fail are listed in `missing` and the sweep carries on. Records come back
/// in config order, then repetition.
pub fn complexity_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let dims = cfg.dims()?;
    let grid = cfg.n_grid.resolve()?;
    let specs = cfg.generators()?;
    let reps = cfg.repetitions;
    let gen_name = cfg.generator.name().to_string();

    let references: Vec<Option<EmpiricalMeasure>> = match cfg.mode {
        ErrorMode::VsReference { m_ref } => {
            let refs = ordered_map(dims.len() * reps, |k| {
                let (di, r) = (k / reps, k % reps);
                let s = seed::derive(cfg.seed, &[stream::REFERENCE, dims[di] as u64, r as u64]);
                simulate(&specs[di], &cfg.theta, Sampler::Mc, m_ref, s)
            });
            refs.into_iter().map(|r| r.map(Some)).collect::<Result<_>>()?
        }
        ErrorMode::SelfVsSelf { .. } => vec![None; dims.len() * reps],
    };
    let ref_hashes: Vec<Option<u64>> = references.iter().map(|r| r.as_ref().map(measure_hash)).collect();

    let mut jobs = Vec::new();
    for di in 0..dims.len() {
        for si in 0..cfg.samplers.len() {
            for ni in 0..grid.len() {
                for r in 0..reps {
                    jobs.push(Job { di, si, ni, r });
                }
            }
        }
    }

    type Cell = (usize, usize, usize, usize, usize, std::result::Result<SweepRecord, MissingCell>);
    let results: Vec<Vec<Cell>> = ordered_map(jobs.len(), |k| {
        let Job { di, si, ni, r } = jobs[k];
        let (d, n, sampler) = (dims[di], grid[ni], cfg.samplers[si]);
        let key = [d as u64, n as u64, r as u64];
        let missing = |qi: usize, reason: String| MissingCell {
            discrepancy: cfg.discrepancies[qi].label(),
            sampler: sampler.label(),
            d,
            n,
            repetition: r,
            reason,
        };
        let seed_x = seed::derive(cfg.seed, &[stream::POINTS, key[0], key[1], key[2]]);
        let x = simulate(&specs[di], &cfg.theta, sampler, n, seed_x);
        let y = match &cfg.mode {
            ErrorMode::SelfVsSelf { identical_sides } => {
                let seed_y = if *identical_sides {
                    seed_x
                } else {
                    seed::derive(cfg.seed, &[stream::SECOND_SIDE, key[0], key[1], key[2]])
                };
                simulate(&specs[di], &cfg.theta, sampler, n, seed_y).map(std::borrow::Cow::Owned)
            }
            ErrorMode::VsReference { .. } => Ok(std::borrow::Cow::Borrowed(
                references[di * reps + r].as_ref().expect("reference drawn"),
            )),
        };
        let dir_seed = seed::derive(cfg.seed, &[stream::DIRECTIONS, key[0], key[1], key[2]]);
        (0..cfg.discrepancies.len())
            .map(|qi| {
                let disc = &cfg.discrepancies[qi];
                let out = match (&x, &y) {
                    (Err(e), _) | (_, Err(e)) => Err(missing(qi, format!("simulation failed: {e}"))),
                    (Ok(x), Ok(y)) if !disc.fits_budget(x.n(), y.n(), d) => {
                        Err(missing(qi, "exact LP budget exceeded".into()))
                    }
                    (Ok(x), Ok(y)) => {
                        let t0 = Instant::now();
                        match disc.evaluate_seeded(x, y, Some(dir_seed)) {
                            Ok(v) if v.is_finite() => Ok(SweepRecord {
                                generator: gen_name.clone(),
                                discrepancy: disc.label(),
                                sampler: sampler.label(),
                                d,
                                n,
                                repetition: r,
                                value: v.abs(),
                                signed: v,
                                reference_hash: ref_hashes[di * reps + r],
                                wall_clock: t0.elapsed().as_secs_f64(),
                            }),
                            Ok(v) => Err(missing(qi, format!("non-finite value {v}"))),
                            Err(e) => Err(missing(qi, e.to_string())),
                        }
                    }
                };
                (qi, di, si, ni, r, out)
            })
            .collect()
    });

    let mut cells: Vec<Cell> = results.into_iter().flatten().collect();
    cells.sort_by_key(|c| (c.0, c.1, c.2, c.3, c.4));
    let mut out = SweepOutput::default();
    for (.., res) in cells {
        match res {
            Ok(rec) => out.records.push(rec),
            Err(m) => {
                log::warn!(
                    "cell {} {} d={} n={} r={} skipped: {}",
                    m.discrepancy,
                    m.sampler,
                    m.d,
                    m.n,
                    m.repetition,
                    m.reason
                );
                out.missing.push(m);
            }
        }
    }
    Ok(out)
}
