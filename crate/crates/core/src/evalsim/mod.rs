//! Workload construction, zone-map pruning simulation and fidelity metrics.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dp::DpError;
use crate::sketch::{RowGroupMeta, SketchError};
use crate::synth::SynthError;

pub mod experiment;

pub use experiment::{multi_seed_run, run_seed, Method, Original};

/// Grid used when none is given: 20 points log-spaced on [0.001, 0.95].
pub const DEFAULT_GRID: (f64, f64, usize) = (0.001, 0.95, 20);
pub const DEFAULT_SEEDS: [u64; 5] = [42, 7, 2025, 777, 867];
pub const LOW_BAND_BELOW: f64 = 0.05;
pub const HIGH_BAND_ABOVE: f64 = 0.30;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no data to build a workload from")]
    EmptyData,
    #[error("selectivity {0} outside (0, 1]")]
    InvalidSelectivity(f64),
    #[error("values are not sorted")]
    NotSorted,
    #[error("query {query} scans nothing in the original")]
    DivisionByZero { query: usize },
    #[error("profile lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("at least one seed is required")]
    NoSeeds,
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub cutoff: i64,
    pub target_selectivity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PruneProfile {
    pub rgs_scanned: usize,
    pub bytes_read: u64,
}

/// `n` points geometrically spaced from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| match i {
                    0 => lo,
                    _ if i == n - 1 => hi,
                    _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
                })
                .collect()
        }
    }
}

pub fn default_selectivities() -> Vec<f64> {
    log_grid(DEFAULT_GRID.0, DEFAULT_GRID.1, DEFAULT_GRID.2)
}

/// One `col ≤ cutoff` query per selectivity, with the cutoff at the
/// empirical quantile of `sorted_values`.
pub fn make_workload(sorted_values: &[i64], selectivities: &[f64]) -> Result<Vec<QuerySpec>, EvalError> {
    if sorted_values.is_empty() {
        return Err(EvalError::EmptyData);
    }
    if sorted_values.windows(2).any(|w| w[0] > w[1]) {
        return Err(EvalError::NotSorted);
    }
    let n = sorted_values.len();
    selectivities
        .iter()
        .map(|&s| {
            if !(s > 0.0 && s <= 1.0) {
                return Err(EvalError::InvalidSelectivity(s));
            }
            let rank = ((s * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
            Ok(QuerySpec {
                cutoff: sorted_values[rank - 1],
                target_selectivity: s,
            })
        })
        .collect()
}

/// A row group is scanned when its minimum is at most the cutoff.
pub fn prune_profile(layout: &[RowGroupMeta], q: &QuerySpec) -> PruneProfile {
    layout
        .iter()
        .filter(|rg| rg.min_val <= q.cutoff)
        .fold(PruneProfile::default(), |acc, rg| PruneProfile {
            rgs_scanned: acc.rgs_scanned + 1,
            bytes_read: acc.bytes_read + rg.compressed_size,
        })
}

pub fn prune_all(layout: &[RowGroupMeta], workload: &[QuerySpec]) -> Vec<PruneProfile> {
    workload.iter().map(|q| prune_profile(layout, q)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Rgs,
    Bytes,
}

impl PruneProfile {
    pub fn get(&self, field: Field) -> u64 {
        match field {
            Field::Rgs => self.rgs_scanned as u64,
            Field::Bytes => self.bytes_read,
        }
    }
}

/// Absolute percentage error of one pair.
pub fn ape(orig: u64, synth: u64) -> f64 {
    100.0 * (synth as f64 - orig as f64).abs() / orig as f64
}

fn check_pairs(orig: &[PruneProfile], synth: &[PruneProfile], field: Field) -> Result<(), EvalError> {
    if orig.len() != synth.len() {
        return Err(EvalError::LengthMismatch(orig.len(), synth.len()));
    }
    if orig.is_empty() {
        return Err(EvalError::EmptyData);
    }
    match orig.iter().position(|p| p.get(field) == 0) {
        Some(query) => Err(EvalError::DivisionByZero { query }),
        None => Ok(()),
    }
}

/// Mean absolute percentage error over queries.
pub fn mape(orig: &[PruneProfile], synth: &[PruneProfile], field: Field) -> Result<f64, EvalError> {
    check_pairs(orig, synth, field)?;
    let sum: f64 = orig
        .iter()
        .zip(synth)
        .map(|(o, s)| ape(o.get(field), s.get(field)))
        .sum();
    Ok(sum / orig.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Low,
    Mid,
    High,
}

impl Band {
    pub const ALL: [Band; 3] = [Band::Low, Band::Mid, Band::High];

    pub fn of(selectivity: f64) -> Band {
        if selectivity < LOW_BAND_BELOW {
            Band::Low
        } else if selectivity <= HIGH_BAND_ABOVE {
            Band::Mid
        } else {
            Band::High
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Band::Low => "low",
            Band::Mid => "mid",
            Band::High => "high",
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub selectivity: f64,
    pub cutoff: i64,
    pub orig_rgs: usize,
    pub synth_rgs: usize,
    pub orig_bytes: u64,
    pub synth_bytes: u64,
    pub ape_rg: f64,
    pub ape_bytes: f64,
}

/// Per-band values; a band with no queries is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Banded<T> {
    pub low: Option<T>,
    pub mid: Option<T>,
    pub high: Option<T>,
}

impl<T> Default for Banded<T> {
    fn default() -> Self {
        Self {
            low: None,
            mid: None,
            high: None,
        }
    }
}

impl<T: Copy> Banded<T> {
    pub fn get(&self, band: Band) -> Option<T> {
        match band {
            Band::Low => self.low,
            Band::Mid => self.mid,
            Band::High => self.high,
        }
    }

    fn set(&mut self, band: Band, v: Option<T>) {
        match band {
            Band::Low => self.low = v,
            Band::Mid => self.mid = v,
            Band::High => self.high = v,
        }
    }
}

/// Fidelity of one synthetic file against the original.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandedReport {
    pub records: Vec<QueryRecord>,
    pub mape_rg: f64,
    pub mape_bytes: f64,
    pub band_rg: Banded<f64>,
}

pub fn banded_report(
    orig: &[PruneProfile],
    synth: &[PruneProfile],
    workload: &[QuerySpec],
) -> Result<BandedReport, EvalError> {
    check_pairs(orig, synth, Field::Rgs)?;
    check_pairs(orig, synth, Field::Bytes)?;
    if workload.len() != orig.len() {
        return Err(EvalError::LengthMismatch(workload.len(), orig.len()));
    }
    let records: Vec<QueryRecord> = workload
        .iter()
        .zip(orig.iter().zip(synth))
        .map(|(q, (o, s))| QueryRecord {
            selectivity: q.target_selectivity,
            cutoff: q.cutoff,
            orig_rgs: o.rgs_scanned,
            synth_rgs: s.rgs_scanned,
            orig_bytes: o.bytes_read,
            synth_bytes: s.bytes_read,
            ape_rg: ape(o.rgs_scanned as u64, s.rgs_scanned as u64),
            ape_bytes: ape(o.bytes_read, s.bytes_read),
        })
        .collect();
    let mut band_rg = Banded::default();
    for band in Band::ALL {
        let apes: Vec<f64> = records
            .iter()
            .filter(|r| Band::of(r.selectivity) == band)
            .map(|r| r.ape_rg)
            .collect();
        band_rg.set(band, (!apes.is_empty()).then(|| mean(&apes)));
    }
    Ok(BandedReport {
        mape_rg: mape(orig, synth, Field::Rgs)?,
        mape_bytes: mape(orig, synth, Field::Bytes)?,
        band_rg,
        records,
    })
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Option<Stat> {
        if xs.is_empty() {
            return None;
        }
        let m = mean(xs);
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64;
        Some(Stat {
            mean: m,
            std: var.sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub report: BandedReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mape_rg: Stat,
    pub mape_bytes: Stat,
    pub band_rg: Banded<Stat>,
}

/// Per-seed reports with their mean and standard deviation. Bands are
/// computed per seed before averaging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub seeds: Vec<SeedReport>,
    pub summary: Summary,
}

impl FidelityReport {
    pub fn from_seeds(seeds: Vec<SeedReport>) -> Result<Self, EvalError> {
        if seeds.is_empty() {
            return Err(EvalError::NoSeeds);
        }
        let collect = |f: &dyn Fn(&BandedReport) -> Option<f64>| -> Vec<f64> {
            seeds.iter().filter_map(|s| f(&s.report)).collect()
        };
        let mut band_rg = Banded::default();
        for band in Band::ALL {
            band_rg.set(band, Stat::of(&collect(&|r| r.band_rg.get(band))));
        }
        let summary = Summary {
            mape_rg: Stat::of(&collect(&|r| Some(r.mape_rg))).expect("non-empty"),
            mape_bytes: Stat::of(&collect(&|r| Some(r.mape_bytes))).expect("non-empty"),
            band_rg,
        };
        Ok(Self { seeds, summary })
    }

    /// One row per query per seed.
    pub fn write_csv<W: Write>(&self, mut out: W, with_header: bool, prefix: &[&str]) -> std::io::Result<()> {
        if with_header {
            writeln!(out, "{}", QUERY_CSV_HEADER)?;
        }
        for s in &self.seeds {
            for r in &s.report.records {
                for p in prefix {
                    write!(out, "{p},")?;
                }
                writeln!(
                    out,
                    "{},{:.6},{},{},{},{},{},{:.6},{:.6}",
                    s.seed,
                    r.selectivity,
                    r.cutoff,
                    r.orig_rgs,
                    r.synth_rgs,
                    r.orig_bytes,
                    r.synth_bytes,
                    r.ape_rg,
                    r.ape_bytes
                )?;
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), EvalError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut f, true, &[])?;
        f.flush()?;
        Ok(())
    }

    pub fn save_summary(&self, path: &Path) -> Result<(), EvalError> {
        std::fs::write(path, serde_json::to_string_pretty(&self.summary)?)?;
        Ok(())
    }
}

pub const QUERY_CSV_HEADER: &str = "seed,selectivity,cutoff,orig_rgs,synth_rgs,orig_bytes,synth_bytes,ape_rg,ape_bytes";
