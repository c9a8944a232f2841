//! Comparison methods. All share the original's schema width, row counts,
//! codec and row-group size; they differ in where filter values land and how
//! padding is distributed.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::writer::{calibrate_and_write, write_uniform_padding, SynthPlan, WriteOutcome};
use super::{filter::generate_filter_column, SynthError};
use crate::dp::{release_sketch, Epsilon, ReleaseParams};
use crate::rng::{substream, Purpose};
use crate::sketch::{Domain, Sketch};

/// Resolution of the Marginal baseline's global histogram.
pub const MARGINAL_BINS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    /// Uniform on the domain, unsorted.
    Random,
    /// Drawn from the original's global histogram, unsorted.
    Marginal,
    /// Uniform on the domain, globally sorted.
    SortedGlobal,
    /// Per-row-group bounds, equal padding everywhere.
    #[serde(rename = "minmax")]
    MinMax,
    /// Per-row-group bounds, calibrated per-row-group padding.
    Full,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 5] = [
        BaselineKind::Random,
        BaselineKind::Marginal,
        BaselineKind::SortedGlobal,
        BaselineKind::MinMax,
        BaselineKind::Full,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::Random => "random",
            BaselineKind::Marginal => "marginal",
            BaselineKind::SortedGlobal => "sorted-global",
            BaselineKind::MinMax => "minmax",
            BaselineKind::Full => "full",
        }
    }

    /// Whether the method consumes a privacy budget (others run at ε = ∞ only).
    pub fn is_private(&self) -> bool {
        matches!(self, BaselineKind::Full)
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineKind {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| SynthError::UnknownBaseline(s.to_string()))
    }
}

/// What a baseline may see of the original.
#[derive(Debug, Clone, Copy)]
pub struct BaselineInput<'a> {
    pub sketch: &'a Sketch,
    pub domain: Domain,
    /// Filter values of the original, needed by [`BaselineKind::Marginal`].
    pub values: Option<&'a [i64]>,
}

/// Equi-width histogram over the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub domain: Domain,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn build(values: &[i64], domain: Domain, bins: usize) -> Self {
        let mut counts = vec![0u64; bins];
        for &v in values {
            counts[Self::bin_of(v, &domain, bins)] += 1;
        }
        Self { domain, counts }
    }

    fn bin_of(v: i64, domain: &Domain, bins: usize) -> usize {
        let span = (domain.width() + 1) as i128;
        let off = (v.clamp(domain.lower, domain.upper) - domain.lower) as i128;
        ((off * bins as i128) / span) as usize
    }

    /// Inclusive integer range of bin `b`.
    pub fn bin_range(&self, b: usize) -> (i64, i64) {
        let bins = self.counts.len() as i128;
        let span = (self.domain.width() + 1) as i128;
        let ceil = |x: i128| (x + bins - 1) / bins;
        let lo = ceil(b as i128 * span);
        let hi = ceil((b as i128 + 1) * span) - 1;
        (self.domain.lower + lo as i64, self.domain.lower + hi as i64)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let total: u64 = self.counts.iter().sum();
        let mut pick = rng.random_range(0..total);
        let mut bin = 0;
        for (b, &c) in self.counts.iter().enumerate() {
            if pick < c {
                bin = b;
                break;
            }
            pick -= c;
        }
        let (lo, hi) = self.bin_range(bin);
        rng.random_range(lo..=hi.max(lo))
    }
}

fn exact_release(input: &BaselineInput<'_>) -> Result<crate::dp::NoisySketch, SynthError> {
    Ok(release_sketch(
        input.sketch,
        &ReleaseParams {
            epsilon: Epsilon::Infinite,
            max_multiplicity: input.sketch.rows_per_group.max(1),
            domain: input.domain,
            rng_seed: 0,
        },
    )?)
}

fn chunk(values: Vec<i64>, row_counts: &[u64]) -> Vec<Vec<i64>> {
    let mut out = Vec::with_capacity(row_counts.len());
    let mut it = values.into_iter();
    for &rows in row_counts {
        out.push(it.by_ref().take(rows as usize).collect());
    }
    out
}

/// Writes the file for `kind` at ε = ∞.
pub fn generate_baseline(
    kind: BaselineKind,
    input: &BaselineInput<'_>,
    out_path: &Path,
    seed: u64,
) -> Result<WriteOutcome, SynthError> {
    let noisy = exact_release(input)?;
    let plan = SynthPlan::from_noisy(&noisy)?;
    let total_size = input.sketch.total_compressed_size();
    let n = input.sketch.total_rows as usize;
    let d = input.domain;
    let mut rng = substream(seed, Purpose::Baseline, kind as u64);

    let filter = match kind {
        BaselineKind::Full => return calibrate_and_write(&plan, &generate_filter_column(&noisy, seed), out_path, seed),
        BaselineKind::MinMax => generate_filter_column(&noisy, seed),
        BaselineKind::Random => {
            let values = (0..n).map(|_| rng.random_range(d.lower..=d.upper)).collect();
            chunk(values, &noisy.row_counts)
        }
        BaselineKind::SortedGlobal => {
            let mut values: Vec<i64> = (0..n).map(|_| rng.random_range(d.lower..=d.upper)).collect();
            values.sort_unstable();
            chunk(values, &noisy.row_counts)
        }
        BaselineKind::Marginal => {
            let original = input.values.ok_or(SynthError::MissingValues)?;
            let hist = Histogram::build(original, d, MARGINAL_BINS);
            let values = (0..n).map(|_| hist.sample(&mut rng)).collect();
            chunk(values, &noisy.row_counts)
        }
    };
    write_uniform_padding(&plan, &filter, total_size, out_path, seed)
}
