//! Layout-preserving writer with padding-size calibration.
//!
//! Pass 1 encodes the filter column alone to learn each row group's base
//! size. Pass 2 adds `C − 1` padding columns carrying `target − base` random
//! bytes per row group. If any reachable row group misses its target, one
//! correction pass shifts its padding by the measured error and the result
//! is written. Random bytes defeat the codec, so size is close to linear in
//! padding and a single correction lands within a fraction of a percent.

use std::path::{Path, PathBuf};

use bytes::Bytes;
use parquet::data_type::ByteArray;
use rand::RngCore;
use serde::Serialize;

use super::filter::generate_filter_column;
use super::SynthError;
use crate::dp::NoisySketch;
use crate::pq::{self, ColumnData, ColumnKind, ColumnSpec, FilterType, TableWriter};
use crate::rng::{substream, Purpose};
use crate::sketch::Domain;

/// Row groups within this relative error after pass 2 skip the correction pass.
const SKIP_CORRECTION_BELOW: f64 = 1e-3;

/// Minimum length of a non-empty padding value.
pub const PAD_VALUE_BYTES: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowGroupPlan {
    pub interval: (i64, i64),
    pub rows: u64,
    pub target_size: u64,
}

/// Everything needed to write a synthetic file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SynthPlan {
    pub row_groups: Vec<RowGroupPlan>,
    pub padding_columns: usize,
    pub codec: String,
    pub rows_per_group: u64,
    pub filter_column: String,
    #[serde(skip)]
    pub filter_type: FilterType,
    pub domain: Domain,
}

impl SynthPlan {
    pub fn from_noisy(noisy: &NoisySketch) -> Result<Self, SynthError> {
        noisy.validate()?;
        let domain = noisy.domain();
        let plan = Self {
            row_groups: (0..noisy.num_row_groups())
                .map(|i| RowGroupPlan {
                    interval: noisy.betas.interval(i),
                    rows: noisy.row_counts[i],
                    target_size: noisy.noisy_sizes[i],
                })
                .collect(),
            padding_columns: noisy.column_count.saturating_sub(1),
            codec: noisy.codec.clone(),
            rows_per_group: noisy.rows_per_group,
            filter_column: noisy.filter_column.clone(),
            filter_type: FilterType::for_range(domain.lower, domain.upper),
            domain,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn total_rows(&self) -> u64 {
        self.row_groups.iter().map(|rg| rg.rows).sum()
    }

    pub fn targets(&self) -> Vec<u64> {
        self.row_groups.iter().map(|rg| rg.target_size).collect()
    }

    /// Intervals tile the domain in order.
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidPlan(m));
        let Some(first) = self.row_groups.first() else {
            return bad("no row groups".into());
        };
        if first.interval.0 != self.domain.lower || self.row_groups.last().unwrap().interval.1 != self.domain.upper {
            return bad("intervals do not span the domain".into());
        }
        for (i, rg) in self.row_groups.iter().enumerate() {
            if rg.interval.0 > rg.interval.1 {
                return bad(format!("row group {i} has an inverted interval"));
            }
            if rg.rows == 0 {
                return bad(format!("row group {i} is empty"));
            }
        }
        if self.row_groups.windows(2).any(|w| w[0].interval.1 != w[1].interval.0) {
            return bad("intervals are not contiguous".into());
        }
        Ok(())
    }
}

/// A row group whose noisy target is below what the filter column alone needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Shortfall {
    pub row_group: usize,
    pub target: u64,
    pub base: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WriteOutcome {
    pub path: PathBuf,
    pub targets: Vec<u64>,
    pub base: Vec<u64>,
    pub padding: Vec<u64>,
    pub achieved: Vec<u64>,
    pub shortfalls: Vec<Shortfall>,
    /// Number of full encodes, including the filter-only pass.
    pub passes: usize,
}

impl WriteOutcome {
    /// Largest `|achieved − target| / target` over row groups that could reach
    /// their target.
    pub fn max_relative_error(&self) -> f64 {
        self.targets
            .iter()
            .zip(&self.achieved)
            .enumerate()
            .filter(|(i, _)| !self.shortfalls.iter().any(|s| s.row_group == *i))
            .map(|(_, (&t, &a))| (a as f64 - t as f64).abs() / t.max(1) as f64)
            .fold(0.0, f64::max)
    }
}

/// Encodes a fixed set of filter values with varying amounts of padding.
pub(crate) struct Encoder<'a> {
    filter_column: &'a str,
    filter_type: FilterType,
    padding_columns: usize,
    codec: &'a str,
    filter: &'a [Vec<i64>],
    seed: u64,
}

impl<'a> Encoder<'a> {
    pub(crate) fn new(plan: &'a SynthPlan, filter: &'a [Vec<i64>], seed: u64) -> Self {
        Self {
            filter_column: &plan.filter_column,
            filter_type: plan.filter_type,
            padding_columns: plan.padding_columns,
            codec: &plan.codec,
            filter,
            seed,
        }
    }

    /// `None` writes the filter column alone.
    pub(crate) fn encode(&self, padding: Option<&[u64]>) -> Result<Bytes, SynthError> {
        let compression =
            pq::writable_compression(self.codec).ok_or_else(|| SynthError::UnsupportedCodec(self.codec.to_string()))?;
        let mut columns = vec![ColumnSpec::new(
            self.filter_column,
            ColumnKind::Filter(self.filter_type),
        )];
        if padding.is_some() {
            columns.extend((0..self.padding_columns).map(|j| ColumnSpec::new(format!("pad_{j}"), ColumnKind::Padding)));
        }
        let mut writer = TableWriter::new(Vec::new(), columns, compression)?;
        for (i, values) in self.filter.iter().enumerate() {
            let mut data = vec![ColumnData::filter(values, self.filter_type)];
            if let Some(pad) = padding {
                data.extend(self.padding_chunks(i, values.len(), pad[i]));
            }
            writer.write_row_group(&data)?;
        }
        Ok(Bytes::from(writer.finish()?))
    }

    /// Splits `bytes` evenly over the padding columns. Within a column the
    /// bytes fill leading rows in values of at least [`PAD_VALUE_BYTES`];
    /// the remaining rows hold empty values.
    fn padding_chunks(&self, rg: usize, rows: usize, bytes: u64) -> Vec<ColumnData> {
        let cols = self.padding_columns as u64;
        (0..cols)
            .map(|j| {
                let share = (bytes / cols + u64::from(j < bytes % cols)) as usize;
                let mut buf = vec![0u8; share];
                substream(self.seed, Purpose::Padding, ((rg as u64) << 16) | j).fill_bytes(&mut buf);
                let buf = Bytes::from(buf);
                let width = share.div_ceil(rows.max(1)).max(PAD_VALUE_BYTES);
                let values = (0..rows)
                    .map(|r| {
                        let start = (r * width).min(share);
                        let end = ((r + 1) * width).min(share);
                        ByteArray::from(buf.slice(start..end))
                    })
                    .collect();
                ColumnData::Bytes(values)
            })
            .collect()
    }
}

/// Writes `plan` to `out_path`, calibrating padding so each row group's
/// compressed size meets its target. Unreachable targets are reported in
/// [`WriteOutcome::shortfalls`]; the file is still written.
pub fn calibrate_and_write(
    plan: &SynthPlan,
    filter: &[Vec<i64>],
    out_path: &Path,
    seed: u64,
) -> Result<WriteOutcome, SynthError> {
    let encoder = Encoder::new(plan, filter, seed);
    let targets = plan.targets();
    let base = pq::row_group_sizes(&encoder.encode(None)?)?;

    let reachable: Vec<bool> = targets
        .iter()
        .zip(&base)
        .map(|(&t, &b)| t >= b && plan.padding_columns > 0)
        .collect();
    let shortfalls = (0..targets.len())
        .filter(|&i| !reachable[i])
        .map(|i| Shortfall {
            row_group: i,
            target: targets[i],
            base: base[i],
        })
        .collect::<Vec<_>>();

    let mut padding: Vec<u64> = targets
        .iter()
        .zip(&base)
        .zip(&reachable)
        .map(|((&t, &b), &ok)| if ok { t - b } else { 0 })
        .collect();
    let mut buf = encoder.encode(Some(&padding))?;
    let mut achieved = pq::row_group_sizes(&buf)?;
    let mut passes = 2;

    let needs_correction = (0..targets.len()).any(|i| {
        reachable[i] && (achieved[i] as f64 - targets[i] as f64).abs() > SKIP_CORRECTION_BELOW * targets[i] as f64
    });
    if needs_correction {
        for i in 0..targets.len() {
            if reachable[i] {
                let corrected = padding[i] as i64 + targets[i] as i64 - achieved[i] as i64;
                padding[i] = corrected.max(0) as u64;
            }
        }
        buf = encoder.encode(Some(&padding))?;
        achieved = pq::row_group_sizes(&buf)?;
        passes = 3;
    }

    std::fs::write(out_path, &buf).map_err(|e| SynthError::WriteFailure {
        path: out_path.to_path_buf(),
        source: e,
    })?;
    Ok(WriteOutcome {
        path: out_path.to_path_buf(),
        targets,
        base,
        padding,
        achieved,
        shortfalls,
        passes,
    })
}

/// Release → plan → filter values → calibrated write.
pub fn synthesize(noisy: &NoisySketch, out_path: &Path, seed: u64) -> Result<WriteOutcome, SynthError> {
    let plan = SynthPlan::from_noisy(noisy)?;
    let filter = generate_filter_column(noisy, seed);
    calibrate_and_write(&plan, &filter, out_path, seed)
}

/// Writes `filter` with the same padding in every row group, sized so the
/// file total matches `total_target`. No per-row-group targeting.
pub fn write_uniform_padding(
    plan: &SynthPlan,
    filter: &[Vec<i64>],
    total_target: u64,
    out_path: &Path,
    seed: u64,
) -> Result<WriteOutcome, SynthError> {
    let encoder = Encoder::new(plan, filter, seed);
    let base = pq::row_group_sizes(&encoder.encode(None)?)?;
    let k = filter.len() as u64;
    let base_total: u64 = base.iter().sum();
    let each = total_target.saturating_sub(base_total) / k.max(1);
    let padding = vec![if plan.padding_columns > 0 { each } else { 0 }; filter.len()];
    let buf = encoder.encode(Some(&padding))?;
    let achieved = pq::row_group_sizes(&buf)?;
    std::fs::write(out_path, &buf).map_err(|e| SynthError::WriteFailure {
        path: out_path.to_path_buf(),
        source: e,
    })?;
    let uniform_target = total_target / k.max(1);
    Ok(WriteOutcome {
        path: out_path.to_path_buf(),
        targets: vec![uniform_target; filter.len()],
        base,
        padding,
        achieved,
        shortfalls: Vec::new(),
        passes: 2,
    })
}
