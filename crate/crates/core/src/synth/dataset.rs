//! Stand-in originals: files sorted on a date-like filter column with
//! realistic payload columns.
//!
//! Filter values come from stratified uniforms pushed through the warp
//! `G(p) = p + a·(1 − cos 2πcp) / 2πc` (c = 3 cycles), a monotone map from
//! `[0, 1]` onto itself whose density `1 + a·sin 2πcp` makes row-group
//! boundary spacing vary with coefficient of variation close to `a / √2`.
//! Payload widths drift slowly with position so row-group sizes differ.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use parquet::basic::Compression;
use parquet::basic::ZstdLevel;
use parquet::data_type::ByteArray;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::pq::{ColumnData, ColumnKind, ColumnSpec, FilterType, TableWriter};
use crate::rng::{substream, Purpose};
use crate::sketch::Domain;

const WARP_CYCLES: f64 = 3.0;
const DRIFT_AMPLITUDE: f64 = 0.35;

/// 1992-01-01 .. 1998-12-31 as days since the Unix epoch.
pub const DEFAULT_DOMAIN: Domain = Domain {
    lower: 8035,
    upper: 10588,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    TpchLike,
    SsbLike,
    Uniform,
}

impl Profile {
    pub fn name(&self) -> &'static str {
        match self {
            Profile::TpchLike => "tpch-like",
            Profile::SsbLike => "ssb-like",
            Profile::Uniform => "uniform",
        }
    }

    /// Warp amplitude giving boundary-spacing CV ≈ 0.25, 0.13 and 0.
    pub fn default_skew(&self) -> f64 {
        match self {
            Profile::TpchLike => 0.3536,
            Profile::SsbLike => 0.184,
            Profile::Uniform => 0.0,
        }
    }

    pub fn filter_column(&self) -> &'static str {
        match self {
            Profile::TpchLike => "l_shipdate",
            Profile::SsbLike => "lo_orderdate",
            Profile::Uniform => "event_date",
        }
    }

    fn payload_schema(&self) -> Vec<ColumnSpec> {
        use ColumnKind::*;
        let cols: &[(&str, ColumnKind)] = match self {
            Profile::TpchLike => &[
                ("l_orderkey", Int64),
                ("l_partkey", Int64),
                ("l_quantity", Int32),
                ("l_extendedprice", Double),
                ("l_discount", Double),
                ("l_returnflag", Utf8),
                ("l_shipmode", Utf8),
                ("l_comment", Utf8),
            ],
            Profile::SsbLike => &[
                ("lo_orderkey", Int64),
                ("lo_custkey", Int64),
                ("lo_partkey", Int64),
                ("lo_quantity", Int32),
                ("lo_extendedprice", Double),
                ("lo_discount", Int32),
                ("lo_revenue", Double),
                ("lo_shipmode", Utf8),
            ],
            Profile::Uniform => &[("id", Int64), ("value", Double), ("tag", Utf8)],
        };
        cols.iter().map(|&(n, k)| ColumnSpec::new(n, k)).collect()
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tpch-like" | "tpch" => Ok(Profile::TpchLike),
            "ssb-like" | "ssb" => Ok(Profile::SsbLike),
            "uniform" => Ok(Profile::Uniform),
            _ => Err(SynthError::InvalidProfile(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub profile: Profile,
    pub n_rows: u64,
    pub rows_per_group: u64,
    pub domain: Domain,
    /// Warp amplitude in `[0, 1)`; the profile default when absent.
    pub skew: Option<f64>,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn new(profile: Profile, n_rows: u64, rows_per_group: u64) -> Self {
        Self {
            profile,
            n_rows,
            rows_per_group,
            domain: DEFAULT_DOMAIN,
            skew: None,
            seed: 0,
        }
    }

    pub fn skew(&self) -> f64 {
        self.skew.unwrap_or_else(|| self.profile.default_skew())
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidDataset(m.to_string()));
        if self.rows_per_group == 0 {
            return bad("rows_per_group must be positive");
        }
        if self.n_rows < self.rows_per_group {
            return bad("n_rows must be at least rows_per_group");
        }
        let a = self.skew();
        if !(0.0..1.0).contains(&a) {
            return bad("skew must lie in [0, 1)");
        }
        Ok(())
    }
}

/// Written alongside the dataset as `<file>.meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub path: PathBuf,
    pub profile: Profile,
    pub filter_column: String,
    pub n_rows: u64,
    pub rows_per_group: u64,
    pub num_row_groups: usize,
    pub column_count: usize,
    pub domain: Domain,
    pub skew: f64,
    pub seed: u64,
    /// Largest number of rows sharing one filter value.
    pub max_multiplicity: u64,
}

impl DatasetInfo {
    pub fn sidecar_path(data_path: &Path) -> PathBuf {
        let mut s = data_path.as_os_str().to_owned();
        s.push(".meta.json");
        PathBuf::from(s)
    }

    pub fn load_sidecar(data_path: &Path) -> Option<Self> {
        let text = std::fs::read_to_string(Self::sidecar_path(data_path)).ok()?;
        serde_json::from_str(&text).ok()
    }
}

/// Monotone map of `[0, 1]` onto itself with density `1 + a·sin(2πcp)`.
pub fn warp(p: f64, a: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI * WARP_CYCLES;
    p + a * (1.0 - (w * p).cos()) / w
}

fn drift(p: f64) -> f64 {
    1.0 + DRIFT_AMPLITUDE * (4.0 * std::f64::consts::PI * p + 1.0).sin()
}

/// Sorted filter values for the whole file.
pub fn filter_values(spec: &DatasetSpec) -> Vec<i64> {
    let n = spec.n_rows as usize;
    let a = spec.skew();
    let w = spec.domain.width();
    let mut rng = substream(spec.seed, Purpose::Dataset, u32::MAX as u64);
    (0..n)
        .map(|j| {
            let p = (j as f64 + rng.random::<f64>()) / n as f64;
            let t = warp(p, a).clamp(0.0, 1.0);
            let off = ((t * (w + 1) as f64).floor() as i64).min(w);
            spec.domain.lower + off
        })
        .collect()
}

/// Largest run of equal values in a sorted slice.
pub fn max_run(sorted: &[i64]) -> u64 {
    sorted
        .chunk_by(|a, b| a == b)
        .map(|run| run.len() as u64)
        .max()
        .unwrap_or(0)
}

const WORDS: &[&str] = &[
    "carefully",
    "final",
    "deposits",
    "sleep",
    "quickly",
    "regular",
    "packages",
    "furiously",
    "ironic",
    "accounts",
    "boldly",
    "pending",
    "requests",
    "express",
    "theodolites",
    "blithely",
    "special",
    "foxes",
    "silent",
    "pinto",
    "beans",
    "unusual",
    "instructions",
    "slyly",
];
const SHIPMODES: &[&str] = &["AIR", "FOB", "MAIL", "RAIL", "REG AIR", "SHIP", "TRUCK"];
const RETURNFLAGS: &[&str] = &["A", "N", "R"];

fn text<R: Rng + ?Sized>(rng: &mut R, target_len: usize) -> ByteArray {
    let mut s = String::with_capacity(target_len + 12);
    while s.len() < target_len {
        if !s.is_empty() {
            s.push(' ');
        }
        s.push_str(WORDS[rng.random_range(0..WORDS.len())]);
    }
    s.truncate(target_len.max(1));
    ByteArray::from(s.into_bytes())
}

fn pick<R: Rng + ?Sized>(rng: &mut R, choices: &[&str]) -> ByteArray {
    ByteArray::from(choices[rng.random_range(0..choices.len())])
}

fn cents(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Payload for rows `start..start + rows` of an `n`-row file.
fn payload<R: Rng + ?Sized>(profile: Profile, start: u64, rows: usize, n: u64, rng: &mut R) -> Vec<ColumnData> {
    let pos = |r: usize| (start + r as u64) as f64 / n as f64;
    let comment_len =
        |r: usize, rng: &mut R| ((27.0 * drift(pos(r)) * (0.5 + rng.random::<f64>())).round() as usize).max(1);
    match profile {
        Profile::TpchLike => {
            let orderkey: Vec<i64> = (0..rows).map(|_| rng.random_range(1..=4 * n as i64)).collect();
            let partkey: Vec<i64> = (0..rows).map(|_| rng.random_range(1..=200_000)).collect();
            let quantity: Vec<i32> = (0..rows).map(|_| rng.random_range(1..=50)).collect();
            let price: Vec<f64> = quantity
                .iter()
                .zip(&partkey)
                .map(|(&q, &pk)| cents(q as f64 * (900.0 + (pk % 1000) as f64 + rng.random::<f64>())))
                .collect();
            let discount: Vec<f64> = (0..rows).map(|_| rng.random_range(0..=10) as f64 / 100.0).collect();
            let flags = (0..rows).map(|_| pick(rng, RETURNFLAGS)).collect();
            let modes = (0..rows).map(|_| pick(rng, SHIPMODES)).collect();
            let comments = (0..rows).map(|r| {
                let len = comment_len(r, rng);
                text(rng, len)
            });
            vec![
                ColumnData::Int64(orderkey),
                ColumnData::Int64(partkey),
                ColumnData::Int32(quantity),
                ColumnData::Double(price),
                ColumnData::Double(discount),
                ColumnData::Bytes(flags),
                ColumnData::Bytes(modes),
                ColumnData::Bytes(comments.collect()),
            ]
        }
        Profile::SsbLike => {
            let orderkey: Vec<i64> = (0..rows).map(|_| rng.random_range(1..=4 * n as i64)).collect();
            let custkey: Vec<i64> = (0..rows)
                .map(|r| {
                    let hi = (30_000.0 * drift(pos(r)).powi(4)).max(1.0) as i64;
                    rng.random_range(1..=hi)
                })
                .collect();
            let partkey: Vec<i64> = (0..rows).map(|_| rng.random_range(1..=200_000)).collect();
            let quantity: Vec<i32> = (0..rows).map(|_| rng.random_range(1..=50)).collect();
            let price: Vec<f64> = quantity
                .iter()
                .zip(&partkey)
                .map(|(&q, &pk)| cents(q as f64 * (900.0 + (pk % 1000) as f64 + rng.random::<f64>())))
                .collect();
            let discount: Vec<i32> = (0..rows).map(|_| rng.random_range(0..=10)).collect();
            let revenue = price
                .iter()
                .zip(&discount)
                .map(|(&p, &d)| cents(p * (100 - d) as f64 / 100.0))
                .collect();
            let modes = (0..rows).map(|_| pick(rng, SHIPMODES)).collect();
            vec![
                ColumnData::Int64(orderkey),
                ColumnData::Int64(custkey),
                ColumnData::Int64(partkey),
                ColumnData::Int32(quantity),
                ColumnData::Double(price),
                ColumnData::Int32(discount),
                ColumnData::Double(revenue),
                ColumnData::Bytes(modes),
            ]
        }
        Profile::Uniform => {
            let id = (0..rows).map(|r| (start + r as u64) as i64).collect();
            let value = (0..rows).map(|_| rng.random::<f64>()).collect();
            let tags = (0..rows).map(|r| {
                let len = comment_len(r, rng);
                text(rng, len)
            });
            vec![
                ColumnData::Int64(id),
                ColumnData::Double(value),
                ColumnData::Bytes(tags.collect()),
            ]
        }
    }
}

/// Writes a ZSTD file sorted on the profile's filter column, one row group per
/// `rows_per_group` rows (the last may be shorter), plus its sidecar.
pub fn generate_dataset(spec: &DatasetSpec, out_path: &Path) -> Result<DatasetInfo, SynthError> {
    spec.validate()?;
    let values = filter_values(spec);
    let filter_type = FilterType::for_range(spec.domain.lower, spec.domain.upper);
    let mut columns = vec![ColumnSpec::new(
        spec.profile.filter_column(),
        ColumnKind::Filter(filter_type),
    )];
    columns.extend(spec.profile.payload_schema());
    let column_count = columns.len();

    let write_err = |e: std::io::Error| SynthError::WriteFailure {
        path: out_path.to_path_buf(),
        source: e,
    };
    let file = std::fs::File::create(out_path).map_err(write_err)?;
    let mut writer = TableWriter::new(
        std::io::BufWriter::new(file),
        columns,
        Compression::ZSTD(ZstdLevel::default()),
    )?;
    let chunks: Vec<&[i64]> = values.chunks(spec.rows_per_group as usize).collect();
    for (i, chunk) in chunks.iter().enumerate() {
        let start = i as u64 * spec.rows_per_group;
        let mut rng = substream(spec.seed, Purpose::Dataset, i as u64);
        let mut data = vec![ColumnData::filter(chunk, filter_type)];
        data.extend(payload(spec.profile, start, chunk.len(), spec.n_rows, &mut rng));
        writer.write_row_group(&data)?;
    }
    use std::io::Write;
    writer.finish()?.flush().map_err(write_err)?;

    let info = DatasetInfo {
        path: out_path.to_path_buf(),
        profile: spec.profile,
        filter_column: spec.profile.filter_column().to_string(),
        n_rows: spec.n_rows,
        rows_per_group: spec.rows_per_group,
        num_row_groups: chunks.len(),
        column_count,
        domain: spec.domain,
        skew: spec.skew(),
        seed: spec.seed,
        max_multiplicity: max_run(&values),
    };
    let sidecar = DatasetInfo::sidecar_path(out_path);
    let json = serde_json::to_string_pretty(&info).expect("dataset info serializes");
    std::fs::write(&sidecar, json).map_err(|e| SynthError::WriteFailure {
        path: sidecar,
        source: e,
    })?;
    Ok(info)
}
