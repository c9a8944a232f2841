//! Footer sketch of a Parquet file sorted on one integer-like filter column.
//!
//! Extraction touches only the footer: per row group it records the filter
//! column's min/max statistics and the compressed size summed over every
//! column chunk, plus the file-level counts the writer needs to rebuild the
//! same layout.

use std::fmt;
use std::path::Path;

use parquet::basic::Type as PhysicalType;
use parquet::file::metadata::ParquetMetaData;
use parquet::file::reader::ChunkReader;
use parquet::file::statistics::Statistics;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pq;

#[derive(Debug, Error)]
pub enum SketchError {
    #[error("parquet: {0}")]
    Parquet(#[from] parquet::errors::ParquetError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("filter column `{0}` not found")]
    MissingColumn(String),
    #[error("row group {row_group} has no min/max statistics for `{column}`")]
    MissingStatistics { row_group: usize, column: String },
    #[error(
        "row group {row_group} starts at {min} below previous max {prev_max}; file is not sorted on the filter column"
    )]
    NotSorted { row_group: usize, min: i64, prev_max: i64 },
    #[error("filter column `{column}` has unsupported physical type {physical}")]
    UnsupportedType { column: String, physical: String },
    #[error("row group {row_group} has {rows} rows, expected {expected}; only the final row group may be short")]
    RaggedRowGroups { row_group: usize, rows: u64, expected: u64 },
    #[error("file has no rows")]
    Empty,
    #[error("invalid sketch: {0}")]
    Invalid(String),
}

/// Public value domain `[lower, upper]` of the filter column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub lower: i64,
    pub upper: i64,
}

impl Domain {
    pub fn new(lower: i64, upper: i64) -> Result<Self, SketchError> {
        if lower >= upper {
            return Err(SketchError::Invalid(format!(
                "domain lower {lower} must be below upper {upper}"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn width(&self) -> i64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: i64) -> bool {
        (self.lower..=self.upper).contains(&v)
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lower, self.upper)
    }
}

impl std::str::FromStr for Domain {
    type Err = SketchError;

    /// Parses `LO:HI`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SketchError::Invalid(format!("domain `{s}` is not LO:HI"));
        let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
        let lo = lo.trim().parse().map_err(|_| bad())?;
        let hi = hi.trim().parse().map_err(|_| bad())?;
        Domain::new(lo, hi)
    }
}

/// Zone map entry of one row group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowGroupMeta {
    #[serde(skip)]
    pub index: usize,
    #[serde(rename = "min")]
    pub min_val: i64,
    #[serde(rename = "max")]
    pub max_val: i64,
    #[serde(rename = "size")]
    pub compressed_size: u64,
    pub rows: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sketch {
    #[serde(rename = "n_rows")]
    pub total_rows: u64,
    #[serde(rename = "n_row_groups")]
    pub num_row_groups: usize,
    pub rows_per_group: u64,
    pub column_count: usize,
    pub codec: String,
    pub filter_column: String,
    pub uncompressed_row_size: u64,
    pub row_groups: Vec<RowGroupMeta>,
}

impl Sketch {
    pub fn total_compressed_size(&self) -> u64 {
        self.row_groups.iter().map(|rg| rg.compressed_size).sum()
    }

    pub fn row_counts(&self) -> Vec<u64> {
        self.row_groups.iter().map(|rg| rg.rows).collect()
    }

    /// Checks every type invariant, including sortedness.
    pub fn validate(&self) -> Result<(), SketchError> {
        let invalid = |m: String| Err(SketchError::Invalid(m));
        if self.row_groups.len() != self.num_row_groups {
            return invalid(format!(
                "n_row_groups {} but {} row groups listed",
                self.num_row_groups,
                self.row_groups.len()
            ));
        }
        if self.row_groups.is_empty() {
            return Err(SketchError::Empty);
        }
        let rows: u64 = self.row_groups.iter().map(|rg| rg.rows).sum();
        if rows != self.total_rows {
            return invalid(format!("n_rows {} but row groups hold {rows}", self.total_rows));
        }
        for rg in &self.row_groups {
            if rg.min_val > rg.max_val {
                return invalid(format!("row group {} has min > max", rg.index));
            }
            if rg.compressed_size == 0 {
                return invalid(format!("row group {} has zero size", rg.index));
            }
        }
        check_row_counts(&self.row_groups, self.rows_per_group)?;
        check_sorted(&self.row_groups)
    }

    pub fn to_json(&self) -> Result<String, SketchError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, SketchError> {
        let mut sketch: Sketch = serde_json::from_str(s)?;
        for (i, rg) in sketch.row_groups.iter_mut().enumerate() {
            rg.index = i;
        }
        sketch.validate()?;
        Ok(sketch)
    }

    pub fn save(&self, path: &Path) -> Result<(), SketchError> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, SketchError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn check_sorted(row_groups: &[RowGroupMeta]) -> Result<(), SketchError> {
    for pair in row_groups.windows(2) {
        if pair[1].min_val < pair[0].max_val {
            return Err(SketchError::NotSorted {
                row_group: pair[1].index,
                min: pair[1].min_val,
                prev_max: pair[0].max_val,
            });
        }
    }
    Ok(())
}

fn check_row_counts(row_groups: &[RowGroupMeta], n: u64) -> Result<(), SketchError> {
    let last = row_groups.len() - 1;
    for rg in row_groups {
        let ok = if rg.index == last {
            rg.rows >= 1 && rg.rows <= n
        } else {
            rg.rows == n
        };
        if !ok {
            return Err(SketchError::RaggedRowGroups {
                row_group: rg.index,
                rows: rg.rows,
                expected: n,
            });
        }
    }
    Ok(())
}

/// Reads the zone map of `filter_column` from the footer without any
/// ordering checks. Works for unsorted files too (baselines).
pub fn read_zone_map<R: ChunkReader>(
    reader: &R,
    filter_column: &str,
) -> Result<(ParquetMetaData, Vec<RowGroupMeta>), SketchError> {
    let meta = pq::read_footer(reader)?;
    let (col, physical) =
        pq::find_column(&meta, filter_column).ok_or_else(|| SketchError::MissingColumn(filter_column.to_string()))?;
    if !matches!(physical, PhysicalType::INT32 | PhysicalType::INT64) {
        return Err(SketchError::UnsupportedType {
            column: filter_column.to_string(),
            physical: physical.to_string(),
        });
    }
    let mut zones = Vec::with_capacity(meta.num_row_groups());
    for (index, rg) in meta.row_groups().iter().enumerate() {
        let missing = || SketchError::MissingStatistics {
            row_group: index,
            column: filter_column.to_string(),
        };
        let (min_val, max_val) = match rg.column(col).statistics() {
            Some(Statistics::Int32(s)) => (
                *s.min_opt().ok_or_else(missing)? as i64,
                *s.max_opt().ok_or_else(missing)? as i64,
            ),
            Some(Statistics::Int64(s)) => (*s.min_opt().ok_or_else(missing)?, *s.max_opt().ok_or_else(missing)?),
            _ => return Err(missing()),
        };
        zones.push(RowGroupMeta {
            index,
            min_val,
            max_val,
            compressed_size: rg.compressed_size() as u64,
            rows: rg.num_rows() as u64,
        });
    }
    Ok((meta, zones))
}

pub fn read_zone_map_path(path: &Path, filter_column: &str) -> Result<Vec<RowGroupMeta>, SketchError> {
    let file = std::fs::File::open(path)?;
    Ok(read_zone_map(&file, filter_column)?.1)
}

/// Builds the sketch from any chunk reader; only footer bytes are requested.
pub fn extract_sketch_from<R: ChunkReader>(reader: &R, filter_column: &str) -> Result<Sketch, SketchError> {
    let (meta, row_groups) = read_zone_map(reader, filter_column)?;
    if row_groups.is_empty() || meta.file_metadata().num_rows() == 0 {
        return Err(SketchError::Empty);
    }
    let total_rows = meta.file_metadata().num_rows() as u64;
    let codec = meta
        .row_group(0)
        .columns()
        .first()
        .map(|c| pq::compression_name(c.compression()))
        .unwrap_or_else(|| "UNCOMPRESSED".into());
    let sketch = Sketch {
        total_rows,
        num_row_groups: row_groups.len(),
        rows_per_group: row_groups[0].rows,
        column_count: meta.file_metadata().schema_descr().num_columns(),
        codec,
        filter_column: filter_column.to_string(),
        uncompressed_row_size: uncompressed_row_size_of(&meta),
        row_groups,
    };
    sketch.validate()?;
    Ok(sketch)
}

pub fn extract_sketch(parquet_path: &Path, filter_column: &str) -> Result<Sketch, SketchError> {
    let file = std::fs::File::open(parquet_path)?;
    extract_sketch_from(&file, filter_column)
}

/// `ceil(total_uncompressed / rows)`.
pub fn row_size_from_totals(total_uncompressed: u64, rows: u64) -> u64 {
    if rows == 0 {
        0
    } else {
        total_uncompressed.div_ceil(rows)
    }
}

fn uncompressed_row_size_of(meta: &ParquetMetaData) -> u64 {
    let total: i64 = meta
        .row_groups()
        .iter()
        .flat_map(|rg| rg.columns())
        .map(|c| c.uncompressed_size())
        .sum();
    row_size_from_totals(total as u64, meta.file_metadata().num_rows() as u64)
}

/// Bytes of one uncompressed row, averaged over the file, from footer fields.
pub fn uncompressed_row_size(parquet_path: &Path) -> Result<u64, SketchError> {
    let meta = pq::read_footer_path(parquet_path)?;
    Ok(uncompressed_row_size_of(&meta))
}

/// Filter column values per row group, decoded from the data pages.
pub fn read_filter_values(path: &Path, filter_column: &str) -> Result<Vec<Vec<i64>>, SketchError> {
    let meta = pq::read_footer_path(path)?;
    let (col, physical) =
        pq::find_column(&meta, filter_column).ok_or_else(|| SketchError::MissingColumn(filter_column.to_string()))?;
    pq::read_int_column(path, col)?.ok_or_else(|| SketchError::UnsupportedType {
        column: filter_column.to_string(),
        physical: physical.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rg(index: usize, min: i64, max: i64, rows: u64) -> RowGroupMeta {
        RowGroupMeta {
            index,
            min_val: min,
            max_val: max,
            compressed_size: 100,
            rows,
        }
    }

    fn sketch(groups: Vec<RowGroupMeta>, n: u64) -> Sketch {
        Sketch {
            total_rows: groups.iter().map(|g| g.rows).sum(),
            num_row_groups: groups.len(),
            rows_per_group: n,
            column_count: 1,
            codec: "ZSTD".into(),
            filter_column: "d".into(),
            uncompressed_row_size: 4,
            row_groups: groups,
        }
    }

    #[test]
    fn domain_parses_lo_hi() {
        let d: Domain = "8035:10588".parse().unwrap();
        assert_eq!(
            d,
            Domain {
                lower: 8035,
                upper: 10588
            }
        );
        assert_eq!(d.width(), 2553);
        assert!("5:5".parse::<Domain>().is_err());
        assert!("abc".parse::<Domain>().is_err());
    }

    #[test]
    fn sortedness_rejects_overlap() {
        let s = sketch(vec![rg(0, 0, 10, 5), rg(1, 9, 20, 5)], 5);
        assert!(matches!(s.validate(), Err(SketchError::NotSorted { row_group: 1, .. })));
        let shared = sketch(vec![rg(0, 0, 10, 5), rg(1, 10, 20, 5)], 5);
        shared.validate().unwrap();
    }

    #[test]
    fn short_tail_only() {
        sketch(vec![rg(0, 0, 1, 5), rg(1, 2, 3, 2)], 5).validate().unwrap();
        let bad = sketch(vec![rg(0, 0, 1, 2), rg(1, 2, 3, 5)], 5);
        assert!(matches!(
            bad.validate(),
            Err(SketchError::RaggedRowGroups { row_group: 0, .. })
        ));
    }

    #[test]
    fn row_size_rounds_up() {
        assert_eq!(row_size_from_totals(800, 100), 8);
        assert_eq!(row_size_from_totals(1200, 100), 12);
        assert_eq!(row_size_from_totals(801, 100), 9);
    }

    #[test]
    fn json_field_names_are_stable() {
        let s = sketch(vec![rg(0, 0, 9, 10), rg(1, 10, 19, 10)], 10);
        let v: serde_json::Value = serde_json::from_str(&s.to_json().unwrap()).unwrap();
        for key in [
            "n_rows",
            "n_row_groups",
            "rows_per_group",
            "column_count",
            "codec",
            "filter_column",
            "uncompressed_row_size",
            "row_groups",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let first = &v["row_groups"][0];
        assert_eq!(first["min"], 0);
        assert_eq!(first["max"], 9);
        assert_eq!(first["size"], 100);
        let back = Sketch::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
