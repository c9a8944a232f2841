//! Thin helpers over the `parquet` crate shared by extraction, synthesis and
//! simulation: footer parsing, filter column decoding and a small row-group
//! writer that flushes exactly the row counts it is given.

use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex};

use bytes::Bytes;
use parquet::basic::{Compression, LogicalType, Repetition, Type as PhysicalType, ZstdLevel};
use parquet::column::reader::ColumnReader;
use parquet::data_type::{ByteArray, ByteArrayType, DoubleType, Int32Type, Int64Type};
use parquet::errors::ParquetError;
use parquet::file::metadata::{ParquetMetaData, ParquetMetaDataReader};
use parquet::file::properties::{EnabledStatistics, WriterProperties};
use parquet::file::reader::{ChunkReader, FileReader, Length};
use parquet::file::serialized_reader::SerializedFileReader;
use parquet::file::writer::SerializedFileWriter;
use parquet::schema::types::{ColumnPath, Type};

pub use parquet::errors::ParquetError as Error;

/// Value `created_by` written into every footer, so output bytes do not depend
/// on the parquet crate version.
const CREATED_BY: &str = "zonetwin";

/// Reads only the footer (the Thrift `FileMetaData`) of a Parquet file.
pub fn read_footer<R: ChunkReader>(reader: &R) -> Result<ParquetMetaData, ParquetError> {
    ParquetMetaDataReader::new().parse_and_finish(reader)
}

pub fn read_footer_path(path: &Path) -> Result<ParquetMetaData, ParquetError> {
    let file = File::open(path)?;
    read_footer(&file)
}

/// Physical encodings accepted for the filter column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterType {
    /// INT32 annotated as DATE (days since the Unix epoch).
    Date32,
    Int32,
    Int64,
}

impl FilterType {
    /// Narrowest type able to hold every value in `[lower, upper]`; dates when
    /// the range fits in 32 bits.
    pub fn for_range(lower: i64, upper: i64) -> Self {
        if lower >= i32::MIN as i64 && upper <= i32::MAX as i64 {
            FilterType::Date32
        } else {
            FilterType::Int64
        }
    }

    fn schema_field(self, name: &str) -> Type {
        let builder = match self {
            FilterType::Date32 => {
                Type::primitive_type_builder(name, PhysicalType::INT32).with_logical_type(Some(LogicalType::Date))
            }
            FilterType::Int32 => Type::primitive_type_builder(name, PhysicalType::INT32),
            FilterType::Int64 => Type::primitive_type_builder(name, PhysicalType::INT64),
        };
        builder
            .with_repetition(Repetition::REQUIRED)
            .build()
            .expect("valid primitive type")
    }
}

/// Locates `name` among the leaf columns; returns its index and physical type.
pub fn find_column(meta: &ParquetMetaData, name: &str) -> Option<(usize, PhysicalType)> {
    let schema = meta.file_metadata().schema_descr();
    (0..schema.num_columns())
        .map(|i| (i, schema.column(i)))
        .find(|(_, c)| c.name() == name || c.path().string() == name)
        .map(|(i, c)| (i, c.physical_type()))
}

/// Decodes the filter column of every row group, widening to `i64`.
///
/// Returns `Ok(None)` when the column's physical type is not INT32/INT64.
pub fn read_int_column(path: &Path, column: usize) -> Result<Option<Vec<Vec<i64>>>, ParquetError> {
    let reader = SerializedFileReader::new(File::open(path)?)?;
    let mut out = Vec::with_capacity(reader.num_row_groups());
    for rg in 0..reader.num_row_groups() {
        let rg_reader = reader.get_row_group(rg)?;
        let rows = rg_reader.metadata().num_rows() as usize;
        let values = match rg_reader.get_column_reader(column)? {
            ColumnReader::Int32ColumnReader(mut r) => {
                let mut buf: Vec<i32> = Vec::with_capacity(rows);
                drain(rows, |n| r.read_records(n, None, None, &mut buf).map(|t| t.0))?;
                buf.into_iter().map(i64::from).collect()
            }
            ColumnReader::Int64ColumnReader(mut r) => {
                let mut buf: Vec<i64> = Vec::with_capacity(rows);
                drain(rows, |n| r.read_records(n, None, None, &mut buf).map(|t| t.0))?;
                buf
            }
            _ => return Ok(None),
        };
        out.push(values);
    }
    Ok(Some(out))
}

fn drain(rows: usize, mut step: impl FnMut(usize) -> Result<usize, ParquetError>) -> Result<(), ParquetError> {
    let mut remaining = rows;
    while remaining > 0 {
        let got = step(remaining)?;
        if got == 0 {
            return Err(ParquetError::EOF(format!("{remaining} records missing")));
        }
        remaining -= got;
    }
    Ok(())
}

/// One column chunk's worth of values.
#[derive(Debug, Clone)]
pub enum ColumnData {
    Int32(Vec<i32>),
    Int64(Vec<i64>),
    Double(Vec<f64>),
    Bytes(Vec<ByteArray>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Int32(v) => v.len(),
            ColumnData::Int64(v) => v.len(),
            ColumnData::Double(v) => v.len(),
            ColumnData::Bytes(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Filter values encoded for `ty`. Values must already fit the type.
    pub fn filter(values: &[i64], ty: FilterType) -> Self {
        match ty {
            FilterType::Date32 | FilterType::Int32 => ColumnData::Int32(values.iter().map(|&v| v as i32).collect()),
            FilterType::Int64 => ColumnData::Int64(values.to_vec()),
        }
    }
}

/// Column declaration for [`TableWriter`].
#[derive(Debug, Clone)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Filter(FilterType),
    Int32,
    Int64,
    Double,
    Utf8,
    /// Incompressible padding: plain encoded, no dictionary, no statistics.
    Padding,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }

    fn schema_field(&self) -> Type {
        let physical = match self.kind {
            ColumnKind::Filter(ty) => return ty.schema_field(&self.name),
            ColumnKind::Int32 => PhysicalType::INT32,
            ColumnKind::Int64 => PhysicalType::INT64,
            ColumnKind::Double => PhysicalType::DOUBLE,
            ColumnKind::Utf8 | ColumnKind::Padding => PhysicalType::BYTE_ARRAY,
        };
        let mut builder = Type::primitive_type_builder(&self.name, physical).with_repetition(Repetition::REQUIRED);
        if self.kind == ColumnKind::Utf8 {
            builder = builder.with_logical_type(Some(LogicalType::String));
        }
        builder.build().expect("valid primitive type")
    }
}

/// Compression codec names as carried in sketches.
pub fn compression_name(c: Compression) -> String {
    match c {
        Compression::UNCOMPRESSED => "UNCOMPRESSED".into(),
        Compression::SNAPPY => "SNAPPY".into(),
        Compression::GZIP(_) => "GZIP".into(),
        Compression::LZO => "LZO".into(),
        Compression::BROTLI(_) => "BROTLI".into(),
        Compression::LZ4 => "LZ4".into(),
        Compression::ZSTD(_) => "ZSTD".into(),
        Compression::LZ4_RAW => "LZ4_RAW".into(),
    }
}

/// Codecs this crate can write (the `zstd` feature is the only one enabled).
pub fn writable_compression(name: &str) -> Option<Compression> {
    match name {
        "ZSTD" => Some(Compression::ZSTD(ZstdLevel::default())),
        "UNCOMPRESSED" => Some(Compression::UNCOMPRESSED),
        _ => None,
    }
}

/// Writes row groups one at a time; each call to [`TableWriter::write_row_group`]
/// produces exactly one row group with exactly the given rows.
pub struct TableWriter<W: Write + Send> {
    inner: SerializedFileWriter<W>,
    columns: Vec<ColumnSpec>,
}

impl<W: Write + Send> TableWriter<W> {
    pub fn new(sink: W, columns: Vec<ColumnSpec>, compression: Compression) -> Result<Self, ParquetError> {
        let fields = columns.iter().map(|c| Arc::new(c.schema_field())).collect::<Vec<_>>();
        let schema = Type::group_type_builder("schema").with_fields(fields).build()?;

        let mut props = WriterProperties::builder()
            .set_compression(compression)
            .set_created_by(CREATED_BY.to_string())
            .set_max_row_group_row_count(None)
            .set_statistics_enabled(EnabledStatistics::Chunk);
        for c in &columns {
            if c.kind == ColumnKind::Padding {
                let path = ColumnPath::from(c.name.as_str());
                props = props
                    .set_column_dictionary_enabled(path.clone(), false)
                    .set_column_statistics_enabled(path, EnabledStatistics::None);
            }
        }
        let inner = SerializedFileWriter::new(sink, Arc::new(schema), Arc::new(props.build()))?;
        Ok(Self { inner, columns })
    }

    pub fn write_row_group(&mut self, data: &[ColumnData]) -> Result<(), ParquetError> {
        if data.len() != self.columns.len() {
            return Err(ParquetError::General(format!(
                "expected {} columns, got {}",
                self.columns.len(),
                data.len()
            )));
        }
        let mut rg = self.inner.next_row_group()?;
        for col in data {
            let mut w = rg
                .next_column()?
                .ok_or_else(|| ParquetError::General("schema exhausted".into()))?;
            match col {
                ColumnData::Int32(v) => {
                    w.typed::<Int32Type>().write_batch(v, None, None)?;
                }
                ColumnData::Int64(v) => {
                    w.typed::<Int64Type>().write_batch(v, None, None)?;
                }
                ColumnData::Double(v) => {
                    w.typed::<DoubleType>().write_batch(v, None, None)?;
                }
                ColumnData::Bytes(v) => {
                    w.typed::<ByteArrayType>().write_batch(v, None, None)?;
                }
            }
            w.close()?;
        }
        rg.close()?;
        Ok(())
    }

    pub fn finish(self) -> Result<W, ParquetError> {
        self.inner.into_inner()
    }
}

/// Per-row-group compressed sizes (sum over column chunks) of an in-memory file.
pub fn row_group_sizes(buf: &Bytes) -> Result<Vec<u64>, ParquetError> {
    let meta = read_footer(buf)?;
    Ok(meta.row_groups().iter().map(|rg| rg.compressed_size() as u64).collect())
}

/// A [`ChunkReader`] over a file that records every byte range requested.
pub struct RecordingReader {
    file: File,
    len: u64,
    reads: Mutex<Vec<(u64, u64)>>,
}

impl RecordingReader {
    pub fn open(path: &Path) -> std::io::Result<Self> {
        let file = File::open(path)?;
        let len = file.metadata()?.len();
        Ok(Self {
            file,
            len,
            reads: Mutex::new(Vec::new()),
        })
    }

    /// Requested `(start, end)` ranges, end exclusive.
    pub fn ranges(&self) -> Vec<(u64, u64)> {
        self.reads.lock().expect("poisoned").clone()
    }
}

impl Length for RecordingReader {
    fn len(&self) -> u64 {
        self.len
    }
}

impl ChunkReader for RecordingReader {
    type T = <File as ChunkReader>::T;

    fn get_read(&self, start: u64) -> Result<Self::T, ParquetError> {
        self.reads.lock().expect("poisoned").push((start, self.len));
        self.file.get_read(start)
    }

    fn get_bytes(&self, start: u64, length: usize) -> Result<Bytes, ParquetError> {
        self.reads
            .lock()
            .expect("poisoned")
            .push((start, start + length as u64));
        self.file.get_bytes(start, length)
    }
}
