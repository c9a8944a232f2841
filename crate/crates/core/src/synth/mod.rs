//! Synthetic file generation: filter values inside released intervals,
//! calibrated padding, comparison baselines and stand-in originals.

use std::path::PathBuf;

use parquet::errors::ParquetError;
use thiserror::Error;

use crate::dp::DpError;
use crate::sketch::SketchError;

pub mod baseline;
pub mod dataset;
pub mod filter;
pub mod writer;

pub use baseline::{generate_baseline, BaselineInput, BaselineKind};
pub use dataset::{generate_dataset, DatasetInfo, DatasetSpec, Profile};
pub use filter::{fill_interval, generate_filter_column};
pub use writer::{calibrate_and_write, synthesize, Shortfall, SynthPlan, WriteOutcome};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("cannot write {path}: {source}")]
    WriteFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parquet: {0}")]
    Parquet(#[from] ParquetError),
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("codec {0} cannot be written (supported: ZSTD, UNCOMPRESSED)")]
    UnsupportedCodec(String),
    #[error("unknown baseline {0:?}")]
    UnknownBaseline(String),
    #[error("unknown profile {0:?} (expected tpch-like, ssb-like or uniform)")]
    InvalidProfile(String),
    #[error("the marginal baseline needs the original filter values")]
    MissingValues,
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
}
