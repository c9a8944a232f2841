//! End-to-end runs: release, synthesize, re-read the synthetic footer and
//! compare its pruning against the original's.

use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    banded_report, make_workload, prune_all, BandedReport, EvalError, FidelityReport, PruneProfile, QuerySpec,
    SeedReport,
};
use crate::dp::{release_sketch, Epsilon, ReleaseParams};
use crate::sketch::{extract_sketch, read_filter_values, read_zone_map_path, Domain, Sketch};
use crate::synth::{generate_baseline, synthesize, BaselineInput, BaselineKind, DatasetInfo, WriteOutcome};

/// The original file with everything evaluation needs precomputed.
#[derive(Debug, Clone)]
pub struct Original {
    pub path: PathBuf,
    pub sketch: Sketch,
    pub domain: Domain,
    /// Filter values in file order.
    pub values: Vec<i64>,
    pub workload: Vec<QuerySpec>,
    pub profiles: Vec<PruneProfile>,
}

impl Original {
    /// Domain falls back to the dataset sidecar, then to the observed range.
    pub fn load(
        path: &Path,
        filter_column: &str,
        domain: Option<Domain>,
        selectivities: &[f64],
    ) -> Result<Self, EvalError> {
        let sketch = extract_sketch(path, filter_column)?;
        let domain = match domain {
            Some(d) => d,
            None => match DatasetInfo::load_sidecar(path) {
                Some(info) => info.domain,
                None => Domain::new(
                    sketch.row_groups.iter().map(|r| r.min_val).min().unwrap_or(0),
                    sketch.row_groups.iter().map(|r| r.max_val).max().unwrap_or(0),
                )?,
            },
        };
        let values: Vec<i64> = read_filter_values(path, filter_column)?.concat();
        let workload = make_workload(&values, selectivities)?;
        let profiles = prune_all(&sketch.row_groups, &workload);
        Ok(Self {
            path: path.to_path_buf(),
            sketch,
            domain,
            values,
            workload,
            profiles,
        })
    }

    /// Largest number of rows sharing one filter value.
    pub fn max_multiplicity(&self) -> u64 {
        crate::synth::dataset::max_run(&self.values)
    }

    /// Compares the footer of `synthetic` with the original on the workload.
    pub fn evaluate(&self, synthetic: &Path) -> Result<BandedReport, EvalError> {
        let layout = read_zone_map_path(synthetic, &self.sketch.filter_column)?;
        banded_report(&self.profiles, &prune_all(&layout, &self.workload), &self.workload)
    }
}

/// How the synthetic file is produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Method {
    /// Released sketch with the given budget and multiplicity bound.
    Private { epsilon: Epsilon, m: u64 },
    /// A comparison method at ε = ∞.
    Baseline { kind: BaselineKind },
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::Private {
                epsilon: Epsilon::Infinite,
                ..
            } => "full_eps-inf".into(),
            Method::Private { epsilon, m } => format!("full_eps-{epsilon}_m-{m}"),
            Method::Baseline { kind } => kind.name().into(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// One seed of `method`, writing the synthetic file to `out_path`.
pub fn run_seed(
    original: &Original,
    method: &Method,
    seed: u64,
    out_path: &Path,
) -> Result<(BandedReport, WriteOutcome), EvalError> {
    let outcome = match *method {
        Method::Private { epsilon, m } => {
            let noisy = release_sketch(
                &original.sketch,
                &ReleaseParams {
                    epsilon,
                    max_multiplicity: m,
                    domain: original.domain,
                    rng_seed: seed,
                },
            )?;
            synthesize(&noisy, out_path, seed)?
        }
        Method::Baseline { kind } => {
            let input = BaselineInput {
                sketch: &original.sketch,
                domain: original.domain,
                values: Some(&original.values),
            };
            generate_baseline(kind, &input, out_path, seed)?
        }
    };
    Ok((original.evaluate(out_path)?, outcome))
}

/// Runs every seed (in parallel) and aggregates. Synthetic files go to
/// `work_dir` and are removed unless `keep_files`.
pub fn multi_seed_run(
    original: &Original,
    method: &Method,
    seeds: &[u64],
    work_dir: &Path,
    keep_files: bool,
) -> Result<FidelityReport, EvalError> {
    if seeds.is_empty() {
        return Err(EvalError::NoSeeds);
    }
    std::fs::create_dir_all(work_dir)?;
    let reports = seeds
        .par_iter()
        .map(|&seed| {
            let path = work_dir.join(format!("{}_seed-{seed}.parquet", method.label()));
            let (report, _) = run_seed(original, method, seed, &path)?;
            if !keep_files {
                std::fs::remove_file(&path)?;
            }
            Ok(SeedReport { seed, report })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    FidelityReport::from_seeds(reports)
}
