//! Grid runner: every dataset × (ε, m) × baseline, each over all seeds.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{DatasetConfig, ExperimentConfig};
use super::CliError;
use crate::dp::Epsilon;
use crate::evalsim::{multi_seed_run, FidelityReport, Method, Original, Stat, Summary, QUERY_CSV_HEADER};
use crate::synth::{generate_dataset, DatasetSpec};

#[derive(Debug, Clone, Serialize)]
pub struct CellResult {
    pub dataset: String,
    pub method: String,
    pub epsilon: String,
    pub m: String,
    pub summary: Summary,
    #[serde(skip)]
    pub report: FidelityReport,
}

struct Cell {
    dataset: usize,
    method: Method,
}

/// Generated datasets land in `<output_dir>/datasets/<name>.parquet`.
pub fn prepare_dataset(d: &DatasetConfig, output_dir: &Path) -> Result<(PathBuf, String), CliError> {
    if let Some(path) = &d.path {
        return Ok((path.clone(), d.filter_column.clone().expect("resolved")));
    }
    let profile = d.profile.expect("resolved");
    let spec = DatasetSpec {
        profile,
        n_rows: d.rows.expect("resolved"),
        rows_per_group: d.rows_per_group.expect("resolved"),
        domain: d.domain.expect("resolved"),
        skew: d.skew,
        seed: d.seed.expect("resolved"),
    };
    let dir = output_dir.join("datasets");
    fs::create_dir_all(&dir)?;
    let path = dir.join(format!("{}.parquet", d.name));
    let info = generate_dataset(&spec, &path)?;
    Ok((path, info.filter_column))
}

fn write_workload(original: &Original, path: &Path) -> Result<(), CliError> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "selectivity,band,cutoff,orig_rgs,orig_bytes")?;
    for (q, p) in original.workload.iter().zip(&original.profiles) {
        writeln!(
            f,
            "{:.6},{},{},{},{}",
            q.target_selectivity,
            crate::evalsim::Band::of(q.target_selectivity),
            q.cutoff,
            p.rgs_scanned,
            p.bytes_read
        )?;
    }
    f.flush()?;
    Ok(())
}

fn labels(method: &Method) -> (String, String, String) {
    match method {
        Method::Private {
            epsilon: Epsilon::Infinite,
            ..
        } => ("full".into(), "inf".into(), "na".into()),
        Method::Private { epsilon, m } => ("full".into(), epsilon.to_string(), m.to_string()),
        Method::Baseline { kind } => (kind.name().into(), "inf".into(), "na".into()),
    }
}

fn fmt_stat(s: Option<Stat>) -> String {
    match s {
        Some(s) => format!("{:.6},{:.6}", s.mean, s.std),
        None => ",".into(),
    }
}

pub const SUMMARY_CSV_HEADER: &str = "dataset,method,epsilon,m,seeds,mape_rg_mean,mape_rg_std,mape_bytes_mean,mape_bytes_std,low_rg_mean,low_rg_std,mid_rg_mean,mid_rg_std,high_rg_mean,high_rg_std";

/// Runs the resolved config and writes the report tree. Results come back in
/// a fixed order regardless of scheduling.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<CellResult>, CliError> {
    let out = &cfg.output_dir;
    fs::create_dir_all(out)?;
    fs::write(
        out.join("effective_config.json"),
        serde_json::to_string_pretty(cfg)? + "\n",
    )?;

    let selectivities = cfg.selectivities.values();
    let mut originals = Vec::new();
    for d in &cfg.datasets {
        let (path, column) = prepare_dataset(d, out)?;
        let original = Original::load(&path, &column, d.domain, &selectivities)?;
        fs::create_dir_all(out.join(&d.name))?;
        write_workload(&original, &out.join(&d.name).join("workload.csv"))?;
        originals.push(original);
    }

    let mut cells = Vec::new();
    for (i, original) in originals.iter().enumerate() {
        let actual = original.max_multiplicity();
        let mut methods: Vec<Method> = Vec::new();
        for &epsilon in &cfg.epsilons {
            if epsilon.is_infinite() {
                methods.push(Method::Private {
                    epsilon,
                    m: actual.max(1),
                });
            } else {
                for ms in &cfg.ms {
                    let m = ms.resolve(actual, &original.domain);
                    methods.push(Method::Private { epsilon, m });
                }
            }
        }
        methods.extend(cfg.baselines.iter().map(|&kind| Method::Baseline { kind }));
        let mut seen = std::collections::BTreeSet::new();
        for method in methods {
            if seen.insert(method.label()) {
                cells.push(Cell { dataset: i, method });
            }
        }
    }

    let run = || {
        cells
            .par_iter()
            .map(|cell| {
                let name = &cfg.datasets[cell.dataset].name;
                let dir = out.join(name).join(cell.method.label());
                let report = multi_seed_run(&originals[cell.dataset], &cell.method, &cfg.seeds, &dir, cfg.keep_files)?;
                report.save_csv(&dir.join("queries.csv"))?;
                report.save_summary(&dir.join("summary.json"))?;
                let (method, epsilon, m) = labels(&cell.method);
                Ok(CellResult {
                    dataset: name.clone(),
                    method,
                    epsilon,
                    m,
                    summary: report.summary,
                    report,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()
    };
    let results = match cfg.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| CliError::Data(e.to_string()))?
            .install(run)?,
        None => run()?,
    };

    let mut queries = std::io::BufWriter::new(fs::File::create(out.join("queries.csv"))?);
    writeln!(queries, "dataset,method,epsilon,m,{QUERY_CSV_HEADER}")?;
    let mut summary = std::io::BufWriter::new(fs::File::create(out.join("summary.csv"))?);
    writeln!(summary, "{SUMMARY_CSV_HEADER}")?;
    for r in &results {
        r.report
            .write_csv(&mut queries, false, &[&r.dataset, &r.method, &r.epsilon, &r.m])?;
        let s = &r.summary;
        writeln!(
            summary,
            "{},{},{},{},{},{},{},{},{},{}",
            r.dataset,
            r.method,
            r.epsilon,
            r.m,
            r.report.seeds.len(),
            fmt_stat(Some(s.mape_rg)),
            fmt_stat(Some(s.mape_bytes)),
            fmt_stat(s.band_rg.low),
            fmt_stat(s.band_rg.mid),
            fmt_stat(s.band_rg.high),
        )?;
    }
    queries.flush()?;
    summary.flush()?;
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&results)? + "\n")?;
    Ok(results)
}
