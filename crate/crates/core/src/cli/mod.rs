//! Command-line surface. Stages exchange files only: Parquet, sketch JSON,
//! noisy-sketch JSON and report CSV/JSON.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::dp::{release_sketch, Epsilon, NoisySketch, ReleaseParams};
use crate::evalsim::{default_selectivities, FidelityReport, Original, SeedReport};
use crate::sketch::{extract_sketch, Domain, Sketch};
use crate::synth::{
    generate_baseline, generate_dataset, synthesize, BaselineInput, BaselineKind, DatasetSpec, Profile, WriteOutcome,
};

pub mod config;
pub mod sweep;

pub use config::ExperimentConfig;
pub use sweep::run_sweep;

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "ZONETWIN_OUT";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}
data_error!(
    std::io::Error,
    serde_json::Error,
    crate::sketch::SketchError,
    crate::dp::DpError,
    crate::synth::SynthError,
    crate::evalsim::EvalError
);

pub fn default_output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("zonetwin_out"))
}

#[derive(Debug, Parser)]
#[command(
    name = "zonetwin",
    version,
    about = "Privacy-preserving zone-map twins of Parquet files"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a sorted stand-in dataset.
    Gen(GenArgs),
    /// Extract the footer sketch of a Parquet file.
    Sketch(SketchArgs),
    /// Release a differentially private sketch.
    Release(ReleaseArgs),
    /// Write a synthetic file from a released sketch, or a baseline.
    Synth(SynthArgs),
    /// Compare a synthetic file's pruning with the original's.
    Eval(EvalArgs),
    /// Run a full ε × m × seed × baseline grid from a config file.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub profile: Profile,
    #[arg(long)]
    pub rows: u64,
    #[arg(long = "rg", visible_alias = "rows-per-group")]
    pub rows_per_group: u64,
    #[arg(long, value_name = "LO:HI")]
    pub domain: Option<Domain>,
    #[arg(long)]
    pub skew: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Defaults to `<output root>/<profile>.parquet`.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SketchArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long = "filter-col")]
    pub filter_col: String,
    /// Prints to stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReleaseArgs {
    /// Sketch JSON.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub epsilon: Epsilon,
    #[arg(long)]
    pub m: u64,
    #[arg(long, value_name = "LO:HI")]
    pub domain: Domain,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Prints to stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Noisy-sketch JSON, or the original Parquet file with `--baseline`.
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to `<output root>/synthetic.parquet`.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub baseline: Option<BaselineKind>,
    /// Filter column of the original (baselines only).
    #[arg(long = "filter-col")]
    pub filter_col: Option<String>,
    /// Public domain of the original (baselines only).
    #[arg(long, value_name = "LO:HI")]
    pub domain: Option<Domain>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Original Parquet file.
    #[arg(long)]
    pub input: PathBuf,
    /// Synthetic Parquet file(s), one per seed.
    #[arg(long, required = true, num_args = 1..)]
    pub synthetic: Vec<PathBuf>,
    #[arg(long = "filter-col")]
    pub filter_col: String,
    #[arg(long, value_name = "LO:HI")]
    pub domain: Option<Domain>,
    /// Seed labels matching `--synthetic`; 0, 1, … when absent.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    /// Comma-separated selectivities; 20 log-spaced points on [0.001, 0.95] when absent.
    #[arg(long, value_delimiter = ',')]
    pub selectivities: Vec<f64>,
    /// Report directory; defaults to `<output root>/eval`.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `output_dir`.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    pub epsilon: Vec<Epsilon>,
    #[arg(long, value_delimiter = ',')]
    pub m: Vec<config::MSpec>,
    #[arg(long, value_delimiter = ',')]
    pub baseline: Vec<BaselineKind>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

fn write_text(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, format!("{text}\n"))?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}")?;
        }
    }
    Ok(())
}

fn ensure_parent(p: &Path) -> Result<(), CliError> {
    if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn report_outcome(outcome: &WriteOutcome) {
    eprintln!(
        "wrote {} ({} row groups, {} passes, max size error {:.3}%)",
        outcome.path.display(),
        outcome.achieved.len(),
        outcome.passes,
        100.0 * outcome.max_relative_error()
    );
    for s in &outcome.shortfalls {
        eprintln!(
            "warning: row group {} target {} B is below its filter-only size {} B",
            s.row_group, s.target, s.base
        );
    }
}

pub fn cmd_gen(a: &GenArgs) -> Result<(), CliError> {
    let mut spec = DatasetSpec::new(a.profile, a.rows, a.rows_per_group);
    if let Some(d) = a.domain {
        spec.domain = d;
    }
    spec.skew = a.skew;
    spec.seed = a.seed;
    let out = a
        .output
        .clone()
        .unwrap_or_else(|| default_output_root().join(format!("{}.parquet", a.profile)));
    ensure_parent(&out)?;
    let info = generate_dataset(&spec, &out)?;
    eprintln!(
        "wrote {} ({} rows, {} row groups, max multiplicity {})",
        out.display(),
        info.n_rows,
        info.num_row_groups,
        info.max_multiplicity
    );
    Ok(())
}

pub fn cmd_sketch(a: &SketchArgs) -> Result<(), CliError> {
    let sketch = extract_sketch(&a.input, &a.filter_col)?;
    write_text(a.output.as_deref(), &sketch.to_json()?)
}

pub fn cmd_release(a: &ReleaseArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&a.input)?;
    let sketch = Sketch::from_json(&text)?;
    let noisy = release_sketch(
        &sketch,
        &ReleaseParams {
            epsilon: a.epsilon,
            max_multiplicity: a.m,
            domain: a.domain,
            rng_seed: a.seed,
        },
    )?;
    write_text(a.output.as_deref(), &noisy.to_json()?)
}

pub fn cmd_synth(a: &SynthArgs) -> Result<(), CliError> {
    let out = a
        .output
        .clone()
        .unwrap_or_else(|| default_output_root().join("synthetic.parquet"));
    ensure_parent(&out)?;
    let outcome = match a.baseline {
        None => {
            let noisy = NoisySketch::load(&a.input)?;
            synthesize(&noisy, &out, a.seed)?
        }
        Some(kind) => {
            let col = a
                .filter_col
                .as_deref()
                .ok_or_else(|| CliError::Usage("--baseline needs --filter-col".into()))?;
            let original = Original::load(&a.input, col, a.domain, &[1.0])?;
            let input = BaselineInput {
                sketch: &original.sketch,
                domain: original.domain,
                values: Some(&original.values),
            };
            generate_baseline(kind, &input, &out, a.seed)?
        }
    };
    report_outcome(&outcome);
    Ok(())
}

pub fn cmd_eval(a: &EvalArgs) -> Result<(), CliError> {
    let selectivities = if a.selectivities.is_empty() {
        default_selectivities()
    } else {
        a.selectivities.clone()
    };
    let seeds: Vec<u64> = if a.seeds.is_empty() {
        (0..a.synthetic.len() as u64).collect()
    } else if a.seeds.len() == a.synthetic.len() {
        a.seeds.clone()
    } else {
        return Err(CliError::Usage("--seeds must match --synthetic in length".into()));
    };
    let original = Original::load(&a.input, &a.filter_col, a.domain, &selectivities)?;
    let reports = a
        .synthetic
        .iter()
        .zip(&seeds)
        .map(|(p, &seed)| {
            Ok(SeedReport {
                seed,
                report: original.evaluate(p)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let report = FidelityReport::from_seeds(reports)?;
    let dir = a.output.clone().unwrap_or_else(|| default_output_root().join("eval"));
    std::fs::create_dir_all(&dir)?;
    report.save_csv(&dir.join("queries.csv"))?;
    report.save_summary(&dir.join("summary.json"))?;
    let s = &report.summary;
    println!(
        "MAPE-RG {:.3}% ± {:.3}  MAPE-Bytes {:.3}% ± {:.3}",
        s.mape_rg.mean, s.mape_rg.std, s.mape_bytes.mean, s.mape_bytes.std
    );
    Ok(())
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<(), CliError> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(o) = &a.output {
        cfg.output_dir = o.clone();
    }
    if !a.seeds.is_empty() {
        cfg.seeds = a.seeds.clone();
    }
    if !a.epsilon.is_empty() {
        cfg.epsilons = a.epsilon.clone();
    }
    if !a.m.is_empty() {
        cfg.ms = a.m.clone();
    }
    if !a.baseline.is_empty() {
        cfg.baselines = a.baseline.clone();
    }
    if a.jobs.is_some() {
        cfg.jobs = a.jobs;
    }
    let cfg = cfg.resolve()?;
    let results = run_sweep(&cfg)?;
    for r in &results {
        println!(
            "{:<12} {:<14} eps={:<6} m={:<6} MAPE-RG {:>9.3}% ± {:<8.3} MAPE-Bytes {:>8.3}%",
            r.dataset,
            r.method,
            r.epsilon,
            r.m,
            r.summary.mape_rg.mean,
            r.summary.mape_rg.std,
            r.summary.mape_bytes.mean
        );
    }
    eprintln!("reports in {}", cfg.output_dir.display());
    Ok(())
}

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Sketch(a) => cmd_sketch(a),
        Command::Release(a) => cmd_release(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
