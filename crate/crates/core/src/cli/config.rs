//! Sweep configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dp::Epsilon;
use crate::evalsim::{default_selectivities, log_grid, DEFAULT_SEEDS};
use crate::sketch::Domain;
use crate::synth::dataset::DEFAULT_DOMAIN;
use crate::synth::{BaselineKind, Profile};

use super::CliError;

/// Either a file on disk or a generated stand-in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter_column: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Profile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows_per_group: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_domain")]
    pub domain: Option<Domain>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skew: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Multiplicity bound: a number, the dataset's exact maximum, or the domain width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MSpec {
    Value(u64),
    Actual,
    Width,
}

impl MSpec {
    pub fn resolve(&self, actual: u64, domain: &Domain) -> u64 {
        match self {
            MSpec::Value(m) => *m,
            MSpec::Actual => actual.max(1),
            MSpec::Width => domain.width().max(1) as u64,
        }
    }
}

impl std::str::FromStr for MSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "actual" => Ok(MSpec::Actual),
            "width" => Ok(MSpec::Width),
            other => match other.parse::<u64>() {
                Ok(m) if m > 0 => Ok(MSpec::Value(m)),
                _ => Err(CliError::Usage(format!("invalid m {s:?}"))),
            },
        }
    }
}

impl Serialize for MSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            MSpec::Value(m) => s.serialize_u64(*m),
            MSpec::Actual => s.serialize_str("actual"),
            MSpec::Width => s.serialize_str("width"),
        }
    }
}

impl<'de> Deserialize<'de> for MSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(m) => format!("{m}").parse(),
            Raw::Text(t) => t.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// Selectivities as an explicit list or a log-spaced grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Selectivities {
    List(Vec<f64>),
    Grid { lo: f64, hi: f64, n: usize },
}

impl Selectivities {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Selectivities::List(v) => v.clone(),
            Selectivities::Grid { lo, hi, n } => log_grid(*lo, *hi, *n),
        }
    }
}

impl Default for Selectivities {
    fn default() -> Self {
        Selectivities::List(default_selectivities())
    }
}

fn default_epsilons() -> Vec<Epsilon> {
    [1.0, 5.0, 50.0]
        .into_iter()
        .map(Epsilon::Finite)
        .chain([Epsilon::Infinite])
        .collect()
}

fn default_ms() -> Vec<MSpec> {
    vec![MSpec::Actual]
}

fn default_seeds() -> Vec<u64> {
    DEFAULT_SEEDS.to_vec()
}

fn default_baselines() -> Vec<BaselineKind> {
    BaselineKind::ALL.to_vec()
}

fn default_output() -> PathBuf {
    super::default_output_root().join("sweep")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetConfig>,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<Epsilon>,
    #[serde(default = "default_ms")]
    pub ms: Vec<MSpec>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub selectivities: Selectivities,
    #[serde(default = "default_baselines")]
    pub baselines: Vec<BaselineKind>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub keep_files: bool,
    /// Worker threads; all cores when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("invalid config {}: {e}", path.display())))
    }

    /// Fills dataset defaults and checks grids.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        let bad = |m: String| Err(CliError::Data(m));
        if self.datasets.is_empty() {
            return bad("config lists no datasets".into());
        }
        if self.seeds.is_empty() {
            return bad("config lists no seeds".into());
        }
        if self.epsilons.is_empty() && self.baselines.is_empty() {
            return bad("config has neither epsilons nor baselines".into());
        }
        if self.epsilons.iter().any(|e| !e.is_infinite()) && self.ms.is_empty() {
            return bad("finite epsilons need at least one m".into());
        }
        let sel = self.selectivities.values();
        if sel.is_empty() || sel.iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
            return bad("selectivities must be non-empty and lie in (0, 1]".into());
        }
        let mut names = std::collections::BTreeSet::new();
        for d in &mut self.datasets {
            if !names.insert(d.name.clone()) {
                return bad(format!("duplicate dataset name {:?}", d.name));
            }
            match (&d.path, d.profile) {
                (Some(_), None) => {
                    if d.filter_column.is_none() {
                        return bad(format!("dataset {:?} needs filter_column", d.name));
                    }
                }
                (None, Some(p)) => {
                    d.rows.get_or_insert(500_000);
                    d.rows_per_group.get_or_insert(10_000);
                    d.domain.get_or_insert(DEFAULT_DOMAIN);
                    d.skew.get_or_insert(p.default_skew());
                    d.seed.get_or_insert(0);
                    d.filter_column.get_or_insert_with(|| p.filter_column().to_string());
                }
                _ => return bad(format!("dataset {:?} needs exactly one of path or profile", d.name)),
            }
        }
        Ok(self)
    }
}

mod opt_domain {
    use super::Domain;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Option<Domain>, s: S) -> Result<S::Ok, S::Error> {
        match d {
            Some(d) => s.serialize_str(&d.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Domain>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| s.parse().map_err(serde::de::Error::custom))
            .transpose()
    }
}
