//! Differentially private release of a [`Sketch`].
//!
//! Row-group ranges are re-expressed as `K + 1` boundaries whose two outer
//! points are the public domain limits, so only the `K − 1` interior points
//! carry information. Row groups partition the rows, so each one gets the
//! full budget; inside a row group the boundary and the compressed size each
//! get `ε / 2`. Interior boundaries are noised with a bounded Laplace
//! mechanism on the domain, sizes with Laplace truncated to `[0, ∞)`, and the
//! noisy boundaries are sorted afterwards.

pub mod laplace;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use laplace::{bounded_laplace_sample, fixed_point_scale, BoundedLaplace};

use crate::rng::{substream, Purpose};
use crate::sketch::{Domain, Sketch};

#[derive(Debug, Error)]
pub enum DpError {
    #[error("privacy budget must be positive, got {0}")]
    InvalidBudget(f64),
    #[error("sensitivity must be positive, got {0}")]
    InvalidSensitivity(f64),
    #[error("noise scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("value {value} outside [{lower}, {upper}]")]
    OutOfBounds { value: f64, lower: f64, upper: f64 },
    #[error("noise scale search did not converge after {steps} steps")]
    NonConvergence { steps: usize },
    #[error("max multiplicity must be at least 1")]
    InvalidMultiplicity,
    #[error("row group {row_group} value {value} outside domain {domain}")]
    DomainViolation {
        row_group: usize,
        value: i64,
        domain: Domain,
    },
    #[error("invalid noisy sketch: {0}")]
    Invalid(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Privacy budget; `Infinite` releases the sketch unchanged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Epsilon {
    Finite(f64),
    Infinite,
}

impl Epsilon {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Epsilon::Infinite)
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Epsilon::Finite(e) => *e,
            Epsilon::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Epsilon::Finite(e) => write!(f, "{e}"),
            Epsilon::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Epsilon {
    type Err = DpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Epsilon::Infinite),
            other => {
                let e: f64 = other.parse().map_err(|_| DpError::InvalidBudget(f64::NAN))?;
                if e == f64::INFINITY {
                    Ok(Epsilon::Infinite)
                } else if e > 0.0 {
                    Ok(Epsilon::Finite(e))
                } else {
                    Err(DpError::InvalidBudget(e))
                }
            }
        }
    }
}

impl Serialize for Epsilon {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Epsilon::Finite(e) => s.serialize_f64(*e),
            Epsilon::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Epsilon {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(e) if e > 0.0 => Ok(if e.is_infinite() {
                Epsilon::Infinite
            } else {
                Epsilon::Finite(e)
            }),
            Raw::Num(e) => Err(serde::de::Error::custom(format!("epsilon must be > 0, got {e}"))),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReleaseParams {
    pub epsilon: Epsilon,
    #[serde(rename = "m")]
    pub max_multiplicity: u64,
    pub domain: Domain,
    #[serde(rename = "seed")]
    pub rng_seed: u64,
}

impl ReleaseParams {
    pub fn validate(&self) -> Result<(), DpError> {
        if let Epsilon::Finite(e) = self.epsilon {
            if e.is_nan() || e <= 0.0 {
                return Err(DpError::InvalidBudget(e));
            }
        }
        if self.max_multiplicity < 1 {
            return Err(DpError::InvalidMultiplicity);
        }
        Ok(())
    }
}

/// `β₀ ≤ β₁ ≤ … ≤ β_K`, with `β₀ = d_L` and `β_K = d_U`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BoundarySet {
    pub betas: Vec<i64>,
}

impl BoundarySet {
    pub fn num_row_groups(&self) -> usize {
        self.betas.len().saturating_sub(1)
    }

    pub fn interiors(&self) -> &[i64] {
        let k = self.betas.len();
        if k <= 2 {
            &[]
        } else {
            &self.betas[1..k - 1]
        }
    }

    /// `[β_{i-1}, β_i]` for row group `i` (0-based).
    pub fn interval(&self, rg: usize) -> (i64, i64) {
        (self.betas[rg], self.betas[rg + 1])
    }

    pub fn validate(&self, domain: &Domain) -> Result<(), DpError> {
        let invalid = |m: &str| Err(DpError::Invalid(m.to_string()));
        if self.betas.len() < 2 {
            return invalid("fewer than two boundaries");
        }
        if self.betas[0] != domain.lower || *self.betas.last().unwrap() != domain.upper {
            return invalid("outer boundaries must equal the domain limits");
        }
        if self.betas.windows(2).any(|w| w[0] > w[1]) {
            return invalid("boundaries are not non-decreasing");
        }
        Ok(())
    }
}

/// Maps row-group ranges to boundaries: `β_i = max_i` for the interior and
/// the domain limits at both ends. The last row group's max is dropped.
pub fn to_boundaries(sketch: &Sketch, domain: &Domain) -> Result<BoundarySet, DpError> {
    for rg in &sketch.row_groups {
        for value in [rg.min_val, rg.max_val] {
            if !domain.contains(value) {
                return Err(DpError::DomainViolation {
                    row_group: rg.index,
                    value,
                    domain: *domain,
                });
            }
        }
    }
    let k = sketch.row_groups.len();
    let mut betas = Vec::with_capacity(k + 1);
    betas.push(domain.lower);
    betas.extend(sketch.row_groups[..k.saturating_sub(1)].iter().map(|rg| rg.max_val));
    betas.push(domain.upper);
    Ok(BoundarySet { betas })
}

/// `min(m, d_U − d_L)`.
pub fn sensitivity_boundary(m: u64, domain: &Domain) -> u64 {
    m.min(domain.width() as u64)
}

/// The public artifact: noisy boundaries and sizes plus everything needed to
/// rebuild a file with the same layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisySketch {
    pub betas: BoundarySet,
    #[serde(rename = "sizes")]
    pub noisy_sizes: Vec<u64>,
    pub rows_per_group: u64,
    pub row_counts: Vec<u64>,
    pub column_count: usize,
    pub codec: String,
    pub filter_column: String,
    #[serde(flatten)]
    pub params: ReleaseParams,
    #[serde(rename = "b_star")]
    pub noise_scale_beta: f64,
    #[serde(rename = "b_size")]
    pub noise_scale_size: f64,
}

impl NoisySketch {
    pub fn num_row_groups(&self) -> usize {
        self.noisy_sizes.len()
    }

    pub fn total_rows(&self) -> u64 {
        self.row_counts.iter().sum()
    }

    pub fn domain(&self) -> Domain {
        self.params.domain
    }

    pub fn validate(&self) -> Result<(), DpError> {
        self.params.validate()?;
        self.betas.validate(&self.params.domain)?;
        let k = self.noisy_sizes.len();
        if k == 0 || self.betas.num_row_groups() != k || self.row_counts.len() != k {
            return Err(DpError::Invalid(format!(
                "{} boundaries, {} sizes and {} row counts do not describe the same row groups",
                self.betas.betas.len(),
                k,
                self.row_counts.len()
            )));
        }
        if self.row_counts.contains(&0) {
            return Err(DpError::Invalid("empty row group".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, DpError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, DpError> {
        let noisy: NoisySketch = serde_json::from_str(s)?;
        noisy.validate()?;
        Ok(noisy)
    }

    pub fn save(&self, path: &Path) -> Result<(), DpError> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, DpError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Releases `sketch` with randomness drawn from the seed in `params`.
pub fn release_sketch(sketch: &Sketch, params: &ReleaseParams) -> Result<NoisySketch, DpError> {
    let mut rng = substream(params.rng_seed, Purpose::Release, 0);
    release_with_rng(sketch, params, &mut rng)
}

/// Same as [`release_sketch`] with an explicit random source. Draws `K − 1`
/// boundary samples, then `K` size samples, one uniform each.
pub fn release_with_rng<R: Rng + ?Sized>(
    sketch: &Sketch,
    params: &ReleaseParams,
    rng: &mut R,
) -> Result<NoisySketch, DpError> {
    params.validate()?;
    let domain = params.domain;
    let exact = to_boundaries(sketch, &domain)?;
    let true_sizes: Vec<u64> = sketch.row_groups.iter().map(|rg| rg.compressed_size).collect();

    let mut noisy = NoisySketch {
        betas: exact.clone(),
        noisy_sizes: true_sizes.clone(),
        rows_per_group: sketch.rows_per_group,
        row_counts: sketch.row_counts(),
        column_count: sketch.column_count,
        codec: sketch.codec.clone(),
        filter_column: sketch.filter_column.clone(),
        params: *params,
        noise_scale_beta: 0.0,
        noise_scale_size: 0.0,
    };
    let Epsilon::Finite(epsilon) = params.epsilon else {
        return Ok(noisy);
    };

    let eps_beta = epsilon / 2.0;
    let eps_size = epsilon / 2.0;
    let delta_beta = sensitivity_boundary(params.max_multiplicity, &domain) as f64;
    let delta_size = sketch.uncompressed_row_size as f64;
    if delta_size.is_nan() || delta_size <= 0.0 {
        return Err(DpError::InvalidSensitivity(delta_size));
    }
    let b_star = fixed_point_scale(delta_beta, domain.width() as f64, eps_beta)?;
    let b_size = delta_size / eps_size;

    let (lo, hi) = (domain.lower as f64, domain.upper as f64);
    let mut interiors = exact
        .interiors()
        .iter()
        .map(|&beta| Ok(BoundedLaplace::new(beta as f64, b_star, lo, hi)?.sample(rng)))
        .collect::<Result<Vec<f64>, DpError>>()?;
    let sizes = true_sizes
        .iter()
        .map(|&s| Ok(BoundedLaplace::new(s as f64, b_size, 0.0, f64::INFINITY)?.sample(rng)))
        .collect::<Result<Vec<f64>, DpError>>()?;

    interiors.sort_by(f64::total_cmp);
    let mut betas = Vec::with_capacity(interiors.len() + 2);
    betas.push(domain.lower);
    betas.extend(
        interiors
            .iter()
            .map(|b| (b.round() as i64).clamp(domain.lower, domain.upper)),
    );
    betas.push(domain.upper);

    noisy.betas = BoundarySet { betas };
    noisy.noisy_sizes = sizes.iter().map(|s| s.round().max(0.0) as u64).collect();
    noisy.noise_scale_beta = b_star;
    noisy.noise_scale_size = b_size;
    Ok(noisy)
}
