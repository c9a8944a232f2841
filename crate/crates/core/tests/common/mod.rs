#![allow(dead_code)]

use std::path::{Path, PathBuf};

use parquet::basic::{Compression, ZstdLevel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zonetwin::pq::{ColumnData, ColumnKind, ColumnSpec, FilterType, TableWriter};

pub use tempfile::TempDir;

pub fn tempdir() -> TempDir {
    tempfile::tempdir().expect("temp dir")
}

/// Writes one INT64 filter column `k` plus `payload` random INT64 columns,
/// one row group per entry of `groups`.
pub fn write_groups(path: &Path, groups: &[Vec<i64>], payload: usize, seed: u64) {
    let mut columns = vec![ColumnSpec::new("k", ColumnKind::Filter(FilterType::Int64))];
    columns.extend((0..payload).map(|j| ColumnSpec::new(format!("p{j}"), ColumnKind::Int64)));
    let file = std::fs::File::create(path).unwrap();
    let mut w = TableWriter::new(file, columns, Compression::ZSTD(ZstdLevel::default())).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for g in groups {
        let mut data = vec![ColumnData::Int64(g.clone())];
        data.extend((0..payload).map(|_| ColumnData::Int64((0..g.len()).map(|_| rng.random()).collect())));
        w.write_row_group(&data).unwrap();
    }
    w.finish().unwrap();
}

/// Sorted values `0..n` split into groups of `per`.
pub fn consecutive(n: i64, per: usize) -> Vec<Vec<i64>> {
    (0..n).collect::<Vec<_>>().chunks(per).map(|c| c.to_vec()).collect()
}

pub fn path_in(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

/// Outcome of the binned ε-DP ratio check.
#[derive(Debug, Clone, Copy)]
pub struct RatioCheck {
    /// Largest `p(bin|q) − e^ε·p(bin|q′) − 3σ` over bins and both directions.
    pub worst_excess: f64,
    pub out_of_bounds: usize,
}

impl RatioCheck {
    pub fn passed(&self) -> bool {
        self.worst_excess <= 0.0 && self.out_of_bounds == 0
    }
}

/// Draws `n` samples of the bounded Laplace mechanism at `q` and at
/// `q + delta` with the fixed-point scale for budget `eps`, bins them and
/// checks `p(b|q) ≤ e^ε p(b|q′)` both ways with 3σ multinomial slack.
/// σ is evaluated at the null boundary `max(y, x / e^ε)`.
#[allow(clippy::too_many_arguments)]
pub fn dp_ratio_check(
    eps: f64,
    delta: f64,
    lower: f64,
    upper: f64,
    q: f64,
    n: usize,
    bins: usize,
    seed: u64,
) -> RatioCheck {
    let scale = zonetwin::dp::fixed_point_scale(delta, upper - lower, eps).unwrap();
    ratio_check_at_scale(scale, eps, delta, lower, upper, q, n, bins, seed)
}

#[allow(clippy::too_many_arguments)]
pub fn ratio_check_at_scale(
    scale: f64,
    eps: f64,
    delta: f64,
    lower: f64,
    upper: f64,
    q: f64,
    n: usize,
    bins: usize,
    seed: u64,
) -> RatioCheck {
    use rand::distr::Distribution;
    use zonetwin::dp::BoundedLaplace;

    let mut out_of_bounds = 0;
    let mut hist = |center: f64, s: u64| {
        let mech = BoundedLaplace::new(center, scale, lower, upper).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let mut counts = vec![0u64; bins];
        for _ in 0..n {
            let x = mech.sample(&mut rng);
            if !(lower..=upper).contains(&x) {
                out_of_bounds += 1;
                continue;
            }
            let b = (((x - lower) / (upper - lower)) * bins as f64) as usize;
            counts[b.min(bins - 1)] += 1;
        }
        counts.into_iter().map(|c| c as f64 / n as f64).collect::<Vec<_>>()
    };
    let p = hist(q, seed);
    let p2 = hist(q + delta, seed.wrapping_add(1));
    let e = eps.exp();
    let mut worst = f64::NEG_INFINITY;
    for (a, b) in [(&p, &p2), (&p2, &p)] {
        for (&x, &y) in a.iter().zip(b.iter()) {
            // Variance evaluated at the null boundary x = e^ε·y.
            let y0 = y.max(x / e);
            let sigma = ((x * (1.0 - x) + e * e * y0 * (1.0 - y0)) / n as f64).sqrt();
            worst = worst.max(x - e * y - 3.0 * sigma);
        }
    }
    RatioCheck {
        worst_excess: worst,
        out_of_bounds,
    }
}

/// Scan decision from decoded filter rows and byte totals from raw chunk
/// metadata, without going through the zone map.
pub fn brute_force_scan(path: &Path, column: &str, cutoff: i64) -> (Vec<usize>, u64) {
    use parquet::file::reader::{FileReader, SerializedFileReader};
    let groups = zonetwin::sketch::read_filter_values(path, column).unwrap();
    let meta = SerializedFileReader::new(std::fs::File::open(path).unwrap()).unwrap();
    let mut scanned = Vec::new();
    let mut bytes = 0;
    for (i, (g, rg)) in groups.iter().zip(meta.metadata().row_groups()).enumerate() {
        if g.iter().any(|&v| v <= cutoff) {
            scanned.push(i);
            bytes += rg.columns().iter().map(|c| c.compressed_size() as u64).sum::<u64>();
        }
    }
    (scanned, bytes)
}

/// Random sorted files with at most 20 row groups, for zone-map oracle runs.
pub fn random_sorted_groups(rng: &mut ChaCha8Rng) -> Vec<Vec<i64>> {
    let k = rng.random_range(1..=20);
    let per = rng.random_range(1..=300);
    let mut v = rng.random_range(-500..500);
    (0..k)
        .map(|_| {
            (0..per)
                .map(|_| {
                    v += rng.random_range(0..4);
                    v
                })
                .collect()
        })
        .collect()
}
