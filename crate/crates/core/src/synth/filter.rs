use rand::Rng;

use crate::dp::NoisySketch;
use crate::rng::{substream, Purpose};

/// `n` integers uniform on `[lo, hi]`, sorted. With two or more rows the
/// interval endpoints are always present, so the written min/max statistics
/// are exactly `lo` and `hi`.
pub fn fill_interval<R: Rng + ?Sized>(lo: i64, hi: i64, n: usize, rng: &mut R) -> Vec<i64> {
    debug_assert!(lo <= hi);
    let mut values = Vec::with_capacity(n);
    match n {
        0 => {}
        1 => values.push(lo),
        _ => {
            values.push(lo);
            values.extend((0..n - 2).map(|_| rng.random_range(lo..=hi)));
            values.push(hi);
        }
    }
    values.sort_unstable();
    values
}

/// Filter column values for every row group of `noisy`, each drawn from its
/// own seed-derived stream.
pub fn generate_filter_column(noisy: &NoisySketch, seed: u64) -> Vec<Vec<i64>> {
    noisy
        .row_counts
        .iter()
        .enumerate()
        .map(|(i, &rows)| {
            let (lo, hi) = noisy.betas.interval(i);
            let mut rng = substream(seed, Purpose::FilterValues, i as u64);
            fill_interval(lo, hi, rows as usize, &mut rng)
        })
        .collect()
}
