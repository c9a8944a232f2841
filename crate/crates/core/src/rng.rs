//! Seed-derived random streams. Every consumer of randomness gets its own
//! ChaCha stream keyed by a purpose tag and an index, so the draws of one
//! stage never shift when another stage changes how much it consumes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum Purpose {
    Release = 0,
    FilterValues = 1,
    Padding = 2,
    Baseline = 3,
    Dataset = 4,
}

pub fn substream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 40) | (index & ((1 << 40) - 1)));
    rng
}
