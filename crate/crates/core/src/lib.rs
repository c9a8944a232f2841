pub mod cli;
pub mod dp;
pub mod evalsim;
pub mod pq;
pub mod rng;
pub mod sketch;
pub mod synth;
