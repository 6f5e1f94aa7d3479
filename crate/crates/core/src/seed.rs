//! Per-trial random streams.
//!
//! Trial `t` of an experiment with master seed `s` uses a ChaCha8 generator
//! keyed by the 32 bytes `s.to_le_bytes() ++ [0u8; 24]`, with stream id `t`
//! and word position 0. The stream for a trial depends only on `(s, t)`, so
//! results do not depend on scheduling or on the number of workers.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Human-readable form of the derivation, echoed into every report.
pub const SEED_RULE: &str = "ChaCha8 (rand_chacha 0.9); key = master_seed as u64 little-endian \
     followed by 24 zero bytes; stream = trial index; word position = 0";

pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}
