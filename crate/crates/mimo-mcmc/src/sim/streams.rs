//! Counter-derived random substreams.
//!
//! Every consumer of randomness in an experiment gets its own ChaCha
//! stream addressed by `(snr index, trial index, role)`. Streams never
//! depend on scheduling order, which is what makes parallel runs
//! bit-reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Channel matrix draws.
pub const ROLE_CHANNEL: u64 = 0;
/// Transmitted bit draws.
pub const ROLE_BITS: u64 = 1;
/// Additive noise draws.
pub const ROLE_NOISE: u64 = 2;
/// First detector role; detector `i` uses `ROLE_DETECTOR_BASE + i`.
pub const ROLE_DETECTOR_BASE: u64 = 8;

/// Packs the stream address into the 64-bit ChaCha stream id.
///
/// Layout: bits 0..8 hold the role, bits 8..48 the trial index and bits
/// 48..64 the SNR grid index.
pub fn stream_id(snr_idx: usize, trial: usize, role: u64) -> u64 {
    debug_assert!(role < 1 << 8);
    debug_assert!((trial as u64) < 1 << 40);
    debug_assert!((snr_idx as u64) < 1 << 16);
    role | ((trial as u64) << 8) | ((snr_idx as u64) << 48)
}

/// Returns the generator for one `(snr, trial, role)` cell.
pub fn substream(master_seed: u64, snr_idx: usize, trial: usize, role: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id(snr_idx, trial, role));
    rng
}
