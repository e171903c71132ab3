//! Deterministic derivation of per-trial random streams.
//!
//! Every Monte Carlo trial owns an independent ChaCha8 stream derived from
//! (master_seed, stream_id, trial_index). The derivation is a fixed splitmix64
//! chain, so results are reproducible bit for bit regardless of how trials are
//! scheduled across threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a tag (sample size, phase id) into a master seed so different
/// phases of one experiment never share trial streams.
pub fn mix_seed(master: u64, tag: u64) -> u64 {
    let mut state = master ^ tag.wrapping_mul(0xD1B5_4A32_D192_ED03);
    splitmix64(&mut state)
}

/// RNG for one (stream, trial) cell under a master seed.
///
/// stream_id separates independent consumers (grid states, grid directions,
/// tail-bound checks) so adding trials to one never shifts another.
pub fn trial_rng(master_seed: u64, stream_id: u64, trial_index: u64) -> ChaCha8Rng {
    let mut state = master_seed;
    let a = splitmix64(&mut state);
    state ^= stream_id.wrapping_mul(0xA076_1D64_78BD_642F);
    let b = splitmix64(&mut state);
    state ^= trial_index.wrapping_mul(0xE703_7ED1_A0B4_28DB);
    let c = splitmix64(&mut state);
    let d = splitmix64(&mut state);

    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&a.to_le_bytes());
    seed[8..16].copy_from_slice(&b.to_le_bytes());
    seed[16..24].copy_from_slice(&c.to_le_bytes());
    seed[24..32].copy_from_slice(&d.to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}
