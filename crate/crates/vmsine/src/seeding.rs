//! Deterministic seed derivation.
//!
//! Every stochastic routine in this crate takes an explicit 64-bit seed and
//! derives sub-seeds by counter, never by scheduling order, so results are
//! reproducible bit-for-bit across runs and thread counts.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Seed used by commands and configs when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 42;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the sub-seed for stream `index` of a master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut state = master ^ 0x6a09_e667_f3bc_c908u64.wrapping_mul(index.wrapping_add(1));
    let a = splitmix64(&mut state);
    splitmix64(&mut state) ^ a.rotate_left(17)
}

/// Builds a ChaCha12 generator from a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> ChaCha12Rng {
    let mut state = seed;
    let mut bytes = [0u8; 32];
    for chunk in bytes.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(bytes)
}
