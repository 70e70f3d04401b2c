//! Seed derivation.
//!
//! All randomness descends from one 64-bit master seed. Replicate `i` of an
//! experiment draws from `stream(master, i)`, a ChaCha8 generator whose
//! 32-byte key is four consecutive SplitMix64 outputs started from
//! `master ^ splitmix64_mix(i + GOLDEN)`. Independent sub-experiments get
//! their own master via [`sub_seed`]. Nothing here depends on thread count
//! or wall-clock time.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every simulation stream.
pub type SimRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn splitmix64_next(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    splitmix64_mix(*state)
}

/// 32-byte ChaCha key for replicate `index` under `master`.
pub fn stream_key(master: u64, index: u64) -> [u8; 32] {
    let mut state = master ^ splitmix64_mix(index.wrapping_add(GOLDEN));
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64_next(&mut state).to_le_bytes());
    }
    key
}

pub fn stream(master: u64, index: u64) -> SimRng {
    ChaCha8Rng::from_seed(stream_key(master, index))
}

/// Master seed for a labelled sub-experiment.
pub fn sub_seed(master: u64, label: u64) -> u64 {
    let mut state = master ^ splitmix64_mix(label ^ 0xD1B5_4A32_D192_ED03);
    splitmix64_next(&mut state)
}
