//! Deterministic substream derivation.
//!
//! Every stochastic routine in this crate receives its randomness through
//! a stream derived from `(base_seed, index)` by [`substream`]. The mixing
//! function is SplitMix64 applied to `base_seed + index * GOLDEN_GAMMA`,
//! chained to fill a 256-bit ChaCha key. Because a trial's stream depends
//! only on the pair `(base_seed, index)`, parallel and serial execution
//! orders produce bit-identical per-trial draws.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Weyl increment from SplitMix64.
const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the RNG stream for trial/flight `index` of run `base_seed`.
pub fn substream(base_seed: u64, index: u64) -> ChaCha8Rng {
    let mut state = base_seed.wrapping_add(index.wrapping_mul(GOLDEN_GAMMA));
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Derive a nested stream, e.g. a per-channel stream within a flight.
pub fn substream2(base_seed: u64, outer: u64, inner: u64) -> ChaCha8Rng {
    let mixed = splitmix64(base_seed.wrapping_add(outer.wrapping_mul(GOLDEN_GAMMA)));
    substream(mixed, inner)
}
