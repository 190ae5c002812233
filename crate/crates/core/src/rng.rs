//! Seed derivation for independent random streams.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream domains, so that seeds derived for different purposes never collide.
pub mod domain {
    pub const TRIAL: u64 = 1;
    pub const RUN: u64 = 2;
    pub const GENERATED_LOG: u64 = 3;
    pub const CONFIG: u64 = 4;
}

/// Deterministic child seed: the first word of ChaCha8 stream `domain`
/// keyed by `master`, advanced to block `index`.
pub fn derive_seed(master: u64, domain: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(domain);
    rng.set_word_pos(u128::from(index) * 16);
    rng.next_u64()
}

/// The generator used for every stochastic step.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
