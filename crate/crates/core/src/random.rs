//! Seeded random sources. Every stochastic routine takes an explicit seed and
//! builds its own generator, so results depend only on (inputs, seed).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes a base seed with a stream of labels into an independent child seed
/// (splitmix64 finalizer per step).
pub fn derive_seed(base: u64, labels: &[u64]) -> u64 {
    let mut state = base;
    for &label in labels {
        state = splitmix(state ^ splitmix(label.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    splitmix(state)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
