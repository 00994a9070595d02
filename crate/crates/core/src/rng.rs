use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) type Rng = ChaCha8Rng;

pub(crate) fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream seed for sub-task `index` of a seeded job.
pub(crate) fn derive(seed: u64, index: u64) -> u64 {
    seed.wrapping_add(index)
}
