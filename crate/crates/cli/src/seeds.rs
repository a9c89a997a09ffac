use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Master seed of each sweep point: the first `n` outputs of a ChaCha8 stream
/// keyed by the run's master seed. Point `k` keeps its seed when points are
/// appended to the sweep.
pub fn point_seeds(master_seed: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    (0..n).map(|_| rng.random()).collect()
}
