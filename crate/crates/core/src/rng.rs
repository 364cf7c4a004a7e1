//! Reproducible random streams for parallel ensembles.
//!
//! Every run owns a counter-based ChaCha stream selected by
//! `(seed, run index)`, so an ensemble produces identical results no matter
//! how its runs are scheduled across workers. Within a run the detections
//! are inherently sequential and consume the run's stream in order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random stream owned by run `run_index` of an ensemble keyed by
/// `seed`.
pub fn run_stream(seed: u64, run_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run_index);
    rng
}
