//! Deterministic random streams derived from a master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent ChaCha stream `stream` of the master `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Split `total` draws into `chunks` nearly equal parts; chunk `k` uses stream `k`.
pub fn chunk_sizes(total: u64, chunks: u64) -> Vec<u64> {
    (0..chunks)
        .map(|k| total / chunks + u64::from(k < total % chunks))
        .collect()
}
