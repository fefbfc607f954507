//! Synthetic workloads shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sentences of `len` words drawn from a Zipf(1) distribution over
/// `vocab` words named `w0`, `w1`, ….
pub fn zipf_corpus(sentences: usize, len: usize, vocab: usize, seed: u64) -> Vec<String> {
    let weights: Vec<f64> = (1..=vocab).map(|r| 1.0 / r as f64).collect();
    let total: f64 = weights.iter().sum();
    let mut cdf = Vec::with_capacity(vocab);
    let mut acc = 0.0;
    for w in weights {
        acc += w / total;
        cdf.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..sentences)
        .map(|_| {
            (0..len)
                .map(|_| {
                    let u: f64 = rng.random();
                    let rank = cdf.partition_point(|&c| c < u).min(vocab - 1);
                    format!("w{rank}")
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}
