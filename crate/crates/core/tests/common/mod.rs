//! Synthetic corpora shared by the integration tests.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Cumulative Zipf distribution with exponent `s` over `n` ranks.
pub struct Zipf {
    cdf: Vec<f64>,
}

impl Zipf {
    pub fn new(n: usize, s: f64) -> Self {
        let weights: Vec<f64> = (1..=n).map(|r| (r as f64).powf(-s)).collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let cdf = weights
            .into_iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        Zipf { cdf }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c < u).min(self.cdf.len() - 1)
    }
}

/// `count` sentences of `len` Zipf(1) words over a `vocab`-word lexicon.
pub fn zipf_sentences(count: usize, len: usize, vocab: usize, seed: u64) -> Vec<String> {
    let zipf = Zipf::new(vocab, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..len)
                .map(|_| format!("w{}", zipf.sample(&mut rng)))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

/// Sentences of 8–15 words, each drawn uniformly from one of two disjoint
/// 500-word lexicons (`a0…a499`, `b0…b499`). Returns `(sentence, topic)`.
pub fn two_topic_sentences(count: usize, seed: u64) -> Vec<(String, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let topic = i % 2;
            let prefix = if topic == 0 { 'a' } else { 'b' };
            let len = rng.random_range(8..=15);
            let words: Vec<String> = (0..len)
                .map(|_| format!("{prefix}{}", rng.random_range(0..500)))
                .collect();
            (words.join(" "), topic)
        })
        .collect()
}

/// Roughly `bytes` of text whose word statistics resemble natural prose.
/// Each sentence picks a topic; its words mix Zipfian function words, Zipfian
/// words of that topic, and Zipfian topic-independent general vocabulary.
pub fn prose_like_text(bytes: usize, seed: u64) -> Vec<String> {
    const FUNCTION_WORDS: usize = 300;
    const TOPICS: usize = 100;
    const TOPIC_WORDS: usize = 200;
    const GENERAL_WORDS: usize = 5_000;

    let function = Zipf::new(FUNCTION_WORDS, 1.1);
    let topical = Zipf::new(TOPIC_WORDS, 1.0);
    let general = Zipf::new(GENERAL_WORDS, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = Vec::new();
    let mut written = 0;
    while written < bytes {
        let topic = rng.random_range(0..TOPICS);
        let len = rng.random_range(6..=28);
        let mut words = Vec::with_capacity(len);
        for _ in 0..len {
            let u: f64 = rng.random();
            let word = if u < 0.45 {
                format!("f{}", function.sample(&mut rng))
            } else if u < 0.80 {
                format!("t{topic}x{}", topical.sample(&mut rng))
            } else {
                format!("g{}", general.sample(&mut rng))
            };
            words.push(word);
        }
        let line = words.join(" ");
        written += line.len() + 1;
        lines.push(line);
    }
    lines
}
