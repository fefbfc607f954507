//! Target subsampling and negative sampling distributions.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

/// Default number of entries in the negative table.
pub const DEFAULT_TABLE_SIZE: usize = 10_000_000;

/// Probability `q_p(w) = min{1, √(t/f) + t/f}` that a token is kept as a
/// prediction target.
pub fn keep_probability(freq: f64, t: f64) -> Result<f64> {
    if !(freq > 0.0 && freq <= 1.0) {
        return Err(Error::Domain(format!("frequency {freq} not in (0, 1]")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("subsampling threshold {t} must be > 0")));
    }
    let ratio = t / freq;
    Ok((ratio.sqrt() + ratio).min(1.0))
}

/// Keep probabilities for every vocabulary id.
pub fn keep_probabilities(vocab: &Vocabulary, t: f64) -> Result<Vec<f32>> {
    (0..vocab.len() as u32)
        .map(|id| keep_probability(vocab.frequency(id), t).map(|p| p as f32))
        .collect()
}

/// Bernoulli gate deciding whether a token becomes a target.
#[inline]
pub fn keep_token<R: Rng + ?Sized>(keep_prob: f32, rng: &mut R) -> bool {
    rng.random::<f32>() < keep_prob
}

/// Negative-sampling distribution `q_n(w) ∝ √f_w`.
///
/// Since `f_w` is proportional to the count, the normalizer cancels and the
/// square roots of raw counts can be used directly.
pub fn negative_probabilities(counts: &[u64]) -> Result<Vec<f64>> {
    if counts.is_empty() {
        return Err(Error::Domain("empty vocabulary".into()));
    }
    if counts.contains(&0) {
        return Err(Error::Domain("counts must be positive".into()));
    }
    let roots: Vec<f64> = counts.iter().map(|&c| (c as f64).sqrt()).collect();
    let total: f64 = roots.iter().sum();
    Ok(roots.into_iter().map(|r| r / total).collect())
}

/// Flat table of word ids whose multiplicities realize `q_n`, so that a
/// uniform index draw is a draw from `q_n`.
#[derive(Clone, Debug)]
pub struct NegativeTable {
    entries: Vec<u32>,
    // Set when the table holds a single distinct id.
    single: Option<u32>,
}

impl NegativeTable {
    /// Builds the table over words with count ≥ `min_target_count`. Each
    /// eligible word receives `max(1, round(q_n(w) · table_size))` slots; the
    /// table is then shuffled with `seed`.
    pub fn build(
        vocab: &Vocabulary,
        table_size: usize,
        min_target_count: u64,
        seed: u64,
    ) -> Result<Self> {
        let eligible: Vec<(u32, u64)> = vocab
            .counts()
            .enumerate()
            .filter(|&(_, c)| c >= min_target_count)
            .map(|(id, c)| (id as u32, c))
            .collect();
        if eligible.is_empty() {
            return Err(Error::NoEligibleWords);
        }
        if table_size < eligible.len() {
            return Err(Error::Domain(format!(
                "table size {table_size} smaller than {} eligible words",
                eligible.len()
            )));
        }
        let counts: Vec<u64> = eligible.iter().map(|&(_, c)| c).collect();
        let probs = negative_probabilities(&counts)?;

        let mut entries = Vec::with_capacity(table_size + eligible.len());
        for (&(id, _), p) in eligible.iter().zip(probs) {
            let slots = ((p * table_size as f64).round() as usize).max(1);
            entries.extend(std::iter::repeat_n(id, slots));
        }
        entries.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

        let single = (eligible.len() == 1).then_some(eligible[0].0);
        Ok(NegativeTable { entries, single })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    /// Occurrences of `id` in the table.
    pub fn multiplicity(&self, id: u32) -> usize {
        self.entries.iter().filter(|&&e| e == id).count()
    }

    /// Appends `count` draws different from `target` to `out`. Duplicates are
    /// allowed; draws equal to the target are rejected and redrawn.
    pub fn sample_into<R: Rng + ?Sized>(
        &self,
        target: u32,
        count: usize,
        rng: &mut R,
        out: &mut Vec<u32>,
    ) -> Result<()> {
        if self.single == Some(target) {
            return Err(Error::OnlyTarget(target));
        }
        let n = self.entries.len();
        out.reserve(count);
        for _ in 0..count {
            loop {
                let id = self.entries[rng.random_range(0..n)];
                if id != target {
                    out.push(id);
                    break;
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, target: u32, count: usize, rng: &mut R) -> Result<Vec<u32>> {
        let mut out = Vec::with_capacity(count);
        self.sample_into(target, count, rng, &mut out)?;
        Ok(out)
    }

    /// Table from explicit entries, mostly for tests.
    pub fn from_entries(entries: Vec<u32>) -> Result<Self> {
        let first = *entries.first().ok_or(Error::NoEligibleWords)?;
        let single = entries.iter().all(|&e| e == first).then_some(first);
        Ok(NegativeTable { entries, single })
    }
}
