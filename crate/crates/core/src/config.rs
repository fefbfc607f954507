use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sampling::DEFAULT_TABLE_SIZE;

/// L1 strength used by the published unigram+bigram configurations.
pub const PUBLISHED_L1_TAU: f64 = 0.0005;

/// Hyperparameters and engine settings for a training run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    /// Embedding dimension h.
    pub dim: usize,
    /// Words seen fewer times are dropped from the vocabulary.
    pub min_count: u64,
    /// Words seen fewer times are never predicted or sampled as negatives.
    pub min_target_count: u64,
    pub lr: f64,
    pub epochs: usize,
    /// Subsampling threshold t.
    pub subsample: f64,
    /// Longest n-gram order; 1 trains unigrams only.
    pub word_ngrams: usize,
    /// Hash buckets for n-grams of order ≥ 2.
    pub buckets: u32,
    /// N-grams dropped per sentence and target.
    pub dropout_k: usize,
    /// Negatives sampled per target.
    pub negatives: usize,
    /// L1 strength τ; 0 disables the proximal step.
    pub l1_tau: f64,
    pub threads: usize,
    pub seed: u64,
    pub lowercase: bool,
    pub negative_table_size: usize,
    /// Targets per loss-report window.
    pub report_every: u64,
    /// When set, the model is written here (atomically) after every epoch.
    pub checkpoint: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 100,
            min_count: 5,
            min_target_count: 5,
            lr: 0.2,
            epochs: 5,
            subsample: 1e-4,
            word_ngrams: 2,
            buckets: 2_000_000,
            dropout_k: 2,
            negatives: 10,
            l1_tau: 0.0,
            threads: default_threads(),
            seed: 0,
            lowercase: false,
            negative_table_size: DEFAULT_TABLE_SIZE,
            report_every: 1_000_000,
            checkpoint: None,
        }
    }
}

pub fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidConfig(msg.to_owned()));
        if self.dim < 1 {
            return fail("dim must be ≥ 1");
        }
        if self.epochs < 1 {
            return fail("epochs must be ≥ 1");
        }
        if self.word_ngrams < 1 {
            return fail("word_ngrams must be ≥ 1");
        }
        if self.negatives < 1 {
            return fail("negatives must be ≥ 1");
        }
        if !(self.l1_tau >= 0.0 && self.l1_tau.is_finite()) {
            return fail("l1 tau must be a finite value ≥ 0");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return fail("learning rate must be > 0");
        }
        if !(self.subsample > 0.0 && self.subsample.is_finite()) {
            return fail("subsampling threshold must be > 0");
        }
        if self.min_count < 1 || self.min_target_count < 1 {
            return fail("minimum counts must be ≥ 1");
        }
        if self.threads < 1 {
            return fail("threads must be ≥ 1");
        }
        if self.word_ngrams > 1 && self.buckets < 1 {
            return fail("buckets must be ≥ 1 when word_ngrams > 1");
        }
        if self.negative_table_size < 1 {
            return fail("negative table size must be ≥ 1");
        }
        if self.report_every < 1 {
            return fail("report interval must be ≥ 1");
        }
        Ok(())
    }

    /// Bucket rows actually allocated: none for unigram-only models.
    pub fn effective_buckets(&self) -> u32 {
        if self.word_ngrams > 1 {
            self.buckets
        } else {
            0
        }
    }
}

/// Published training configurations, one per corpus and feature set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    BooksUni,
    BooksBi,
    WikiUni,
    WikiBi,
    TwitterUni,
    TwitterBi,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::BooksUni,
        Preset::BooksBi,
        Preset::WikiUni,
        Preset::WikiBi,
        Preset::TwitterUni,
        Preset::TwitterBi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::BooksUni => "books-uni",
            Preset::BooksBi => "books-bi",
            Preset::WikiUni => "wiki-uni",
            Preset::WikiBi => "wiki-bi",
            Preset::TwitterUni => "twitter-uni",
            Preset::TwitterBi => "twitter-bi",
        }
    }

    /// Full configuration; settings the preset does not fix keep their
    /// defaults.
    pub fn config(self) -> TrainConfig {
        // (dim, min_count, min_target_count, epochs, t, dropped bigrams)
        let (dim, min_count, min_target_count, epochs, subsample, dropout) = match self {
            Preset::BooksUni => (700, 5, 8, 13, 1e-5, None),
            Preset::BooksBi => (700, 5, 5, 12, 5e-6, Some(7)),
            Preset::WikiUni => (600, 8, 20, 9, 1e-5, None),
            Preset::WikiBi => (700, 8, 20, 9, 5e-6, Some(4)),
            Preset::TwitterUni => (700, 20, 20, 3, 1e-6, None),
            Preset::TwitterBi => (700, 20, 20, 3, 1e-6, Some(3)),
        };
        let l1_tau = match self {
            Preset::BooksBi | Preset::WikiBi => PUBLISHED_L1_TAU,
            _ => 0.0,
        };
        TrainConfig {
            dim,
            min_count,
            min_target_count,
            lr: 0.2,
            epochs,
            subsample,
            word_ngrams: if dropout.is_some() { 2 } else { 1 },
            dropout_k: dropout.unwrap_or(0),
            negatives: 10,
            l1_tau,
            ..TrainConfig::default()
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown preset {s:?}")))
    }
}
