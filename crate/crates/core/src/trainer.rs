//! Training orchestration.
//!
//! The corpus is read twice: once to count the vocabulary and once to encode
//! every sentence as in-vocabulary ids, which are kept in memory (4 bytes per
//! token). Each epoch splits the sentences into fixed-size shards whose order
//! is shuffled with the run seed; worker `i` of `T` processes shards
//! `i, i+T, i+2T, …` of that order. Workers share the parameter matrices
//! without locks.

use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::TrainConfig;
use crate::corpus::{extract_ngrams, open_corpus, tokenize, SentenceIndices, Sentences, VocabBuilder, Vocabulary};
use crate::error::{Error, Result};
use crate::hogwild::Hogwild;
use crate::io::save_model;
use crate::model::{apply_l1_after_step, lr_schedule, ngram_dropout, train_step, EmbeddingMatrices, Step, StepWorkspace};
use crate::sampling::{keep_probabilities, keep_token, NegativeTable};

const SHARD_SENTENCES: usize = 1024;
const PROGRESS_FLUSH: u64 = 64;
const LOSS_FLUSH: u64 = 1024;

/// A trained sentence embedding model.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub vocab: Vocabulary,
    pub matrices: EmbeddingMatrices<f32>,
    /// Longest n-gram order used for features.
    pub word_ngrams: usize,
    /// Subsampling threshold the model was trained with.
    pub subsample: f64,
    /// Lowercase input before lookup. Not persisted in the model file.
    pub lowercase: bool,
}

impl Model {
    pub fn dim(&self) -> usize {
        self.matrices.dim()
    }

    pub fn buckets(&self) -> u32 {
        self.matrices.buckets() as u32
    }

    /// Features of a sentence: in-vocabulary unigrams plus hashed n-grams
    /// over the in-vocabulary token sequence.
    pub fn sentence_indices(&self, text: &str) -> SentenceIndices {
        let ids = self.vocab.encode(&tokenize(text, self.lowercase));
        let n = if self.buckets() > 0 { self.word_ngrams } else { 1 };
        extract_ngrams(&ids, n, self.vocab.len(), self.buckets())
    }
}

/// Sentences of a corpus encoded as vocabulary ids.
#[derive(Clone, Debug)]
pub struct TrainingCorpus {
    vocab: Vocabulary,
    tokens: Vec<u32>,
    offsets: Vec<usize>,
    scanned_tokens: u64,
}

impl TrainingCorpus {
    /// Reads a corpus file (optionally gzip-compressed) in two streaming
    /// passes.
    pub fn from_path(path: impl AsRef<Path>, lowercase: bool, min_count: u64, min_target_count: u64) -> Result<Self> {
        let path = path.as_ref();
        let mut builder = VocabBuilder::new();
        for sentence in Sentences::new(open_corpus(path)?, lowercase) {
            builder.add_sentence(&sentence?);
        }
        let scanned = builder.scanned_tokens();
        let vocab = builder.build(min_count, min_target_count)?;
        let mut corpus = TrainingCorpus::empty(vocab, scanned);
        for sentence in Sentences::new(open_corpus(path)?, lowercase) {
            corpus.push(&sentence?);
        }
        Ok(corpus)
    }

    /// Builds a corpus from in-memory lines, one sentence each.
    pub fn from_lines<S: AsRef<str>>(lines: &[S], lowercase: bool, min_count: u64, min_target_count: u64) -> Result<Self> {
        let mut builder = VocabBuilder::new();
        for line in lines {
            builder.add_sentence(&tokenize(line.as_ref(), lowercase));
        }
        let scanned = builder.scanned_tokens();
        let vocab = builder.build(min_count, min_target_count)?;
        let mut corpus = TrainingCorpus::empty(vocab, scanned);
        for line in lines {
            corpus.push(&tokenize(line.as_ref(), lowercase));
        }
        Ok(corpus)
    }

    fn empty(vocab: Vocabulary, scanned_tokens: u64) -> Self {
        TrainingCorpus {
            vocab,
            tokens: Vec::new(),
            offsets: vec![0],
            scanned_tokens,
        }
    }

    fn push<S: AsRef<str>>(&mut self, tokens: &[S]) {
        self.tokens.extend(tokens.iter().filter_map(|t| self.vocab.id(t.as_ref())));
        self.offsets.push(self.tokens.len());
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// In-vocabulary ids of sentence `i`.
    pub fn sentence(&self, i: usize) -> &[u32] {
        &self.tokens[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Tokens read, including those of discarded rare words.
    pub fn scanned_tokens(&self) -> u64 {
        self.scanned_tokens
    }

    /// Expected number of targets in one epoch: eligible tokens of sentences
    /// with at least two tokens, weighted by their keep probability.
    pub fn expected_targets(&self, keep: &[f32]) -> f64 {
        (0..self.len())
            .map(|i| self.sentence(i))
            .filter(|s| s.len() >= 2)
            .flat_map(|s| s.iter())
            .filter(|&&id| self.vocab.is_target_eligible(id))
            .map(|&id| f64::from(keep[id as usize]))
            .sum()
    }
}

/// Mean loss over a window of consecutive targets.
#[derive(Clone, Debug, PartialEq)]
pub struct LossWindow {
    pub epoch: usize,
    pub targets: u64,
    pub mean_loss: f64,
}

/// Statistics of a training run.
#[derive(Clone, Debug, Default)]
pub struct TrainReport {
    /// Targets selected by subsampling, over all epochs.
    pub targets: u64,
    /// Steps skipped because the masked context was empty.
    pub skipped: u64,
    /// Expected targets over all epochs, used as the schedule's horizon.
    pub expected_targets: f64,
    pub loss_windows: Vec<LossWindow>,
    pub elapsed: Duration,
}

/// Result of [`train`].
#[derive(Debug)]
pub struct TrainOutput {
    pub model: Model,
    pub report: TrainReport,
}

struct LossMeter {
    window: u64,
    epoch: usize,
    sum: f64,
    count: u64,
    windows: Vec<LossWindow>,
}

impl LossMeter {
    fn add(&mut self, sum: f64, count: u64) {
        self.sum += sum;
        self.count += count;
        if self.count >= self.window {
            self.flush();
        }
    }

    fn flush(&mut self) {
        if self.count == 0 {
            return;
        }
        let mean_loss = self.sum / self.count as f64;
        info!(
            "epoch {} loss {:.6} over {} targets",
            self.epoch + 1,
            mean_loss,
            self.count
        );
        self.windows.push(LossWindow {
            epoch: self.epoch,
            targets: self.count,
            mean_loss,
        });
        self.sum = 0.0;
        self.count = 0;
    }
}

struct Shared<'a> {
    corpus: &'a TrainingCorpus,
    config: &'a TrainConfig,
    table: &'a NegativeTable,
    keep: &'a [f32],
    buckets: u32,
    total_expected: f64,
    progress: AtomicU64,
    // Set by a worker that hit a non-finite loss so the others stop early.
    abort: AtomicBool,
    meter: Mutex<LossMeter>,
}

#[derive(Default)]
struct WorkerStats {
    targets: u64,
    skipped: u64,
}

fn run_worker(
    shared: &Shared<'_>,
    mut matrices: Hogwild<EmbeddingMatrices<f32>>,
    shards: &[usize],
    rng: &mut ChaCha8Rng,
    epoch: usize,
) -> Result<WorkerStats> {
    let config = shared.config;
    let corpus = shared.corpus;
    let vocab = corpus.vocab();
    let mut ws = StepWorkspace::new(config.dim);
    let mut negatives = Vec::with_capacity(config.negatives);
    let mut stats = WorkerStats::default();
    let mut pending = 0u64;
    let (mut loss_sum, mut loss_count) = (0.0, 0u64);

    for &shard in shards {
        let start = shard * SHARD_SENTENCES;
        let end = (start + SHARD_SENTENCES).min(corpus.len());
        for sid in start..end {
            if shared.abort.load(Ordering::Relaxed) {
                return Err(Error::Diverged { epoch: epoch + 1 });
            }
            let ids = corpus.sentence(sid);
            if ids.len() < 2 {
                continue;
            }
            let base = extract_ngrams(ids, config.word_ngrams, vocab.len(), shared.buckets);
            for (pos, &word) in ids.iter().enumerate() {
                if !vocab.is_target_eligible(word) || !keep_token(shared.keep[word as usize], rng) {
                    continue;
                }
                let dropped;
                let sentence = if config.dropout_k > 0 && !base.ngram_ids.is_empty() {
                    dropped = ngram_dropout(&base, config.dropout_k, rng);
                    &dropped
                } else {
                    &base
                };
                negatives.clear();
                shared.table.sample_into(word, config.negatives, rng, &mut negatives)?;

                let done = shared.progress.load(Ordering::Relaxed) + pending;
                let lr = lr_schedule(config.lr, done as f64 / shared.total_expected);
                let mats = matrices.get_mut();
                match train_step(mats, sentence, pos, &negatives, lr as f32, &mut ws)? {
                    Step::Trained(outcome) => {
                        if !outcome.loss.is_finite() {
                            shared.abort.store(true, Ordering::Relaxed);
                            return Err(Error::Diverged { epoch: epoch + 1 });
                        }
                        apply_l1_after_step(mats, &outcome, config.l1_tau, lr);
                        loss_sum += outcome.loss;
                        loss_count += 1;
                    }
                    Step::Skipped => stats.skipped += 1,
                }
                stats.targets += 1;
                pending += 1;
                if pending == PROGRESS_FLUSH {
                    shared.progress.fetch_add(pending, Ordering::Relaxed);
                    pending = 0;
                }
                if loss_count == LOSS_FLUSH {
                    shared.meter.lock().unwrap().add(loss_sum, loss_count);
                    (loss_sum, loss_count) = (0.0, 0);
                }
            }
        }
    }
    shared.progress.fetch_add(pending, Ordering::Relaxed);
    shared.meter.lock().unwrap().add(loss_sum, loss_count);
    Ok(stats)
}

/// Trains a model on an encoded corpus.
pub fn train_corpus(corpus: &TrainingCorpus, config: &TrainConfig) -> Result<TrainOutput> {
    config.validate()?;
    let started = Instant::now();
    let vocab = corpus.vocab();
    if vocab.eligible_targets() < 2 {
        return Err(Error::NoEligibleWords);
    }
    let buckets = config.effective_buckets();
    if vocab.len() as u64 + u64::from(buckets) > u64::from(u32::MAX) {
        return Err(Error::InvalidConfig("vocabulary plus buckets exceeds 32-bit row ids".into()));
    }

    let table = NegativeTable::build(vocab, config.negative_table_size.max(vocab.eligible_targets()), config.min_target_count, config.seed)?;
    let keep = keep_probabilities(vocab, config.subsample)?;
    let per_epoch = corpus.expected_targets(&keep);
    if per_epoch <= 0.0 {
        return Err(Error::InvalidConfig("corpus has no sentence with two or more known tokens".into()));
    }
    let total_expected = per_epoch * config.epochs as f64;
    info!(
        "vocabulary {} words ({} eligible targets), {} tokens, {} sentences, ~{:.0} targets per epoch",
        vocab.len(),
        vocab.eligible_targets(),
        vocab.total_tokens(),
        corpus.len(),
        per_epoch
    );

    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let matrices = Hogwild::new(EmbeddingMatrices::random(vocab.len(), buckets as usize, config.dim, &mut init_rng));

    let mut order_rng = ChaCha8Rng::seed_from_u64(config.seed);
    order_rng.set_stream(u64::MAX);
    let mut worker_rngs: Vec<ChaCha8Rng> = (0..config.threads)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64 + 1);
            rng
        })
        .collect();

    let shared = Shared {
        corpus,
        config,
        table: &table,
        keep: &keep,
        buckets,
        total_expected,
        progress: AtomicU64::new(0),
        abort: AtomicBool::new(false),
        meter: Mutex::new(LossMeter {
            window: config.report_every,
            epoch: 0,
            sum: 0.0,
            count: 0,
            windows: Vec::new(),
        }),
    };

    let num_shards = corpus.len().div_ceil(SHARD_SENTENCES);
    let mut report = TrainReport {
        expected_targets: total_expected,
        ..Default::default()
    };
    for epoch in 0..config.epochs {
        shared.meter.lock().unwrap().epoch = epoch;
        let mut order: Vec<usize> = (0..num_shards).collect();
        order.shuffle(&mut order_rng);
        let assignments: Vec<Vec<usize>> = (0..config.threads)
            .map(|w| order.iter().skip(w).step_by(config.threads).copied().collect())
            .collect();

        let results: Vec<Result<WorkerStats>> = thread::scope(|scope| {
            let handles: Vec<_> = worker_rngs
                .iter_mut()
                .zip(&assignments)
                .map(|(rng, shards)| {
                    let matrices = matrices.clone();
                    let shared = &shared;
                    scope.spawn(move || run_worker(shared, matrices, shards, rng, epoch))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("training worker panicked")).collect()
        });
        for stats in results {
            let stats = stats?;
            report.targets += stats.targets;
            report.skipped += stats.skipped;
        }
        shared.meter.lock().unwrap().flush();
        if !matrices.get().all_finite() {
            return Err(Error::Diverged { epoch: epoch + 1 });
        }

        if let Some(path) = &config.checkpoint {
            let model = Model {
                vocab: vocab.clone(),
                matrices: matrices.get().clone(),
                word_ngrams: config.word_ngrams,
                subsample: config.subsample,
                lowercase: config.lowercase,
            };
            save_model(&model, path)?;
            info!("checkpoint after epoch {} written to {}", epoch + 1, path.display());
        }
    }

    report.loss_windows = shared.meter.into_inner().unwrap().windows;
    report.elapsed = started.elapsed();
    let matrices = matrices.into_inner().expect("workers still hold the matrices");
    Ok(TrainOutput {
        model: Model {
            vocab: vocab.clone(),
            matrices,
            word_ngrams: config.word_ngrams,
            subsample: config.subsample,
            lowercase: config.lowercase,
        },
        report,
    })
}

/// Builds the vocabulary from a corpus file and trains on it.
pub fn train(corpus_path: impl AsRef<Path>, config: &TrainConfig) -> Result<TrainOutput> {
    config.validate()?;
    let corpus = TrainingCorpus::from_path(corpus_path, config.lowercase, config.min_count, config.min_target_count)?;
    train_corpus(&corpus, config)
}
