//! Parameter matrices and the per-target SGD step.
//!
//! The source matrix holds one row per vocabulary word followed by one row per
//! hash bucket; a sentence is the mean of the source rows of its features. The
//! target matrix holds one row per vocabulary word and is used to score the
//! word being predicted against that mean.

use num_traits::Float;
use rand::Rng;

use crate::corpus::SentenceIndices;
use crate::error::{Error, Result};

/// Source and target embedding matrices, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrices<T = f32> {
    source: Vec<T>,
    target: Vec<T>,
    dim: usize,
    vocab_len: usize,
    buckets: usize,
}

impl<T: Float> EmbeddingMatrices<T> {
    pub fn zeros(vocab_len: usize, buckets: usize, dim: usize) -> Self {
        assert!(dim >= 1, "embedding dimension must be ≥ 1");
        EmbeddingMatrices {
            source: vec![T::zero(); (vocab_len + buckets) * dim],
            target: vec![T::zero(); vocab_len * dim],
            dim,
            vocab_len,
            buckets,
        }
    }

    /// Source rows uniform in `[-1/(2h), 1/(2h)]`, target rows zero.
    pub fn random<R: Rng + ?Sized>(vocab_len: usize, buckets: usize, dim: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(vocab_len, buckets, dim);
        let bound = 0.5 / dim as f64;
        for x in &mut m.source {
            *x = T::from(rng.random_range(-bound..=bound)).unwrap();
        }
        m
    }

    /// Assembles matrices from raw row-major buffers.
    pub fn from_parts(
        source: Vec<T>,
        target: Vec<T>,
        dim: usize,
        vocab_len: usize,
        buckets: usize,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("embedding dimension must be ≥ 1".into()));
        }
        if source.len() != (vocab_len + buckets) * dim {
            return Err(Error::DimensionMismatch {
                left: source.len(),
                right: (vocab_len + buckets) * dim,
            });
        }
        if target.len() != vocab_len * dim {
            return Err(Error::DimensionMismatch {
                left: target.len(),
                right: vocab_len * dim,
            });
        }
        Ok(EmbeddingMatrices {
            source,
            target,
            dim,
            vocab_len,
            buckets,
        })
    }
}

impl<T> EmbeddingMatrices<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab_len(&self) -> usize {
        self.vocab_len
    }

    pub fn buckets(&self) -> usize {
        self.buckets
    }

    pub fn source_rows(&self) -> usize {
        self.vocab_len + self.buckets
    }

    pub fn source(&self) -> &[T] {
        &self.source
    }

    pub fn target(&self) -> &[T] {
        &self.target
    }

    pub fn source_mut(&mut self) -> &mut [T] {
        &mut self.source
    }

    pub fn target_mut(&mut self) -> &mut [T] {
        &mut self.target
    }

    pub fn source_row(&self, row: u32) -> &[T] {
        let start = row as usize * self.dim;
        &self.source[start..start + self.dim]
    }

    pub fn source_row_mut(&mut self, row: u32) -> &mut [T] {
        let start = row as usize * self.dim;
        &mut self.source[start..start + self.dim]
    }

    pub fn target_row(&self, row: u32) -> &[T] {
        let start = row as usize * self.dim;
        &self.target[start..start + self.dim]
    }

    pub fn target_row_mut(&mut self, row: u32) -> &mut [T] {
        let start = row as usize * self.dim;
        &mut self.target[start..start + self.dim]
    }

    fn check_source(&self, row: u32) -> Result<()> {
        if (row as usize) < self.source_rows() {
            Ok(())
        } else {
            Err(Error::IdOutOfRange {
                id: row,
                rows: self.source_rows(),
            })
        }
    }

    fn check_target(&self, row: u32) -> Result<()> {
        if (row as usize) < self.vocab_len {
            Ok(())
        } else {
            Err(Error::IdOutOfRange {
                id: row,
                rows: self.vocab_len,
            })
        }
    }
}

impl<T: Float> EmbeddingMatrices<T> {
    pub fn all_finite(&self) -> bool {
        self.source.iter().chain(&self.target).all(|x| x.is_finite())
    }
}

/// `ℓ(x) = log(1 + e^{-x})`, evaluated without overflow.
pub fn logistic_loss(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

fn sigmoid<T: Float>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

fn dot<T: Float>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn axpy<T: Float>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

/// Writes the mean of the given source rows into `out`.
pub fn compose_into<T: Float>(ids: &[u32], matrices: &EmbeddingMatrices<T>, out: &mut [T]) -> Result<()> {
    if ids.is_empty() {
        return Err(Error::EmptyContext);
    }
    out.fill(T::zero());
    for &id in ids {
        matrices.check_source(id)?;
        axpy(T::one(), matrices.source_row(id), out);
    }
    let inv = T::one() / T::from(ids.len()).unwrap();
    for x in out.iter_mut() {
        *x = *x * inv;
    }
    Ok(())
}

/// Mean of the source rows listed in `ids`. Duplicates count per occurrence.
pub fn compose_sentence<T: Float>(ids: &[u32], matrices: &EmbeddingMatrices<T>) -> Result<Vec<T>> {
    let mut out = vec![T::zero(); matrices.dim()];
    compose_into(ids, matrices, &mut out)?;
    Ok(out)
}

/// Result of one stochastic step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    /// `ℓ(s₀) + Σⱼ ℓ(−sⱼ)` evaluated before the update.
    pub loss: f64,
    /// Distinct source rows written, ascending.
    pub touched_source_rows: Vec<u32>,
    /// Distinct target rows written, ascending.
    pub touched_target_rows: Vec<u32>,
    /// Row updates applied to the source matrix (one per context entry).
    pub source_row_updates: usize,
    /// Row updates applied to the target matrix (target plus negatives).
    pub target_row_updates: usize,
    /// `|R(S∖{w_t})|`.
    pub context_len: usize,
}

/// Outcome of [`train_step`]: either an update happened, or the masked
/// context was empty and nothing was touched.
#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    Trained(StepOutcome),
    Skipped,
}

/// Reusable buffers for [`train_step`].
#[derive(Clone, Debug)]
pub struct StepWorkspace<T> {
    context: Vec<u32>,
    hidden: Vec<T>,
    grad: Vec<T>,
    coeffs: Vec<T>,
}

impl<T: Float> StepWorkspace<T> {
    pub fn new(dim: usize) -> Self {
        StepWorkspace {
            context: Vec::new(),
            hidden: vec![T::zero(); dim],
            grad: vec![T::zero(); dim],
            coeffs: Vec::new(),
        }
    }

    /// Context of the most recent step.
    pub fn context(&self) -> &[u32] {
        &self.context
    }
}

fn distinct(ids: impl IntoIterator<Item = u32>) -> Vec<u32> {
    let mut out: Vec<u32> = ids.into_iter().collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// One SGD step predicting the unigram at `target_pos` from the rest of the
/// sentence.
///
/// The context is every feature of `sentence` except the target unigram and
/// any n-gram spanning `target_pos`. Scores and the context gradient use the
/// target rows as they were before the step; the target rows are then moved by
/// `−lr·g·v` and each context occurrence by `−lr·∇v/|context|`.
pub fn train_step<T: Float>(
    matrices: &mut EmbeddingMatrices<T>,
    sentence: &SentenceIndices,
    target_pos: usize,
    negatives: &[u32],
    lr: T,
    ws: &mut StepWorkspace<T>,
) -> Result<Step> {
    let target = *sentence
        .unigram_ids
        .get(target_pos)
        .ok_or_else(|| Error::Domain(format!("target position {target_pos} out of range")))?;
    matrices.check_target(target)?;
    for &neg in negatives {
        matrices.check_target(neg)?;
    }

    sentence.masked_context_into(target_pos, &mut ws.context);
    if ws.context.is_empty() {
        return Ok(Step::Skipped);
    }
    compose_into(&ws.context, matrices, &mut ws.hidden)?;

    ws.grad.fill(T::zero());
    ws.coeffs.clear();
    let mut loss = 0.0;
    for (k, &row) in std::iter::once(&target).chain(negatives).enumerate() {
        let u = matrices.target_row(row);
        let score = dot(u, &ws.hidden);
        let s = score.to_f64().unwrap();
        let g = if k == 0 {
            loss += logistic_loss(s);
            sigmoid(score) - T::one()
        } else {
            loss += logistic_loss(-s);
            sigmoid(score)
        };
        axpy(g, u, &mut ws.grad);
        ws.coeffs.push(g);
    }

    for (&row, &g) in std::iter::once(&target).chain(negatives).zip(&ws.coeffs) {
        axpy(-lr * g, &ws.hidden, matrices.target_row_mut(row));
    }

    let scale = -lr / T::from(ws.context.len()).unwrap();
    for &row in &ws.context {
        axpy(scale, &ws.grad, matrices.source_row_mut(row));
    }

    Ok(Step::Trained(StepOutcome {
        loss,
        touched_source_rows: distinct(ws.context.iter().copied()),
        touched_target_rows: distinct(std::iter::once(target).chain(negatives.iter().copied())),
        source_row_updates: ws.context.len(),
        target_row_updates: 1 + negatives.len(),
        context_len: ws.context.len(),
    }))
}

/// Removes `min(k, #ngrams)` n-gram features chosen uniformly without
/// replacement. Unigrams are never dropped.
pub fn ngram_dropout<R: Rng + ?Sized>(indices: &SentenceIndices, k: usize, rng: &mut R) -> SentenceIndices {
    let m = indices.ngram_ids.len();
    if k == 0 || m == 0 {
        return indices.clone();
    }
    let mut out = SentenceIndices {
        unigram_ids: indices.unigram_ids.clone(),
        ngram_ids: Vec::new(),
        ngram_spans: Vec::new(),
    };
    if k >= m {
        return out;
    }
    let mut keep = vec![true; m];
    for i in rand::seq::index::sample(rng, m, k) {
        keep[i] = false;
    }
    for ((&id, &span), _) in indices
        .ngram_ids
        .iter()
        .zip(&indices.ngram_spans)
        .zip(&keep)
        .filter(|(_, &kept)| kept)
    {
        out.ngram_ids.push(id);
        out.ngram_spans.push(span);
    }
    out
}

/// Floor of the learning rate relative to the base rate.
pub const LR_FLOOR: f64 = 1e-5;

/// Linearly decaying rate `base · (1 − progress)`, floored at `1e-5 · base`.
pub fn lr_schedule(base_lr: f64, progress: f64) -> f64 {
    let progress = progress.clamp(0.0, 1.0);
    (base_lr * (1.0 - progress)).max(LR_FLOOR * base_lr)
}

/// Soft threshold `sign(x) · max(|x| − α, 0)`.
pub fn soft_threshold<T: Float>(x: T, alpha: T) -> T {
    if x > alpha {
        x - alpha
    } else if x < -alpha {
        x + alpha
    } else {
        T::zero()
    }
}

/// Elementwise soft thresholding in place.
pub fn l1_prox<T: Float>(values: &mut [T], alpha: T) {
    if alpha == T::zero() {
        return;
    }
    for x in values {
        *x = soft_threshold(*x, alpha);
    }
}

/// Proximal L1 step after an SGD update: touched source rows are thresholded
/// at `τ·lr/context_len`, touched target rows at `τ·lr`.
pub fn apply_l1_after_step<T: Float>(
    matrices: &mut EmbeddingMatrices<T>,
    outcome: &StepOutcome,
    tau: f64,
    lr: f64,
) {
    if tau == 0.0 {
        return;
    }
    let source_alpha = T::from(tau * lr / outcome.context_len as f64).unwrap();
    let target_alpha = T::from(tau * lr).unwrap();
    for &row in &outcome.touched_source_rows {
        l1_prox(matrices.source_row_mut(row), source_alpha);
    }
    for &row in &outcome.touched_target_rows {
        l1_prox(matrices.target_row_mut(row), target_alpha);
    }
}
