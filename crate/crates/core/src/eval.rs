//! Inference and evaluation: sentence vectors, similarity correlation, pair
//! features for downstream classifiers, and norm/frequency diagnostics.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::model::compose_sentence;
use crate::trainer::Model;

/// A sentence vector. `oov` is set when no token of the sentence was known,
/// in which case the vector is all zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct SentenceEmbedding {
    pub vector: Vec<f32>,
    pub oov: bool,
}

/// Mean of the source rows of every unigram and n-gram of `text`. No
/// dropout, masking or subsampling is applied.
pub fn embed_sentence(model: &Model, text: &str) -> SentenceEmbedding {
    let indices = model.sentence_indices(text);
    if indices.is_empty() {
        return SentenceEmbedding {
            vector: vec![0.0; model.dim()],
            oov: true,
        };
    }
    let ids: Vec<u32> = indices.ids().collect();
    let vector = compose_sentence(&ids, &model.matrices).expect("indices come from the model");
    SentenceEmbedding { vector, oov: false }
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine<T: Copy + Into<f64>>(u: &[T], v: &[T]) -> f64 {
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (&a, &b) in u.iter().zip(v) {
        let (a, b): (f64, f64) = (a.into(), b.into());
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        0.0
    } else {
        dot / (nu.sqrt() * nv.sqrt())
    }
}

fn check_pair(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::Degenerate(format!("need ≥2 observations, got {}", xs.len())));
    }
    Ok(())
}

/// Pearson product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair(xs, ys)?;
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn fractional_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && xs[order[j]] == xs[order[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

/// Spearman rank correlation: Pearson over fractional ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair(xs, ys)?;
    pearson(&fractional_ranks(xs), &fractional_ranks(ys))
}

/// A scored sentence pair.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityRecord {
    pub sentence_a: String,
    pub sentence_b: String,
    pub gold: f64,
}

/// Parses `score<TAB>sentence_a<TAB>sentence_b` lines. Blank lines are
/// skipped.
pub fn read_similarity_tsv<R: BufRead>(reader: R) -> Result<Vec<SimilarityRecord>> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => Error::Parse {
                line: line_no,
                message: "invalid UTF-8".into(),
            },
            _ => Error::Io(e),
        })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: line_no, message };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(format!("expected 3 tab-separated fields, found {}", fields.len())));
        }
        let gold: f64 = fields[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("score {:?} is not a number", fields[0])))?;
        if !gold.is_finite() {
            return Err(parse_err("score must be finite".into()));
        }
        records.push(SimilarityRecord {
            sentence_a: fields[1].to_owned(),
            sentence_b: fields[2].to_owned(),
            gold,
        });
    }
    Ok(records)
}

/// Correlations between model cosines and gold scores.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityReport {
    pub pearson: f64,
    pub spearman: f64,
    /// Records scored.
    pub used: usize,
    /// Records with a side that had no known token.
    pub excluded: usize,
}

/// Correlates predicted scores with gold scores.
pub fn correlate(predicted: &[f64], gold: &[f64], excluded: usize) -> Result<SimilarityReport> {
    if predicted.len() < 2 {
        return Err(Error::InsufficientRecords {
            usable: predicted.len(),
        });
    }
    Ok(SimilarityReport {
        pearson: pearson(predicted, gold)?,
        spearman: spearman(predicted, gold)?,
        used: predicted.len(),
        excluded,
    })
}

/// Scores each pair by the cosine of its sentence vectors and correlates
/// with the gold scores. Pairs where either side is entirely out of
/// vocabulary are excluded and counted.
pub fn evaluate_similarity(model: &Model, records: &[SimilarityRecord]) -> Result<SimilarityReport> {
    let mut predicted = Vec::with_capacity(records.len());
    let mut gold = Vec::with_capacity(records.len());
    for r in records {
        let a = embed_sentence(model, &r.sentence_a);
        let b = embed_sentence(model, &r.sentence_b);
        if a.oov || b.oov {
            continue;
        }
        predicted.push(cosine(&a.vector, &b.vector));
        gold.push(r.gold);
    }
    correlate(&predicted, &gold, records.len() - predicted.len())
}

/// `[|a − b|, a ⊙ b]`, of length `2h`.
pub fn pair_features(a: &[f32], b: &[f32]) -> Result<Vec<f32>> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut out = Vec::with_capacity(2 * a.len());
    out.extend(a.iter().zip(b).map(|(x, y)| (x - y).abs()));
    out.extend(a.iter().zip(b).map(|(x, y)| x * y));
    Ok(out)
}

/// Norm of a word's source vector against its log frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormRecord {
    pub id: u32,
    pub log_freq: f64,
    pub norm: f64,
}

/// One record per vocabulary word in id order (descending frequency).
#[derive(Clone, Debug, PartialEq)]
pub struct NormProfile {
    pub records: Vec<NormRecord>,
}

impl NormProfile {
    /// Mean norm of the words whose frequency rank lies in
    /// `[lo·|V|, hi·|V|)`, rank 0 being the most frequent word.
    pub fn band_mean(&self, lo: f64, hi: f64) -> Option<f64> {
        let n = self.records.len() as f64;
        let start = (lo * n).floor() as usize;
        let end = ((hi * n).ceil() as usize).min(self.records.len());
        let band = self.records.get(start..end).filter(|b| !b.is_empty())?;
        Some(band.iter().map(|r| r.norm).sum::<f64>() / band.len() as f64)
    }

    /// Two columns `log_freq norm`; a third `weight` column when `arora_a` is
    /// given.
    pub fn write<W: Write>(&self, mut w: W, arora_a: Option<f64>) -> Result<()> {
        for r in &self.records {
            write!(w, "{} {}", r.log_freq, r.norm)?;
            if let Some(a) = arora_a {
                write!(w, " {}", arora_weight(r.log_freq.exp(), a)?)?;
            }
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `(ln f_w, ‖v_w‖₂)` for every vocabulary word.
pub fn norm_profile(model: &Model) -> NormProfile {
    let records = (0..model.vocab.len() as u32)
        .map(|id| {
            let norm = model
                .matrices
                .source_row(id)
                .iter()
                .map(|&x| f64::from(x) * f64::from(x))
                .sum::<f64>()
                .sqrt();
            NormRecord {
                id,
                log_freq: model.vocab.frequency(id).ln(),
                norm,
            }
        })
        .collect();
    NormProfile { records }
}

/// Static frequency down-weighting `a / (a + f_w)`.
pub fn arora_weight(freq: f64, a: f64) -> Result<f64> {
    if freq.is_nan() || a.is_nan() || freq <= 0.0 || a <= 0.0 {
        return Err(Error::Domain(format!("arora weight needs f > 0 and a > 0, got f={freq} a={a}")));
    }
    Ok(a / (a + freq))
}
