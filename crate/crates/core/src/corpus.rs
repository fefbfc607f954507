//! Tokenization, vocabulary construction and n-gram feature extraction.
//!
//! A corpus is newline-delimited UTF-8 text with one sentence per line.
//! Files ending in `.gz` are decompressed transparently.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use flate2::read::MultiGzDecoder;

use crate::error::{Error, Result};

const FNV_OFFSET_BASIS: u32 = 2_166_136_261;
const FNV_PRIME: u32 = 16_777_619;
const NGRAM_MULTIPLIER: u32 = 116_049_371;

/// Splits a sentence on Unicode whitespace.
pub fn tokenize(text: &str, lowercase: bool) -> Vec<String> {
    text.split_whitespace()
        .map(|tok| {
            if lowercase {
                tok.to_lowercase()
            } else {
                tok.to_owned()
            }
        })
        .collect()
}

/// Tokenizes raw bytes, reporting the byte offset of the first invalid
/// UTF-8 sequence. `line` is only used for the error message.
pub fn tokenize_bytes(bytes: &[u8], lowercase: bool, line: usize) -> Result<Vec<String>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Decode {
        line,
        offset: e.valid_up_to(),
    })?;
    Ok(tokenize(text, lowercase))
}

/// Opens a corpus file, decompressing when the name ends in `.gz`.
pub fn open_corpus(path: impl AsRef<Path>) -> Result<Box<dyn BufRead + Send>> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let gz = path.extension().is_some_and(|ext| ext == "gz");
    Ok(if gz {
        Box::new(BufReader::new(MultiGzDecoder::new(file)))
    } else {
        Box::new(BufReader::new(file))
    })
}

/// Iterator over tokenized lines of a reader. Line numbers are 1-based.
pub struct Sentences<R> {
    reader: R,
    lowercase: bool,
    line: usize,
    buf: Vec<u8>,
}

impl<R: BufRead> Sentences<R> {
    pub fn new(reader: R, lowercase: bool) -> Self {
        Sentences {
            reader,
            lowercase,
            line: 0,
            buf: Vec::new(),
        }
    }
}

impl<R: BufRead> Iterator for Sentences<R> {
    type Item = Result<Vec<String>>;

    fn next(&mut self) -> Option<Self::Item> {
        self.buf.clear();
        match self.reader.read_until(b'\n', &mut self.buf) {
            Ok(0) => None,
            Ok(_) => {
                self.line += 1;
                Some(tokenize_bytes(&self.buf, self.lowercase, self.line))
            }
            Err(e) => Some(Err(e.into())),
        }
    }
}

/// A vocabulary entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordEntry {
    pub word: String,
    pub count: u64,
}

/// Word ↔ id mapping with corpus counts.
///
/// Ids are dense and ordered by descending count, so the words eligible as
/// prediction targets (count ≥ `min_target_count`) always form the id prefix
/// `0..eligible_targets()`.
#[derive(Clone, Debug)]
pub struct Vocabulary {
    words: Vec<WordEntry>,
    index: HashMap<String, u32>,
    total_tokens: u64,
    min_count: u64,
    min_target_count: u64,
    eligible: usize,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.words == other.words && self.total_tokens == other.total_tokens
    }
}

impl Vocabulary {
    /// Builds a vocabulary from entries already sorted by descending count.
    ///
    /// Used when loading a model; `total_tokens` is taken verbatim.
    pub fn from_entries(
        words: Vec<WordEntry>,
        total_tokens: u64,
        min_count: u64,
        min_target_count: u64,
    ) -> Result<Self> {
        if words.windows(2).any(|w| w[0].count < w[1].count) {
            return Err(Error::Domain(
                "vocabulary entries must be sorted by descending count".into(),
            ));
        }
        if words.len() > u32::MAX as usize {
            return Err(Error::Domain("vocabulary too large for 32-bit ids".into()));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (id, entry) in words.iter().enumerate() {
            if index.insert(entry.word.clone(), id as u32).is_some() {
                return Err(Error::Domain(format!("duplicate word {:?}", entry.word)));
            }
        }
        let eligible = words.partition_point(|e| e.count >= min_target_count);
        Ok(Vocabulary {
            words,
            index,
            total_tokens,
            min_count,
            min_target_count,
            eligible,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize].word
    }

    pub fn count(&self, id: u32) -> u64 {
        self.words[id as usize].count
    }

    pub fn entries(&self) -> &[WordEntry] {
        &self.words
    }

    pub fn counts(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().map(|e| e.count)
    }

    /// Σ of kept counts.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn min_target_count(&self) -> u64 {
        self.min_target_count
    }

    /// Normalized frequency `count(w) / total_tokens`.
    pub fn frequency(&self, id: u32) -> f64 {
        self.count(id) as f64 / self.total_tokens as f64
    }

    /// Number of words usable as targets and negatives.
    pub fn eligible_targets(&self) -> usize {
        self.eligible
    }

    pub fn is_target_eligible(&self, id: u32) -> bool {
        (id as usize) < self.eligible
    }

    /// Maps tokens to ids, skipping out-of-vocabulary tokens.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<u32> {
        tokens.iter().filter_map(|t| self.id(t.as_ref())).collect()
    }
}

/// Streaming token counter.
#[derive(Default)]
pub struct VocabBuilder {
    counts: HashMap<String, (u64, usize)>,
    scanned: u64,
}

impl VocabBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_sentence<S: AsRef<str>>(&mut self, tokens: &[S]) {
        for tok in tokens {
            let next = self.counts.len();
            let entry = self
                .counts
                .entry(tok.as_ref().to_owned())
                .or_insert((0, next));
            entry.0 += 1;
        }
        self.scanned += tokens.len() as u64;
    }

    /// Total tokens seen, including those of words later discarded.
    pub fn scanned_tokens(&self) -> u64 {
        self.scanned
    }

    pub fn build(self, min_count: u64, min_target_count: u64) -> Result<Vocabulary> {
        if min_count < 1 || min_target_count < 1 {
            return Err(Error::Domain("minimum counts must be ≥ 1".into()));
        }
        if self.scanned == 0 {
            return Err(Error::NoTokens);
        }
        let mut kept: Vec<(String, u64, usize)> = self
            .counts
            .into_iter()
            .filter(|(_, (count, _))| *count >= min_count)
            .map(|(word, (count, first))| (word, count, first))
            .collect();
        kept.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        let total = kept.iter().map(|k| k.1).sum();
        let words = kept
            .into_iter()
            .map(|(word, count, _)| WordEntry { word, count })
            .collect();
        Vocabulary::from_entries(words, total, min_count, min_target_count)
    }
}

/// Counts a stream of tokenized sentences in a single pass.
pub fn build_vocab<I, S>(sentences: I, min_count: u64, min_target_count: u64) -> Result<Vocabulary>
where
    I: IntoIterator,
    I::Item: AsRef<[S]>,
    S: AsRef<str>,
{
    let mut builder = VocabBuilder::new();
    for sentence in sentences {
        builder.add_sentence(sentence.as_ref());
    }
    builder.build(min_count, min_target_count)
}

/// 32-bit hash of an id window.
///
/// The accumulator starts as FNV-1a over the little-endian bytes of the first
/// id; every further id is folded in as `h * 116049371 + id` (wrapping).
pub fn ngram_hash_raw(window: &[u32]) -> u32 {
    let (first, rest) = window
        .split_first()
        .expect("n-gram window must be nonempty");
    let mut h = FNV_OFFSET_BASIS;
    for byte in first.to_le_bytes() {
        h ^= u32::from(byte);
        h = h.wrapping_mul(FNV_PRIME);
    }
    for &id in rest {
        h = h.wrapping_mul(NGRAM_MULTIPLIER).wrapping_add(id);
    }
    h
}

/// Source-matrix row of an n-gram: `vocab_len + hash mod buckets`.
pub fn ngram_hash(window: &[u32], vocab_len: usize, buckets: u32) -> u32 {
    debug_assert!(buckets > 0);
    vocab_len as u32 + ngram_hash_raw(window) % buckets
}

/// Inclusive token-position range covered by an n-gram.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn covers(&self, pos: usize) -> bool {
        self.start <= pos && pos <= self.end
    }
}

/// Feature list of one sentence: unigrams in order plus hashed n-gram rows.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SentenceIndices {
    pub unigram_ids: Vec<u32>,
    pub ngram_ids: Vec<u32>,
    /// One span per entry of `ngram_ids`.
    pub ngram_spans: Vec<Span>,
}

impl SentenceIndices {
    /// Number of features, duplicates included.
    pub fn len(&self) -> usize {
        self.unigram_ids.len() + self.ngram_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All source rows: unigrams first, then n-grams.
    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.unigram_ids.iter().chain(&self.ngram_ids).copied()
    }

    /// Writes the context of the token at `pos` into `out`: every feature
    /// except that unigram and any n-gram whose span covers `pos`.
    pub fn masked_context_into(&self, pos: usize, out: &mut Vec<u32>) {
        out.clear();
        out.extend(
            self.unigram_ids
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != pos)
                .map(|(_, &id)| id),
        );
        out.extend(
            self.ngram_ids
                .iter()
                .zip(&self.ngram_spans)
                .filter(|(_, span)| !span.covers(pos))
                .map(|(&id, _)| id),
        );
    }

    pub fn masked_context(&self, pos: usize) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.len());
        self.masked_context_into(pos, &mut out);
        out
    }
}

/// Builds R(S): the unigrams verbatim plus one hashed row per contiguous
/// window of every order `2..=n`. Duplicates are retained.
pub fn extract_ngrams(
    unigram_ids: &[u32],
    n: usize,
    vocab_len: usize,
    buckets: u32,
) -> SentenceIndices {
    let mut out = SentenceIndices {
        unigram_ids: unigram_ids.to_vec(),
        ..Default::default()
    };
    for order in 2..=n {
        if unigram_ids.len() < order {
            break;
        }
        for (start, window) in unigram_ids.windows(order).enumerate() {
            out.ngram_ids.push(ngram_hash(window, vocab_len, buckets));
            out.ngram_spans.push(Span {
                start,
                end: start + order - 1,
            });
        }
    }
    out
}
