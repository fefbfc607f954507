//! Unsupervised sentence embeddings.
//!
//! Every vocabulary word and every hashed word n-gram owns a source vector;
//! a sentence vector is the mean of the source vectors of its features.
//! Training predicts each (subsampled) word of a sentence from the mean of
//! the remaining features, using negative sampling against a separate set of
//! target vectors.
//!
//! ```no_run
//! use sent2vec::{embed_sentence, train, Preset, TrainConfig};
//!
//! let config = TrainConfig { dim: 100, ..Preset::BooksUni.config() };
//! let out = train("corpus.txt", &config)?;
//! let v = embed_sentence(&out.model, "the cat sat on the mat");
//! assert_eq!(v.vector.len(), 100);
//! # Ok::<(), sent2vec::Error>(())
//! ```

pub mod config;
pub mod corpus;
mod error;
pub mod eval;
pub mod hogwild;
pub mod io;
pub mod model;
pub mod sampling;
pub mod trainer;

pub use config::{Preset, TrainConfig};
pub use corpus::{build_vocab, extract_ngrams, ngram_hash, tokenize, SentenceIndices, Span, Vocabulary};
pub use error::{Error, Result};
pub use eval::{
    arora_weight, cosine, embed_sentence, evaluate_similarity, norm_profile, pair_features, pearson, spearman,
    SentenceEmbedding, SimilarityRecord, SimilarityReport,
};
pub use io::{export_text_vectors, load_model, save_model};
pub use model::{train_step, EmbeddingMatrices, Step, StepOutcome, StepWorkspace};
pub use sampling::NegativeTable;
pub use trainer::{train, train_corpus, Model, TrainOutput, TrainReport, TrainingCorpus};
