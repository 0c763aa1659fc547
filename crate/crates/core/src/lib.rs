//! Cross-domain transfer evaluation for sentence-level rhetorical role
//! classification in legal documents.
//!
//! Pipeline: [`ingest`] the three corpora, [`recast`] their native labels onto
//! the binary Facts / NonFacts task, [`split`] documents into folds, train
//! backends on every pool of datasets and score them on every test fold with
//! [`eval::run_transfer_matrix`].

pub mod bridge;
pub mod corpus;
pub mod eval;
pub mod ingest;
pub mod recast;
pub mod split;
pub mod svm;
pub mod synth;

pub use corpus::{Corpus, CorpusError, DatasetId, Document, MetaLabel, Provenance, SentenceRecord};
