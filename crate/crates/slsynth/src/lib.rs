//! File formats, corpus batching, statistics and the command line for
//! `slsynth-core`.

pub mod cli;
pub mod corpus;
pub mod format;
pub mod report;
pub mod stats;

pub use corpus::{doc_id, generate_corpus, write_corpus, CorpusError, CorpusIter, Written};
pub use format::{FormatError, Manifest};
pub use stats::{corpus_stats, CorpusStats, Moments, StatsBuilder};
