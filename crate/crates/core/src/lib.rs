//! Symbolic-music tokenization and byte-pair encoding.
//!
//! The crate is organised around the pipeline it serves:
//!
//! - [`score`]: MIDI and JSON-lines note ingestion into a quantized [`score::Score`].
//! - [`tokens`]: REMI and Structured+intervals tokenizers, plus the pitch-only filter.
//! - [`bpe`]: training, encoding, decoding and (de)serialization of merge tables.
//! - [`analysis`]: frequency, length and pitch-content curves over a trained model.
//! - [`phrase`]: phrase-boundary alignment, label projection, overlap statistics
//!   and dataset export.
//! - [`cli`]: the `supertok` command-line front end.
//!
//! Corpus-level loops (pair counting, per-piece statistics, Monte-Carlo trials)
//! run on rayon when the `parallel` feature is enabled, and sequentially
//! otherwise. Results never depend on the execution mode or the thread count.

pub mod analysis;
pub mod bpe;
pub mod cli;
mod error;
pub mod exec;
pub mod phrase;
pub mod score;
pub mod synth;
pub mod tokens;

pub use error::{Error, Result};
pub use exec::Exec;
