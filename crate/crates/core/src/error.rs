use std::io;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("MIDI parse error at byte offset {offset}: {message}")]
    MidiParse { offset: usize, message: String },

    #[error("unsupported MIDI file: {0}")]
    UnsupportedMidi(String),

    #[error("note list parse error on line {line}: {message}")]
    NotesParse { line: usize, message: String },

    #[error("malformed token sequence at index {index}: {message}")]
    Structure { index: usize, message: String },

    #[error("polyphonic input: note {first} overlaps note {second}")]
    Polyphonic { first: usize, second: usize },

    #[error("vocabulary mismatch: expected `{expected}`, found `{found}`")]
    VocabularyMismatch { expected: String, found: String },

    #[error("token id {id} is not in the vocabulary")]
    UnknownToken { id: u32 },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }
}
