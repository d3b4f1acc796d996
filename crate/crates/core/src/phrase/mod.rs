//! Phrase annotations and their interaction with supertokens.
//!
//! Annotations arrive as note indices, are mapped onto atomic token
//! indices, and are then carried through BPE: an encoded token covers a
//! contiguous span of atomic positions and is labelled start-of-phrase when
//! that span contains a phrase start.

mod boundary;
mod export;
mod overlap;

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::bpe::{self, BpeModel};
use crate::score::Score;
use crate::tokens::{TokenSequence, Tokenized, Tokenizer};
use crate::{Error, Result};

pub use boundary::{top_boundary_supertokens, Boundary};
pub use export::{
    build_training_set, export_training_set, parse_training_set, render_training_set, split_tag, DatasetRecord,
    DATASET_SCHEMA,
};
pub use overlap::{
    boundary_overlap, boundary_overlap_ratio, corpus_random_split_baseline, random_split_baseline,
    random_split_estimate, BaselineEstimate, OverlapStats,
};

/// Atomic-token indices where phrases begin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseAnnotations {
    pub piece_id: String,
    starts: Vec<usize>,
}

impl PhraseAnnotations {
    /// Checks that `starts` is strictly increasing, begins at 0 and stays
    /// below `atomic_len`. An empty sequence has no starts.
    pub fn new(piece_id: impl Into<String>, starts: Vec<usize>, atomic_len: usize) -> Result<Self> {
        if atomic_len == 0 {
            if !starts.is_empty() {
                return Err(Error::invalid("phrase starts given for an empty sequence"));
            }
        } else if starts.first() != Some(&0) {
            return Err(Error::invalid("phrase starts must include index 0"));
        }
        if starts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("phrase starts must be strictly increasing"));
        }
        if let Some(&last) = starts.last() {
            if last >= atomic_len {
                return Err(Error::invalid(format!(
                    "phrase start {last} is outside a sequence of length {atomic_len}"
                )));
            }
        }
        Ok(PhraseAnnotations {
            piece_id: piece_id.into(),
            starts,
        })
    }

    pub fn starts(&self) -> &[usize] {
        &self.starts
    }

    fn check_len(&self, atomic_len: usize) -> Result<()> {
        match self.starts.last() {
            Some(&last) if last >= atomic_len => Err(Error::invalid(format!(
                "phrase start {last} is outside piece `{}` of length {atomic_len}",
                self.piece_id
            ))),
            _ => Ok(()),
        }
    }
}

/// One label per encoded token; `true` marks a start of phrase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedLabels {
    pub labels: Vec<bool>,
}

/// An atomic sequence with its phrase starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedPiece {
    pub sequence: TokenSequence,
    pub phrases: PhraseAnnotations,
}

impl AnnotatedPiece {
    pub fn new(sequence: TokenSequence, phrases: PhraseAnnotations) -> Result<Self> {
        phrases.check_len(sequence.len())?;
        Ok(AnnotatedPiece { sequence, phrases })
    }
}

/// Maps phrase-start notes to token indices for `tokenizer`'s scheme.
pub fn align_note_phrases(
    score: &Score,
    phrase_note_indices: &[usize],
    tokenizer: &Tokenizer,
    piece_id: &str,
) -> Result<PhraseAnnotations> {
    let tokenized = tokenizer.tokenize(score, piece_id)?;
    align_tokenized(&tokenized, phrase_note_indices)
}

/// Like [`align_note_phrases`] for an existing tokenization.
///
/// Each note maps to the first token emitted for it: its Position token in
/// REMI, its Duration token in Structured+intervals, its Pitch token in the
/// pitch-only stream. The first phrase always starts at token 0, so any
/// leading Bar tokens belong to it.
pub fn align_tokenized(tokenized: &Tokenized, phrase_note_indices: &[usize]) -> Result<PhraseAnnotations> {
    let map = &tokenized.note_token_index;
    let mut starts = Vec::with_capacity(phrase_note_indices.len() + 1);
    for &note in phrase_note_indices {
        let idx = *map.get(note).ok_or_else(|| {
            Error::invalid(format!(
                "phrase note index {note} out of range for {} notes in `{}`",
                map.len(),
                tokenized.sequence.piece_id
            ))
        })?;
        starts.push(idx);
    }
    if !tokenized.sequence.is_empty() {
        // The earliest phrase absorbs everything before it.
        if let Some(earliest) = starts.iter().min().copied() {
            starts.retain(|&s| s != earliest);
        }
        starts.push(0);
    }
    starts.sort_unstable();
    starts.dedup();
    PhraseAnnotations::new(tokenized.sequence.piece_id.clone(), starts, tokenized.sequence.len())
}

/// `(start, length)` of the atomic span behind each encoded token.
pub fn token_spans(encoded: &[u32], model: &BpeModel) -> Result<Vec<(usize, usize)>> {
    let mut at = 0;
    encoded
        .iter()
        .map(|&id| {
            let len = model.vocab().expansion_len(id).ok_or(Error::UnknownToken { id })?;
            let span = (at, len);
            at += len;
            Ok(span)
        })
        .collect()
}

/// Encodes `atomic_seq` and labels every encoded token whose span contains a
/// phrase start.
pub fn project_labels(ann: &PhraseAnnotations, model: &BpeModel, atomic_seq: &TokenSequence) -> Result<EncodedLabels> {
    ann.check_len(atomic_seq.len())?;
    let encoded = bpe::encode(atomic_seq, model)?;
    let spans = token_spans(&encoded.ids, model)?;
    Ok(labels_for_spans(&spans, ann.starts()))
}

pub(crate) fn labels_for_spans(spans: &[(usize, usize)], starts: &[usize]) -> EncodedLabels {
    let mut next = 0;
    let labels = spans
        .iter()
        .map(|&(s, len)| {
            let mut hit = false;
            while next < starts.len() && starts[next] < s + len {
                hit |= starts[next] >= s;
                next += 1;
            }
            hit
        })
        .collect();
    EncodedLabels { labels }
}

/// Share of positive labels over all tokens; 0 for an empty dataset.
pub fn class_balance(labels: &[EncodedLabels]) -> f64 {
    let total: usize = labels.iter().map(|l| l.labels.len()).sum();
    if total == 0 {
        return 0.0;
    }
    let positive: usize = labels.iter().map(|l| l.labels.iter().filter(|b| **b).count()).sum();
    positive as f64 / total as f64
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SidecarRecord {
    piece_id: String,
    phrase_note_indices: Vec<usize>,
}

/// Parses the annotation sidecar: JSON lines with `piece_id` and
/// `phrase_note_indices`.
pub fn parse_annotation_sidecar(text: &str) -> Result<BTreeMap<String, Vec<usize>>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: SidecarRecord = serde_json::from_str(line).map_err(|e| Error::NotesParse {
            line: i + 1,
            message: format!("annotation record: {e}"),
        })?;
        if out.insert(rec.piece_id.clone(), rec.phrase_note_indices).is_some() {
            return Err(Error::NotesParse {
                line: i + 1,
                message: format!("duplicate annotations for piece `{}`", rec.piece_id),
            });
        }
    }
    Ok(out)
}
