//! Labelled dataset export for the segmentation trainer.
//!
//! JSON lines, one record per piece:
//!
//! ```text
//! {"schema":"supertok-phrase-dataset/1","piece_id":"...","ids":[...],"labels":[0,1,...],"vocab_size":N,"split":"train"}
//! ```
//!
//! `labels[i]` is 1 when encoded token `ids[i]` covers a phrase start.
//! `split` is `train`, `valid` or `test` (8:1:1 by a seeded hash of the piece id).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{labels_for_spans, token_spans, AnnotatedPiece};
use crate::bpe::{self, BpeModel};
use crate::{Error, Exec, Result};

pub const DATASET_SCHEMA: &str = "supertok-phrase-dataset/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    pub schema: String,
    pub piece_id: String,
    pub ids: Vec<u32>,
    pub labels: Vec<u8>,
    pub vocab_size: usize,
    pub split: String,
}

/// Deterministic split tag for a piece.
pub fn split_tag(piece_id: &str, seed: u64) -> &'static str {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(piece_id.as_bytes());
    match h.finalize()[0] % 10 {
        0..=7 => "train",
        8 => "valid",
        _ => "test",
    }
}

pub fn build_training_set(
    model: &BpeModel,
    corpus: &[AnnotatedPiece],
    seed: u64,
    exec: Exec,
) -> Result<Vec<DatasetRecord>> {
    let records = exec.map(corpus, |piece| -> Result<DatasetRecord> {
        let encoded = bpe::encode(&piece.sequence, model)?;
        let spans = token_spans(&encoded.ids, model)?;
        let labels = labels_for_spans(&spans, piece.phrases.starts());
        Ok(DatasetRecord {
            schema: DATASET_SCHEMA.to_string(),
            piece_id: piece.sequence.piece_id.clone(),
            ids: encoded.ids,
            labels: labels.labels.into_iter().map(u8::from).collect(),
            vocab_size: model.vocab().len(),
            split: split_tag(&piece.sequence.piece_id, seed).to_string(),
        })
    });
    records.into_iter().collect()
}

pub fn render_training_set(records: &[DatasetRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("dataset records serialize"));
        out.push('\n');
    }
    out
}

pub fn parse_training_set(text: &str) -> Result<Vec<DatasetRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let rec: DatasetRecord = serde_json::from_str(l).map_err(|e| Error::NotesParse {
                line: i + 1,
                message: format!("dataset record: {e}"),
            })?;
            if rec.schema != DATASET_SCHEMA {
                return Err(Error::NotesParse {
                    line: i + 1,
                    message: format!("unsupported dataset schema `{}`", rec.schema),
                });
            }
            if rec.ids.len() != rec.labels.len() {
                return Err(Error::NotesParse {
                    line: i + 1,
                    message: "ids and labels differ in length".into(),
                });
            }
            Ok(rec)
        })
        .collect()
}

/// Writes the labelled dataset for `corpus` to `path`.
pub fn export_training_set(model: &BpeModel, corpus: &[AnnotatedPiece], seed: u64, path: &Path) -> Result<usize> {
    let records = build_training_set(model, corpus, seed, Exec::default())?;
    fs::write(path, render_training_set(&records))?;
    Ok(records.len())
}
