//! Descriptive statistics over trained vocabularies, as plot-ready tables.
//!
//! Curves are indexed by vocabulary size (atoms plus supertokens created so
//! far), so runs over different alphabets line up on one axis.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::bpe::BpeModel;
use crate::tokens::TokenKind;
use crate::{Error, Result};

/// One point of a curve over BPE steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub vocab_size: usize,
    pub value: f64,
}

/// Frequency of each new supertoken at the step that created it, divided by
/// the length of the atomic training corpus.
///
/// Values lie in `(0, 0.5]` since a pair spans two tokens.
pub fn frequency_curve(model: &BpeModel, initial_corpus_length: usize) -> Result<Vec<CurvePoint>> {
    if initial_corpus_length == 0 {
        return Err(Error::invalid("initial corpus length must be positive"));
    }
    let atoms = model.vocab().atom_count();
    Ok(model
        .merges()
        .iter()
        .enumerate()
        .map(|(k, m)| CurvePoint {
            vocab_size: atoms + k + 1,
            value: m.count_at_merge as f64 / initial_corpus_length as f64,
        })
        .collect())
}

/// Running mean of supertoken expansion lengths.
pub fn length_curve(model: &BpeModel) -> Vec<CurvePoint> {
    let vocab = model.vocab();
    let atoms = vocab.atom_count();
    let mut total = 0usize;
    model
        .merges()
        .iter()
        .enumerate()
        .map(|(k, m)| {
            total += vocab.expansion_len(m.new_id).expect("merge ids are in the vocabulary");
            CurvePoint {
                vocab_size: atoms + k + 1,
                value: total as f64 / (k + 1) as f64,
            }
        })
        .collect()
}

/// Mean expansion length over all supertokens.
pub fn mean_supertoken_length(model: &BpeModel) -> Result<f64> {
    length_curve(model)
        .last()
        .map(|p| p.value)
        .ok_or_else(|| Error::invalid("model has no supertokens"))
}

/// Per merge count, the share of supertokens created so far holding exactly
/// `k` Pitch atoms.
///
/// Proportions are cumulative over all merges up to that row. Bucket
/// `bucket_max + 1` collects every supertoken with more than `bucket_max`
/// pitches.
#[derive(Debug, Clone, PartialEq)]
pub struct PitchHistogram {
    pub bucket_max: usize,
    /// `rows[m - 1]` describes the first `m` supertokens.
    pub rows: Vec<Vec<f64>>,
}

impl PitchHistogram {
    pub fn bucket_label(&self, k: usize) -> String {
        if k > self.bucket_max {
            format!("{}+", self.bucket_max + 1)
        } else {
            k.to_string()
        }
    }
}

pub const DEFAULT_BUCKET_MAX: usize = 4;

pub fn pitch_content_histogram(model: &BpeModel, bucket_max: usize) -> Result<PitchHistogram> {
    let vocab = model.vocab();
    if !vocab.alphabet().contains_kind(TokenKind::Pitch) {
        return Err(Error::invalid(format!(
            "alphabet `{}` has no Pitch tokens",
            vocab.alphabet().id()
        )));
    }
    let mut pitches: Vec<usize> = vocab
        .atoms()
        .iter()
        .map(|t| usize::from(t.kind == TokenKind::Pitch))
        .collect();
    let buckets = bucket_max + 2;
    let mut tally = vec![0usize; buckets];
    let mut rows = Vec::with_capacity(model.merges().len());
    for (k, m) in model.merges().iter().enumerate() {
        let p = pitches[m.pair.0 as usize] + pitches[m.pair.1 as usize];
        pitches.push(p);
        tally[p.min(bucket_max + 1)] += 1;
        let n = (k + 1) as f64;
        rows.push(tally.iter().map(|&c| c as f64 / n).collect());
    }
    Ok(PitchHistogram { bucket_max, rows })
}

/// A table that [`emit_table`] can write.
#[derive(Debug, Clone, Copy)]
pub enum Table<'a> {
    Curve(&'a [CurvePoint]),
    Histogram(&'a PitchHistogram),
}

const DECIMALS: usize = 9;

/// CSV text: `vocab_size,value` for curves, `merge_count,k,proportion` for
/// histograms, values with fixed decimals.
pub fn render_table(table: Table<'_>) -> String {
    let mut out = String::new();
    match table {
        Table::Curve(points) => {
            out.push_str("vocab_size,value\n");
            for p in points {
                let _ = writeln!(out, "{},{:.*}", p.vocab_size, DECIMALS, p.value);
            }
        }
        Table::Histogram(h) => {
            out.push_str("merge_count,k,proportion\n");
            for (m, row) in h.rows.iter().enumerate() {
                for (k, v) in row.iter().enumerate() {
                    let _ = writeln!(out, "{},{},{:.*}", m + 1, h.bucket_label(k), DECIMALS, v);
                }
            }
        }
    }
    out
}

pub fn emit_table(table: Table<'_>, path: &Path) -> Result<()> {
    fs::write(path, render_table(table))?;
    Ok(())
}
