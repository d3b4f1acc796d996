//! How often encoded tokens straddle phrase boundaries, and the same
//! statistic for random segmentations with as many chunks.
//!
//! A token straddles when its span contains a phrase start at a position
//! other than its first one. Starting exactly on a phrase start is fine.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{token_spans, AnnotatedPiece};
use crate::bpe::{self, BpeModel};
use crate::{Error, Exec, Result};

/// Straddling counts over a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OverlapStats {
    pub straddling: usize,
    pub encoded_tokens: usize,
    pub supertokens: usize,
}

impl OverlapStats {
    /// Straddling tokens over all encoded tokens.
    pub fn ratio(&self) -> f64 {
        if self.encoded_tokens == 0 {
            0.0
        } else {
            self.straddling as f64 / self.encoded_tokens as f64
        }
    }

    /// Straddling tokens over supertokens only (atoms never straddle).
    pub fn ratio_over_supertokens(&self) -> f64 {
        if self.supertokens == 0 {
            0.0
        } else {
            self.straddling as f64 / self.supertokens as f64
        }
    }
}

fn straddles(span: (usize, usize), starts: &[usize]) -> bool {
    let (s, len) = span;
    // First start strictly after s.
    let i = starts.partition_point(|&x| x <= s);
    i < starts.len() && starts[i] < s + len
}

/// Encodes every piece and counts straddling tokens.
pub fn boundary_overlap(model: &BpeModel, corpus: &[AnnotatedPiece], exec: Exec) -> Result<OverlapStats> {
    if corpus.is_empty() {
        return Err(Error::invalid("boundary overlap needs a non-empty corpus"));
    }
    let per_piece = exec.map(corpus, |piece| -> Result<OverlapStats> {
        let encoded = bpe::encode(&piece.sequence, model)?;
        let spans = token_spans(&encoded.ids, model)?;
        let starts = piece.phrases.starts();
        Ok(OverlapStats {
            straddling: spans.iter().filter(|&&sp| straddles(sp, starts)).count(),
            encoded_tokens: spans.len(),
            supertokens: encoded.ids.iter().filter(|&&id| model.vocab().is_supertoken(id)).count(),
        })
    });
    let mut total = OverlapStats::default();
    for stats in per_piece {
        let s = stats?;
        total.straddling += s.straddling;
        total.encoded_tokens += s.encoded_tokens;
        total.supertokens += s.supertokens;
    }
    Ok(total)
}

/// Straddling encoded tokens over all encoded tokens.
pub fn boundary_overlap_ratio(model: &BpeModel, corpus: &[AnnotatedPiece]) -> Result<f64> {
    Ok(boundary_overlap(model, corpus, Exec::default())?.ratio())
}

/// Monte-Carlo mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Splits `0..atomic_len` at `num_chunks - 1` distinct uniform cut points
/// and counts chunks that straddle a start.
fn straddling_chunks(rng: &mut ChaCha8Rng, atomic_len: usize, num_chunks: usize, starts: &[usize]) -> usize {
    if num_chunks >= atomic_len {
        return 0;
    }
    let mut cuts: Vec<usize> = sample(rng, atomic_len - 1, num_chunks - 1)
        .into_iter()
        .map(|c| c + 1)
        .collect();
    cuts.sort_unstable();
    let mut count = 0;
    let mut lo = 0;
    for hi in cuts.into_iter().chain(std::iter::once(atomic_len)) {
        if straddles((lo, hi - lo), starts) {
            count += 1;
        }
        lo = hi;
    }
    count
}

fn validate(atomic_len: usize, num_chunks: usize, trials: usize) -> Result<()> {
    if num_chunks == 0 || num_chunks > atomic_len {
        return Err(Error::invalid(format!(
            "chunk count {num_chunks} must be between 1 and the sequence length {atomic_len}"
        )));
    }
    if trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    Ok(())
}

fn summarize(per_trial: &[f64]) -> BaselineEstimate {
    let n = per_trial.len() as f64;
    let mean = per_trial.iter().sum::<f64>() / n;
    let var = if per_trial.len() > 1 {
        per_trial.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    BaselineEstimate {
        mean,
        std_error: (var / n).sqrt(),
        trials: per_trial.len(),
    }
}

/// Mean straddling ratio of random segmentations of one piece into
/// `num_chunks` chunks. Deterministic for a given seed.
pub fn random_split_baseline(
    atomic_len: usize,
    num_chunks: usize,
    starts: &[usize],
    trials: usize,
    seed: u64,
) -> Result<f64> {
    Ok(random_split_estimate(atomic_len, num_chunks, starts, trials, seed, Exec::default())?.mean)
}

/// [`random_split_baseline`] with its standard error.
pub fn random_split_estimate(
    atomic_len: usize,
    num_chunks: usize,
    starts: &[usize],
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<BaselineEstimate> {
    validate(atomic_len, num_chunks, trials)?;
    let per_trial = exec.map_range(trials, |t| {
        let mut rng = trial_rng(seed, t as u64);
        straddling_chunks(&mut rng, atomic_len, num_chunks, starts) as f64 / num_chunks as f64
    });
    Ok(summarize(&per_trial))
}

fn piece_seed(seed: u64, piece: usize) -> u64 {
    seed ^ (piece as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Corpus-level baseline: every piece is split into as many chunks as its
/// BPE encoding has tokens, and the ratio pools chunks over the corpus.
pub fn corpus_random_split_baseline(
    model: &BpeModel,
    corpus: &[AnnotatedPiece],
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<BaselineEstimate> {
    if corpus.is_empty() {
        return Err(Error::invalid("random baseline needs a non-empty corpus"));
    }
    if trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    let chunk_counts = exec.map(corpus, |p| bpe::encode(&p.sequence, model).map(|e| e.len()));
    let chunk_counts = chunk_counts.into_iter().collect::<Result<Vec<_>>>()?;
    let total_chunks: usize = chunk_counts.iter().sum();
    if total_chunks == 0 {
        return Ok(summarize(&vec![0.0; trials]));
    }
    let per_trial = exec.map_range(trials, |t| {
        let straddling: usize = corpus
            .iter()
            .zip(&chunk_counts)
            .enumerate()
            .filter(|(_, (p, _))| !p.sequence.is_empty())
            .map(|(i, (p, &chunks))| {
                let mut rng = trial_rng(piece_seed(seed, i), t as u64);
                straddling_chunks(&mut rng, p.sequence.len(), chunks, p.phrases.starts())
            })
            .sum();
        straddling as f64 / total_chunks as f64
    });
    Ok(summarize(&per_trial))
}
