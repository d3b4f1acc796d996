use std::collections::HashMap;

use super::{token_spans, AnnotatedPiece};
use crate::bpe::{self, BpeModel};
use crate::{Error, Exec, Result};

/// Which phrase edge to rank supertokens at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    /// Span begins exactly on a phrase start.
    Start,
    /// Span ends on the last atomic position of a phrase.
    End,
}

/// The `k` supertokens most often found at phrase starts (or ends), with
/// their counts. Ties are broken by ascending token id.
pub fn top_boundary_supertokens(
    model: &BpeModel,
    corpus: &[AnnotatedPiece],
    k: usize,
    which: Boundary,
    exec: Exec,
) -> Result<Vec<(u32, u64)>> {
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    let per_piece = exec.map(corpus, |piece| -> Result<Vec<u32>> {
        let encoded = bpe::encode(&piece.sequence, model)?;
        let spans = token_spans(&encoded.ids, model)?;
        let starts = piece.phrases.starts();
        let len = piece.sequence.len();
        let hits = encoded
            .ids
            .iter()
            .zip(&spans)
            .filter(|(&id, _)| model.vocab().is_supertoken(id))
            .filter(|(_, &(s, l))| match which {
                Boundary::Start => starts.binary_search(&s).is_ok(),
                Boundary::End => s + l == len || starts.binary_search(&(s + l)).is_ok(),
            })
            .map(|(&id, _)| id)
            .collect();
        Ok(hits)
    });
    let mut counts: HashMap<u32, u64> = HashMap::new();
    for hits in per_piece {
        for id in hits? {
            *counts.entry(id).or_default() += 1;
        }
    }
    let mut ranked: Vec<(u32, u64)> = counts.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(k);
    Ok(ranked)
}
