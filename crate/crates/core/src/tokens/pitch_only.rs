use super::{Alphabet, AtomicToken, TokenKind, TokenSequence, Tokenized};
use crate::{Error, Result};

pub(super) fn alphabet() -> Alphabet {
    Alphabet::new("pitch-only", (0..=127).map(AtomicToken::pitch).collect())
        .expect("pitch alphabet has unique tokens")
}

/// Keeps only the Pitch tokens of an atomic sequence, re-indexed into the
/// pitch-only alphabet.
///
/// Ids outside `source` (supertokens from an encoded sequence) are rejected.
pub fn filter_pitch_only(seq: &TokenSequence, source: &Alphabet) -> Result<TokenSequence> {
    if seq.vocab_id != source.id() {
        return Err(Error::VocabularyMismatch {
            expected: source.id().to_string(),
            found: seq.vocab_id.clone(),
        });
    }
    let target = alphabet();
    let mut ids = Vec::new();
    for (i, &id) in seq.ids.iter().enumerate() {
        let token = source.token(id).ok_or_else(|| Error::Structure {
            index: i,
            message: format!("id {id} is not atomic; encoded sequences cannot be filtered"),
        })?;
        if token.kind == TokenKind::Pitch {
            ids.push(target.expect_id(token)?);
        }
    }
    Ok(TokenSequence::new(ids, target.id(), seq.piece_id.clone()))
}

/// Filters a REMI tokenization, mapping each note to its Pitch token.
///
/// `pitch_token_index` gives each note's Pitch token position in the REMI stream.
pub(super) fn filter_with_note_map(
    remi: &Tokenized,
    pitch_token_index: &[usize],
    source: &Alphabet,
) -> Result<Tokenized> {
    let sequence = filter_pitch_only(&remi.sequence, source)?;
    let mut rank_of = vec![usize::MAX; remi.sequence.len()];
    let mut rank = 0;
    for (i, &id) in remi.sequence.ids.iter().enumerate() {
        if source.token(id).map(|t| t.kind) == Some(TokenKind::Pitch) {
            rank_of[i] = rank;
            rank += 1;
        }
    }
    Ok(Tokenized {
        sequence,
        note_token_index: pitch_token_index.iter().map(|&i| rank_of[i]).collect(),
        clamped: remi.clamped,
    })
}
