use std::collections::HashMap;

use super::{BpeModel, Pair};
use crate::tokens::TokenSequence;
use crate::{Error, Result};

/// Applies the model's merges in training order.
///
/// Each rule replaces all of its occurrences left to right before the next
/// rule is considered. Rules whose pair is absent are skipped, which lets
/// the loop jump straight to the lowest-ranked pair present: a merge only
/// creates adjacencies involving its new id, and every rule that uses that
/// id ranks later.
pub fn encode(seq: &TokenSequence, model: &BpeModel) -> Result<TokenSequence> {
    model.check_vocab(&seq.vocab_id, false)?;
    let ids = encode_ids(&seq.ids, model)?;
    Ok(TokenSequence::new(ids, model.encoded_vocab_id(), seq.piece_id.clone()))
}

/// [`encode`] on bare ids.
pub fn encode_ids(ids: &[u32], model: &BpeModel) -> Result<Vec<u32>> {
    let atoms = model.vocab().atom_count() as u32;
    if let Some(&id) = ids.iter().find(|&&id| id >= atoms) {
        return Err(Error::UnknownToken { id });
    }
    let ranks = rank_table(model);
    let mut current = ids.to_vec();
    loop {
        let best = current
            .windows(2)
            .filter_map(|w| ranks.get(&(w[0], w[1])).copied())
            .min();
        let Some(rank) = best else {
            break;
        };
        let rule = model.merges()[rank];
        let mut next = Vec::with_capacity(current.len());
        let mut i = 0;
        while i < current.len() {
            if i + 1 < current.len() && (current[i], current[i + 1]) == rule.pair {
                next.push(rule.new_id);
                i += 2;
            } else {
                next.push(current[i]);
                i += 1;
            }
        }
        current = next;
    }
    Ok(current)
}

fn rank_table(model: &BpeModel) -> HashMap<Pair, usize> {
    model
        .merges()
        .iter()
        .enumerate()
        .map(|(rank, m)| (m.pair, rank))
        .collect()
}

/// Expands every id to its atomic elements.
pub fn decode(seq: &TokenSequence, model: &BpeModel) -> Result<TokenSequence> {
    model.check_vocab(&seq.vocab_id, true)?;
    let mut out = Vec::with_capacity(seq.ids.len());
    for &id in &seq.ids {
        model.vocab().expand_into(id, &mut out)?;
    }
    Ok(TokenSequence::new(out, model.alphabet().id(), seq.piece_id.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpe::{MergeRule, TrainingMeta};
    use crate::tokens::{Alphabet, AtomicToken};

    fn model(merges: &[(Pair, u32)]) -> BpeModel {
        let alphabet = Alphabet::new("ab", vec![AtomicToken::pitch(0), AtomicToken::pitch(1)]).unwrap();
        let rules = merges
            .iter()
            .map(|&(pair, new_id)| MergeRule {
                pair,
                new_id,
                count_at_merge: 2,
            })
            .collect();
        BpeModel::from_merges(alphabet, rules, TrainingMeta::default()).unwrap()
    }

    #[test]
    fn identity_without_merges() {
        let m = model(&[]);
        let s = TokenSequence::new(vec![0, 1, 1, 0], "ab", "p");
        assert_eq!(encode(&s, &m).unwrap(), s);
        assert_eq!(decode(&s, &m).unwrap(), s);
    }

    #[test]
    fn direct_substitution() {
        let m = model(&[((0, 1), 2)]);
        let s = TokenSequence::new(vec![0, 1, 0, 1], "ab", "p");
        let e = encode(&s, &m).unwrap();
        assert_eq!(e.ids, vec![2, 2]);
        assert_eq!(decode(&e, &m).unwrap(), s);
    }

    #[test]
    fn decode_supertoken() {
        let m = model(&[((0, 1), 2)]);
        let s = TokenSequence::new(vec![2], m.encoded_vocab_id(), "p");
        assert_eq!(decode(&s, &m).unwrap().ids, vec![0, 1]);
    }

    #[test]
    fn unknown_ids() {
        let m = model(&[((0, 1), 2)]);
        assert!(matches!(
            encode(&TokenSequence::new(vec![2], "ab", "p"), &m),
            Err(Error::UnknownToken { id: 2 })
        ));
        assert!(matches!(
            decode(&TokenSequence::new(vec![3], "ab", "p"), &m),
            Err(Error::UnknownToken { id: 3 })
        ));
        assert!(matches!(
            encode(&TokenSequence::new(vec![0], "xy", "p"), &m),
            Err(Error::VocabularyMismatch { .. })
        ));
    }

    #[test]
    fn runs_merge_left_to_right() {
        let alphabet = Alphabet::new("a", vec![AtomicToken::pitch(0)]).unwrap();
        let m = BpeModel::from_merges(
            alphabet,
            vec![MergeRule {
                pair: (0, 0),
                new_id: 1,
                count_at_merge: 2,
            }],
            TrainingMeta::default(),
        )
        .unwrap();
        assert_eq!(encode_ids(&[0, 0, 0], &m).unwrap(), vec![1, 0]);
    }
}
