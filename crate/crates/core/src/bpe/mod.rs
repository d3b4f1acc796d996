//! Byte-pair encoding over atomic token sequences.
//!
//! Atomic elements are the ids of an [`Alphabet`]; supertoken `k` gets id
//! `alphabet.len() + k` and expands to the concatenation of its two parts.

mod codec;
mod io;
mod train;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::tokens::{Alphabet, AtomicToken, TokenKind};
use crate::{Error, Result};

pub use codec::{decode, encode, encode_ids};
pub use io::{load_model, save_model, MODEL_FORMAT, MODEL_VERSION};
pub use train::{count_pairs, train, train_with, TieBreak, TrainOptions};

/// A pair of adjacent token ids.
pub type Pair = (u32, u32);

/// One learned merge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MergeRule {
    pub pair: Pair,
    pub new_id: u32,
    /// Non-overlapping occurrences of `pair` in the corpus when it was merged.
    pub count_at_merge: u64,
}

/// Atomic alphabet plus the supertokens built on top of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    alphabet: Alphabet,
    supertokens: Vec<Pair>,
    lengths: Vec<usize>,
}

impl Vocabulary {
    pub fn new(alphabet: Alphabet) -> Self {
        let lengths = vec![1; alphabet.len()];
        Vocabulary {
            alphabet,
            supertokens: Vec::new(),
            lengths,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn atoms(&self) -> &[AtomicToken] {
        self.alphabet.tokens()
    }

    pub fn atom_count(&self) -> usize {
        self.alphabet.len()
    }

    pub fn supertokens(&self) -> &[Pair] {
        &self.supertokens
    }

    /// Atoms plus supertokens.
    pub fn len(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    pub fn contains(&self, id: u32) -> bool {
        (id as usize) < self.len()
    }

    pub fn is_supertoken(&self, id: u32) -> bool {
        (id as usize) >= self.atom_count() && self.contains(id)
    }

    /// Adds a supertoken for `pair` and returns its id.
    pub(crate) fn push(&mut self, pair: Pair) -> Result<u32> {
        let next = self.len() as u32;
        if pair.0 >= next || pair.1 >= next {
            return Err(Error::invalid(format!(
                "merge ({}, {}) references an id not created before {next}",
                pair.0, pair.1
            )));
        }
        self.lengths
            .push(self.lengths[pair.0 as usize] + self.lengths[pair.1 as usize]);
        self.supertokens.push(pair);
        Ok(next)
    }

    /// Number of atomic elements `id` expands to.
    pub fn expansion_len(&self, id: u32) -> Option<usize> {
        self.lengths.get(id as usize).copied()
    }

    /// Appends the atomic expansion of `id` to `out`.
    pub fn expand_into(&self, id: u32, out: &mut Vec<u32>) -> Result<()> {
        if !self.contains(id) {
            return Err(Error::UnknownToken { id });
        }
        let atoms = self.atom_count() as u32;
        let mut stack = vec![id];
        while let Some(t) = stack.pop() {
            if t < atoms {
                out.push(t);
            } else {
                let (l, r) = self.supertokens[(t - atoms) as usize];
                stack.push(r);
                stack.push(l);
            }
        }
        Ok(())
    }

    pub fn expansion(&self, id: u32) -> Result<Vec<u32>> {
        let mut out = Vec::with_capacity(self.expansion_len(id).unwrap_or(0));
        self.expand_into(id, &mut out)?;
        Ok(out)
    }

    /// Atomic tokens of `id`'s expansion.
    pub fn expansion_tokens(&self, id: u32) -> Result<Vec<AtomicToken>> {
        self.alphabet.resolve(&self.expansion(id)?)
    }

    /// Count of atoms of `kind` inside `id`'s expansion.
    pub fn kind_count(&self, id: u32, kind: TokenKind) -> Result<usize> {
        Ok(self.expansion_tokens(id)?.iter().filter(|t| t.kind == kind).count())
    }

    /// `Pitch(60)` for atoms, `<Duration(4), TShift(4), PitchInterval(+5)>` for supertokens.
    pub fn render(&self, id: u32) -> Result<String> {
        let tokens = self.expansion_tokens(id)?;
        if self.is_supertoken(id) {
            let parts: Vec<String> = tokens.iter().map(ToString::to_string).collect();
            Ok(format!("<{}>", parts.join(", ")))
        } else {
            Ok(tokens[0].to_string())
        }
    }
}

/// Provenance recorded with a trained model.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingMeta {
    pub corpus_name: String,
    pub requested_merges: usize,
    /// Total atomic tokens in the training corpus.
    pub initial_corpus_length: usize,
    pub tokenizer_config_hash: String,
}

/// A trained merge table. Immutable once built; safe to share across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    vocab: Vocabulary,
    merges: Vec<MergeRule>,
    meta: TrainingMeta,
}

impl BpeModel {
    /// Assembles a model from merges in creation order, checking every
    /// structural invariant.
    pub fn from_merges(alphabet: Alphabet, merges: Vec<MergeRule>, meta: TrainingMeta) -> Result<Self> {
        let mut vocab = Vocabulary::new(alphabet);
        for rule in &merges {
            if rule.count_at_merge < 2 {
                return Err(Error::invalid(format!(
                    "merge creating {} has count {} < 2",
                    rule.new_id, rule.count_at_merge
                )));
            }
            let id = vocab.push(rule.pair)?;
            if id != rule.new_id {
                return Err(Error::invalid(format!(
                    "merge expected to create id {id} but records {}",
                    rule.new_id
                )));
            }
        }
        Ok(BpeModel { vocab, merges, meta })
    }

    /// A model with no merges over `alphabet`.
    pub fn identity(alphabet: Alphabet) -> Self {
        let meta = TrainingMeta {
            tokenizer_config_hash: alphabet.config_hash(),
            ..TrainingMeta::default()
        };
        BpeModel {
            vocab: Vocabulary::new(alphabet),
            merges: Vec::new(),
            meta,
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn alphabet(&self) -> &Alphabet {
        self.vocab.alphabet()
    }

    pub fn merges(&self) -> &[MergeRule] {
        &self.merges
    }

    pub fn meta(&self) -> &TrainingMeta {
        &self.meta
    }

    /// Vocabulary id carried by encoded sequences. Equal to the alphabet id
    /// when there are no merges, so encoding is then an exact identity.
    pub fn encoded_vocab_id(&self) -> String {
        if self.merges.is_empty() {
            return self.alphabet().id().to_string();
        }
        let mut h = Sha256::new();
        for m in &self.merges {
            h.update(m.pair.0.to_le_bytes());
            h.update(m.pair.1.to_le_bytes());
        }
        let digest = h.finalize();
        format!(
            "{}+bpe{}@{}",
            self.alphabet().id(),
            self.merges.len(),
            hex::encode(&digest[..4])
        )
    }

    /// Accepts either the alphabet id or this model's encoded id.
    pub(crate) fn check_vocab(&self, vocab_id: &str, allow_encoded: bool) -> Result<()> {
        if vocab_id == self.alphabet().id() || (allow_encoded && vocab_id == self.encoded_vocab_id()) {
            Ok(())
        } else {
            Err(Error::VocabularyMismatch {
                expected: self.alphabet().id().to_string(),
                found: vocab_id.to_string(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn ab_alphabet() -> Alphabet {
        Alphabet::new("ab", vec![AtomicToken::pitch(0), AtomicToken::pitch(1)]).unwrap()
    }

    #[test]
    fn expansion_is_concatenation() {
        let merges = vec![
            MergeRule {
                pair: (0, 1),
                new_id: 2,
                count_at_merge: 3,
            },
            MergeRule {
                pair: (2, 0),
                new_id: 3,
                count_at_merge: 2,
            },
        ];
        let m = BpeModel::from_merges(ab_alphabet(), merges, TrainingMeta::default()).unwrap();
        assert_eq!(m.vocab().expansion(3).unwrap(), vec![0, 1, 0]);
        assert_eq!(m.vocab().expansion_len(3), Some(3));
        assert_eq!(m.vocab().render(3).unwrap(), "<Pitch(0), Pitch(1), Pitch(0)>");
        assert_eq!(m.vocab().render(1).unwrap(), "Pitch(1)");
    }

    #[test]
    fn invalid_merge_tables() {
        let forward = vec![MergeRule {
            pair: (0, 2),
            new_id: 2,
            count_at_merge: 2,
        }];
        assert!(BpeModel::from_merges(ab_alphabet(), forward, TrainingMeta::default()).is_err());
        let rare = vec![MergeRule {
            pair: (0, 1),
            new_id: 2,
            count_at_merge: 1,
        }];
        assert!(BpeModel::from_merges(ab_alphabet(), rare, TrainingMeta::default()).is_err());
        let wrong_id = vec![MergeRule {
            pair: (0, 1),
            new_id: 5,
            count_at_merge: 2,
        }];
        assert!(BpeModel::from_merges(ab_alphabet(), wrong_id, TrainingMeta::default()).is_err());
    }
}
