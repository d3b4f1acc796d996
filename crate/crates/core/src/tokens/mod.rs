//! Atomic token types, alphabets and the two tokenization schemes.

mod pitch_only;
mod remi;
mod structured;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub use pitch_only::filter_pitch_only;
pub use remi::{detokenize_remi, tokenize_remi, RemiConfig};
pub use structured::{detokenize_structured, tokenize_structured_intervals, StructuredConfig};

/// The kinds of atomic element. There is deliberately no velocity kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TokenKind {
    Bar,
    Position,
    Pitch,
    Duration,
    TimeShift,
    PitchInterval,
}

impl TokenKind {
    /// Name used in text dumps.
    pub fn label(self) -> &'static str {
        match self {
            TokenKind::Bar => "Bar",
            TokenKind::Position => "Position",
            TokenKind::Pitch => "Pitch",
            TokenKind::Duration => "Duration",
            TokenKind::TimeShift => "TShift",
            TokenKind::PitchInterval => "PitchInterval",
        }
    }

    fn from_label(s: &str) -> Option<Self> {
        Some(match s {
            "Bar" => TokenKind::Bar,
            "Position" => TokenKind::Position,
            "Pitch" => TokenKind::Pitch,
            "Duration" => TokenKind::Duration,
            "TShift" => TokenKind::TimeShift,
            "PitchInterval" => TokenKind::PitchInterval,
            _ => return None,
        })
    }
}

/// A tagged symbolic unit with an integer payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AtomicToken {
    pub kind: TokenKind,
    pub value: i32,
}

impl AtomicToken {
    pub const BAR: AtomicToken = AtomicToken {
        kind: TokenKind::Bar,
        value: 0,
    };

    pub fn new(kind: TokenKind, value: i32) -> Self {
        AtomicToken { kind, value }
    }

    pub fn position(v: i32) -> Self {
        Self::new(TokenKind::Position, v)
    }

    pub fn pitch(v: i32) -> Self {
        Self::new(TokenKind::Pitch, v)
    }

    pub fn duration(v: i32) -> Self {
        Self::new(TokenKind::Duration, v)
    }

    pub fn time_shift(v: i32) -> Self {
        Self::new(TokenKind::TimeShift, v)
    }

    pub fn interval(v: i32) -> Self {
        Self::new(TokenKind::PitchInterval, v)
    }
}

/// `Bar`, `Position(3)`, `TShift(4)`, `PitchInterval(+5)`, `PitchInterval(-3)`.
impl fmt::Display for AtomicToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TokenKind::Bar => f.write_str("Bar"),
            TokenKind::PitchInterval if self.value > 0 => write!(f, "PitchInterval(+{})", self.value),
            kind => write!(f, "{}({})", kind.label(), self.value),
        }
    }
}

impl FromStr for AtomicToken {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("unrecognized token `{s}`"));
        if s == "Bar" {
            return Ok(AtomicToken::BAR);
        }
        let (label, rest) = s.split_once('(').ok_or_else(bad)?;
        let payload = rest.strip_suffix(')').ok_or_else(bad)?;
        let kind = TokenKind::from_label(label).filter(|k| *k != TokenKind::Bar).ok_or_else(bad)?;
        let value: i32 = payload.parse().map_err(|_| bad())?;
        Ok(AtomicToken { kind, value })
    }
}

impl TryFrom<String> for AtomicToken {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AtomicToken> for String {
    fn from(t: AtomicToken) -> String {
        t.to_string()
    }
}

/// An initial vocabulary: atomic tokens indexed by id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    id: String,
    tokens: Vec<AtomicToken>,
    index: HashMap<AtomicToken, u32>,
}

impl Alphabet {
    pub fn new(id: impl Into<String>, tokens: Vec<AtomicToken>) -> Result<Self> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(*t, i as u32).is_some() {
                return Err(Error::invalid(format!("duplicate token {t} in alphabet")));
            }
        }
        Ok(Alphabet {
            id: id.into(),
            tokens,
            index,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tokens(&self) -> &[AtomicToken] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id_of(&self, token: AtomicToken) -> Option<u32> {
        self.index.get(&token).copied()
    }

    pub fn token(&self, id: u32) -> Option<AtomicToken> {
        self.tokens.get(id as usize).copied()
    }

    pub fn contains_kind(&self, kind: TokenKind) -> bool {
        self.tokens.iter().any(|t| t.kind == kind)
    }

    /// Short stable hash of the alphabet definition, stored in model files.
    pub fn config_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.id.as_bytes());
        for t in &self.tokens {
            h.update(t.to_string().as_bytes());
            h.update(b"\n");
        }
        hex::encode(&h.finalize()[..8])
    }

    pub(crate) fn expect_id(&self, token: AtomicToken) -> Result<u32> {
        self.id_of(token)
            .ok_or_else(|| Error::invalid(format!("token {token} is outside alphabet `{}`", self.id)))
    }

    /// Decodes ids to tokens, failing on ids outside the alphabet.
    pub fn resolve(&self, ids: &[u32]) -> Result<Vec<AtomicToken>> {
        ids.iter()
            .map(|&id| self.token(id).ok_or(Error::UnknownToken { id }))
            .collect()
    }

    /// Renders ids as `Kind(value)` strings.
    pub fn render(&self, ids: &[u32]) -> Result<Vec<String>> {
        Ok(self.resolve(ids)?.iter().map(ToString::to_string).collect())
    }
}

/// One piece's token ids together with the vocabulary they index into.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
    pub vocab_id: String,
    pub piece_id: String,
}

impl TokenSequence {
    pub fn new(ids: Vec<u32>, vocab_id: impl Into<String>, piece_id: impl Into<String>) -> Self {
        TokenSequence {
            ids,
            vocab_id: vocab_id.into(),
            piece_id: piece_id.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Tokenizer output: the sequence plus bookkeeping used by phrase alignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tokenized {
    pub sequence: TokenSequence,
    /// For each note of the input score (score order), the index of the
    /// first token emitted for it.
    pub note_token_index: Vec<usize>,
    /// Payloads clamped to the alphabet's range.
    pub clamped: usize,
}

/// Which tokenization to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Remi,
    StructuredIntervals,
    /// REMI followed by the pitch-only filter.
    PitchOnly,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "remi" => Ok(Scheme::Remi),
            "structured-intervals" => Ok(Scheme::StructuredIntervals),
            "pitch-only" => Ok(Scheme::PitchOnly),
            _ => Err(Error::invalid(format!("unknown scheme `{s}`"))),
        }
    }
}

/// A scheme with its parameters, able to build its alphabet and tokenize.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tokenizer {
    pub scheme: Scheme,
    pub resolution: u32,
}

impl Tokenizer {
    pub fn new(scheme: Scheme, resolution: u32) -> Self {
        Tokenizer { scheme, resolution }
    }

    pub fn remi_config(&self) -> RemiConfig {
        RemiConfig {
            resolution: self.resolution,
            ..RemiConfig::default()
        }
    }

    pub fn structured_config(&self) -> StructuredConfig {
        StructuredConfig {
            resolution: self.resolution,
            ..StructuredConfig::default()
        }
    }

    pub fn alphabet(&self) -> Alphabet {
        match self.scheme {
            Scheme::Remi => self.remi_config().alphabet(),
            Scheme::StructuredIntervals => self.structured_config().alphabet(),
            Scheme::PitchOnly => pitch_only::alphabet(),
        }
    }

    /// Tokenizes an already quantized score.
    pub fn tokenize(&self, score: &crate::score::Score, piece_id: &str) -> Result<Tokenized> {
        match self.scheme {
            Scheme::Remi => tokenize_remi(score, &self.remi_config(), piece_id),
            Scheme::StructuredIntervals => {
                tokenize_structured_intervals(score, &self.structured_config(), piece_id)
            }
            Scheme::PitchOnly => {
                let cfg = self.remi_config();
                let (remi, pitch_index) = remi::tokenize_remi_detailed(score, &cfg, piece_id)?;
                pitch_only::filter_with_note_map(&remi, &pitch_index, &cfg.alphabet())
            }
        }
    }
}

/// Rebuilds a built-in alphabet from its id string.
pub fn alphabet_from_id(id: &str) -> Result<Alphabet> {
    let unknown = || Error::invalid(format!("unrecognized vocabulary id `{id}`"));
    let mut parts = id.split(':');
    let scheme = parts.next().ok_or_else(unknown)?;
    let mut fields = HashMap::new();
    for part in parts {
        let (k, v) = part.split_once('=').ok_or_else(unknown)?;
        let v: u32 = v.parse().map_err(|_| unknown())?;
        fields.insert(k, v);
    }
    let get = |k: &str| fields.get(k).copied().ok_or_else(unknown);
    let alphabet = match scheme {
        "pitch-only" => pitch_only::alphabet(),
        "remi" => {
            let resolution = get("res")?;
            let positions = get("positions")?;
            if resolution == 0 || positions % resolution != 0 {
                return Err(unknown());
            }
            RemiConfig {
                resolution,
                max_bins: get("bins")?,
                max_bar_beats: positions / resolution,
                meter: Vec::new(),
            }
            .alphabet()
        }
        "structured-intervals" => StructuredConfig {
            resolution: get("res")?,
            max_bins: get("bins")?,
            max_interval: get("interval")?,
        }
        .alphabet(),
        _ => return Err(unknown()),
    };
    if alphabet.id() != id {
        return Err(unknown());
    }
    Ok(alphabet)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alphabets_rebuild_from_ids() {
        for scheme in [Scheme::Remi, Scheme::StructuredIntervals, Scheme::PitchOnly] {
            let a = Tokenizer::new(scheme, 4).alphabet();
            assert_eq!(alphabet_from_id(a.id()).unwrap(), a);
        }
        assert!(alphabet_from_id("remi:res=4").is_err());
        assert!(alphabet_from_id("bytes").is_err());
    }

    #[test]
    fn display_round_trip() {
        for t in [
            AtomicToken::BAR,
            AtomicToken::position(0),
            AtomicToken::pitch(60),
            AtomicToken::duration(4),
            AtomicToken::time_shift(4),
            AtomicToken::interval(5),
            AtomicToken::interval(-3),
            AtomicToken::interval(0),
        ] {
            assert_eq!(t.to_string().parse::<AtomicToken>().unwrap(), t);
        }
        assert_eq!(AtomicToken::time_shift(4).to_string(), "TShift(4)");
        assert_eq!(AtomicToken::interval(5).to_string(), "PitchInterval(+5)");
        assert_eq!(AtomicToken::interval(-5).to_string(), "PitchInterval(-5)");
        assert!("Velocity(80)".parse::<AtomicToken>().is_err());
        assert!("Pitch(x)".parse::<AtomicToken>().is_err());
    }

    #[test]
    fn alphabet_rejects_duplicates() {
        assert!(Alphabet::new("x", vec![AtomicToken::BAR, AtomicToken::BAR]).is_err());
    }
}
