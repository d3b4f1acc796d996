//! Structured tokenization with pitches as intervals: one
//! `Duration, TShift, PitchInterval` triplet per note of a monophonic line.

use num_traits::Zero;

use super::{Alphabet, AtomicToken, TokenKind, TokenSequence, Tokenized};
use crate::score::{first_overlap, Beats, NoteEvent, Score, DEFAULT_RESOLUTION};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuredConfig {
    /// Positions per beat.
    pub resolution: u32,
    /// Largest Duration/TShift payload in grid units.
    pub max_bins: u32,
    /// Largest absolute interval in semitones.
    pub max_interval: u32,
}

impl Default for StructuredConfig {
    fn default() -> Self {
        StructuredConfig {
            resolution: DEFAULT_RESOLUTION,
            max_bins: 32,
            max_interval: 48,
        }
    }
}

impl StructuredConfig {
    pub fn alphabet(&self) -> Alphabet {
        let bins = self.max_bins as i32;
        let span = self.max_interval as i32;
        let mut tokens: Vec<AtomicToken> = (1..=bins).map(AtomicToken::duration).collect();
        // TShift(0) only occurs for a first note starting on beat 0.
        tokens.extend((0..=bins).map(AtomicToken::time_shift));
        tokens.extend((-span..=span).map(AtomicToken::interval));
        let id = format!(
            "structured-intervals:res={}:bins={}:interval={}",
            self.resolution, self.max_bins, self.max_interval
        );
        Alphabet::new(id, tokens).expect("structured alphabet has unique tokens")
    }
}

/// Tokenizes a quantized monophonic score.
///
/// Each note yields `Duration(d)`, `TShift(t)`, `PitchInterval(i)` where `t`
/// is the distance from the previous onset (from beat 0 for the first note)
/// and `i` the pitch change from the previous note (0 for the first note).
/// Out-of-range payloads are clamped and counted.
pub fn tokenize_structured_intervals(
    score: &Score,
    config: &StructuredConfig,
    piece_id: &str,
) -> Result<Tokenized> {
    let alphabet = config.alphabet();
    if !score.is_on_grid(config.resolution) {
        return Err(Error::invalid(format!(
            "score is not quantized at resolution {}",
            config.resolution
        )));
    }
    let notes = score.notes();
    if let Some((first, second)) = first_overlap(notes) {
        return Err(Error::Polyphonic { first, second });
    }
    let res = i64::from(config.resolution);
    let bins = i64::from(config.max_bins);
    let span = i64::from(config.max_interval);
    let mut ids = Vec::with_capacity(notes.len() * 3);
    let mut note_token_index = Vec::with_capacity(notes.len());
    let mut clamped = 0;
    let mut clamp = |v: i64, lo: i64, hi: i64| {
        if v < lo || v > hi {
            clamped += 1;
        }
        v.clamp(lo, hi)
    };

    let mut prev: Option<&NoteEvent> = None;
    for note in notes {
        let d = clamp((note.duration * res).to_integer(), 1, bins);
        let since = prev.map_or(Beats::zero(), |p| p.onset);
        let t = clamp(((note.onset - since) * res).to_integer(), 0, bins);
        let i = clamp(
            prev.map_or(0, |p| i64::from(note.pitch) - i64::from(p.pitch)),
            -span,
            span,
        );
        note_token_index.push(ids.len());
        ids.push(alphabet.expect_id(AtomicToken::duration(d as i32))?);
        ids.push(alphabet.expect_id(AtomicToken::time_shift(t as i32))?);
        ids.push(alphabet.expect_id(AtomicToken::interval(i as i32))?);
        prev = Some(note);
    }

    Ok(Tokenized {
        sequence: TokenSequence::new(ids, alphabet.id(), piece_id),
        note_token_index,
        clamped,
    })
}

/// Rebuilds a melody from triplets, given the absolute pitch of its first note.
pub fn detokenize_structured(seq: &TokenSequence, config: &StructuredConfig, first_pitch: u8) -> Result<Score> {
    let alphabet = config.alphabet();
    if seq.vocab_id != alphabet.id() {
        return Err(Error::VocabularyMismatch {
            expected: alphabet.id().to_string(),
            found: seq.vocab_id.clone(),
        });
    }
    let tokens = alphabet.resolve(&seq.ids)?;
    if tokens.len() % 3 != 0 {
        return Err(Error::Structure {
            index: tokens.len() - tokens.len() % 3,
            message: "incomplete triplet at end of sequence".into(),
        });
    }
    let res = i64::from(config.resolution);
    let mut notes = Vec::with_capacity(tokens.len() / 3);
    let mut onset = Beats::zero();
    let mut pitch = i64::from(first_pitch);
    for (n, triplet) in tokens.chunks(3).enumerate() {
        let expected = [TokenKind::Duration, TokenKind::TimeShift, TokenKind::PitchInterval];
        for (k, (t, kind)) in triplet.iter().zip(expected).enumerate() {
            if t.kind != kind {
                return Err(Error::Structure {
                    index: n * 3 + k,
                    message: format!("expected {}, found {t}", kind.label()),
                });
            }
        }
        onset += Beats::new(i64::from(triplet[1].value), res);
        if n > 0 {
            pitch += i64::from(triplet[2].value);
        }
        let p = u8::try_from(pitch).ok().filter(|p| *p <= 127).ok_or_else(|| Error::Structure {
            index: n * 3 + 2,
            message: format!("reconstructed pitch {pitch} outside 0..=127"),
        })?;
        notes.push(NoteEvent {
            pitch: p,
            onset,
            duration: Beats::new(i64::from(triplet[0].value), res),
            track: 0,
        });
    }
    Score::new(notes, Vec::new(), Some(config.resolution))
}
