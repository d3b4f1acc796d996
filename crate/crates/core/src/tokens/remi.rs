//! REMI without velocity: `Bar`, `Position`, then `Pitch`/`Duration` per note.

use num_traits::Zero;

use super::{Alphabet, AtomicToken, TokenKind, TokenSequence, Tokenized};
use crate::score::{Beats, Meter, NoteEvent, Score, TimeSignature, DEFAULT_RESOLUTION};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemiConfig {
    /// Positions per beat.
    pub resolution: u32,
    /// Largest duration payload in grid units; longer notes are clamped.
    pub max_bins: u32,
    /// Longest supported bar, in beats. Sets the Position range.
    pub max_bar_beats: u32,
    /// Meter used to place bars when detokenizing (REMI carries no meter).
    /// Empty means 4/4 throughout.
    pub meter: Vec<TimeSignature>,
}

impl Default for RemiConfig {
    fn default() -> Self {
        RemiConfig {
            resolution: DEFAULT_RESOLUTION,
            max_bins: 32,
            max_bar_beats: 8,
            meter: Vec::new(),
        }
    }
}

impl RemiConfig {
    pub fn max_positions(&self) -> u32 {
        self.resolution * self.max_bar_beats
    }

    pub fn alphabet(&self) -> Alphabet {
        let mut tokens = vec![AtomicToken::BAR];
        tokens.extend((0..self.max_positions() as i32).map(AtomicToken::position));
        tokens.extend((0..=127).map(AtomicToken::pitch));
        tokens.extend((1..=self.max_bins as i32).map(AtomicToken::duration));
        let id = format!(
            "remi:res={}:bins={}:positions={}",
            self.resolution,
            self.max_bins,
            self.max_positions()
        );
        Alphabet::new(id, tokens).expect("REMI alphabet has unique tokens")
    }
}

/// Tokenizes a quantized score.
///
/// Tracks are flattened into one stream. `Bar` is emitted for every bar from
/// bar 0 through the bar of the last onset, including empty bars; a
/// `Position` precedes each distinct onset within a bar; notes sharing an
/// onset follow in ascending pitch, then duration. Durations beyond
/// `max_bins` are clamped and counted in [`Tokenized::clamped`].
pub fn tokenize_remi(score: &Score, config: &RemiConfig, piece_id: &str) -> Result<Tokenized> {
    tokenize_remi_detailed(score, config, piece_id).map(|(t, _)| t)
}

/// Also returns, per note, the index of its Pitch token.
pub(super) fn tokenize_remi_detailed(
    score: &Score,
    config: &RemiConfig,
    piece_id: &str,
) -> Result<(Tokenized, Vec<usize>)> {
    let alphabet = config.alphabet();
    if !score.is_on_grid(config.resolution) {
        return Err(Error::invalid(format!(
            "score is not quantized at resolution {}",
            config.resolution
        )));
    }
    let res = i64::from(config.resolution);
    let notes = score.notes();
    let mut note_token_index = vec![0; notes.len()];
    let mut pitch_token_index = vec![0; notes.len()];
    let mut ids = Vec::new();
    let mut clamped = 0;
    if notes.is_empty() {
        let t = Tokenized {
            sequence: TokenSequence::new(ids, alphabet.id(), piece_id),
            note_token_index,
            clamped,
        };
        return Ok((t, pitch_token_index));
    }

    let mut order: Vec<usize> = (0..notes.len()).collect();
    order.sort_by_key(|&i| (notes[i].onset, notes[i].pitch, notes[i].duration, notes[i].track));

    let last_onset = notes.iter().map(|n| n.onset).max().expect("non-empty");
    let bars = score.meter().bars_through(last_onset);
    let bar_id = alphabet.expect_id(AtomicToken::BAR)?;

    let mut cursor = 0;
    for bar in &bars {
        ids.push(bar_id);
        let bar_end = bar.start + bar.length;
        let mut current_onset: Option<Beats> = None;
        let mut position_index = 0;
        while cursor < order.len() && notes[order[cursor]].onset < bar_end {
            let idx = order[cursor];
            let note = &notes[idx];
            if current_onset != Some(note.onset) {
                let offset = (note.onset - bar.start) * res;
                if !offset.is_integer() {
                    return Err(Error::invalid(format!(
                        "bar {} does not start on the 1/{} beat grid",
                        bar.index, config.resolution
                    )));
                }
                let pos = offset.to_integer();
                if pos >= i64::from(config.max_positions()) {
                    return Err(Error::invalid(format!(
                        "position {pos} exceeds the {} positions per bar supported",
                        config.max_positions()
                    )));
                }
                position_index = ids.len();
                ids.push(alphabet.expect_id(AtomicToken::position(pos as i32))?);
                current_onset = Some(note.onset);
            }
            note_token_index[idx] = position_index;
            pitch_token_index[idx] = ids.len();
            ids.push(alphabet.expect_id(AtomicToken::pitch(i32::from(note.pitch)))?);
            let mut d = (note.duration * res).to_integer();
            if d > i64::from(config.max_bins) {
                d = i64::from(config.max_bins);
                clamped += 1;
            }
            ids.push(alphabet.expect_id(AtomicToken::duration(d as i32))?);
            cursor += 1;
        }
    }
    debug_assert_eq!(cursor, order.len());

    let t = Tokenized {
        sequence: TokenSequence::new(ids, alphabet.id(), piece_id),
        note_token_index,
        clamped,
    };
    Ok((t, pitch_token_index))
}

/// Rebuilds a single-track score from a REMI sequence, placing bars with
/// `config.meter`.
pub fn detokenize_remi(seq: &TokenSequence, config: &RemiConfig) -> Result<Score> {
    let alphabet = config.alphabet();
    if seq.vocab_id != alphabet.id() {
        return Err(Error::VocabularyMismatch {
            expected: alphabet.id().to_string(),
            found: seq.vocab_id.clone(),
        });
    }
    let tokens = alphabet.resolve(&seq.ids)?;
    let bar_count = tokens.iter().filter(|t| t.kind == TokenKind::Bar).count();
    let bars = Meter::new(&config.meter).first_bars(bar_count);
    let res = i64::from(config.resolution);

    let mut bar: Option<usize> = None;
    let mut onset: Option<Beats> = None;
    let mut pending: Option<(u8, usize)> = None;
    let mut notes = Vec::new();

    let structure = |index: usize, message: &str| Error::Structure {
        index,
        message: message.to_string(),
    };

    for (i, t) in tokens.iter().enumerate() {
        if t.kind != TokenKind::Duration {
            if let Some((_, at)) = pending {
                return Err(structure(at, "Pitch without a following Duration"));
            }
        }
        match t.kind {
            TokenKind::Bar => {
                bar = Some(bar.map_or(0, |b| b + 1));
                onset = None;
            }
            TokenKind::Position => {
                let b = bar.ok_or_else(|| structure(i, "Position without a preceding Bar"))?;
                let pos = Beats::new(i64::from(t.value), res);
                if pos >= bars[b].length && !bars[b].length.is_zero() {
                    return Err(structure(i, "Position beyond the end of its bar"));
                }
                onset = Some(bars[b].start + pos);
            }
            TokenKind::Pitch => {
                if onset.is_none() {
                    return Err(structure(i, "Pitch without a preceding Position"));
                }
                pending = Some((t.value as u8, i));
            }
            TokenKind::Duration => {
                let (pitch, _) = pending
                    .take()
                    .ok_or_else(|| structure(i, "Duration without a preceding Pitch"))?;
                notes.push(NoteEvent {
                    pitch,
                    onset: onset.expect("pending pitch implies an onset"),
                    duration: Beats::new(i64::from(t.value), res),
                    track: 0,
                });
            }
            _ => return Err(structure(i, "token kind not used by REMI")),
        }
    }
    if let Some((_, at)) = pending {
        return Err(structure(at, "Pitch without a following Duration"));
    }
    Score::new(notes, config.meter.clone(), Some(config.resolution))
}
