//! Seeded generator of phrase-annotated monophonic corpora.
//!
//! Phrases are built from a small library of recurring motifs. Phrase
//! openings vary (rest length, leap, first duration) while motif interiors
//! repeat verbatim, which is the structure needed for scaled-down boundary
//! experiments. With `gestures` set, every phrase opens with a quarter-note
//! upbeat rising a fourth onto the downbeat and closes with a descending
//! tonic arpeggio in sixteenths followed by one free note.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::score::{Beats, NoteEvent, Score, DEFAULT_RESOLUTION};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MelodyCorpusConfig {
    pub pieces: usize,
    pub phrases_per_piece: usize,
    pub motif_count: usize,
    pub motifs_per_phrase: usize,
    pub gestures: bool,
    pub seed: u64,
}

impl Default for MelodyCorpusConfig {
    fn default() -> Self {
        MelodyCorpusConfig {
            pieces: 200,
            phrases_per_piece: 8,
            motif_count: 12,
            motifs_per_phrase: 2,
            gestures: false,
            seed: 0,
        }
    }
}

/// A generated piece with the note indices where its phrases start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticPiece {
    pub piece_id: String,
    pub score: Score,
    pub phrase_note_indices: Vec<usize>,
}

/// `(duration, interval)` per note, both in grid units / semitones.
type Motif = Vec<(i64, i64)>;

const BAR: i64 = 4 * DEFAULT_RESOLUTION as i64;
const QUARTER: i64 = DEFAULT_RESOLUTION as i64;

fn motif_library(rng: &mut ChaCha8Rng, count: usize) -> Vec<Motif> {
    const DURATIONS: [i64; 4] = [1, 2, 2, 4];
    (0..count)
        .map(|_| {
            let len = rng.random_range(3..=5);
            (0..len)
                .map(|_| {
                    let d = DURATIONS[rng.random_range(0..DURATIONS.len())];
                    let i = rng.random_range(-4..=4);
                    (d, i)
                })
                .collect()
        })
        .collect()
}

struct Writer {
    notes: Vec<NoteEvent>,
    time: i64,
    pitch: i64,
}

impl Writer {
    fn note(&mut self, duration: i64, interval: i64) {
        self.pitch = (self.pitch + interval).clamp(36, 96);
        let res = i64::from(DEFAULT_RESOLUTION);
        self.notes.push(NoteEvent {
            pitch: self.pitch as u8,
            onset: Beats::new(self.time, res),
            duration: Beats::new(duration, res),
            track: 0,
        });
        self.time += duration;
    }

    fn rest(&mut self, units: i64) {
        self.time += units;
    }
}

pub fn melody_corpus(config: &MelodyCorpusConfig) -> Vec<SyntheticPiece> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let library = motif_library(&mut rng, config.motif_count.max(1));
    (0..config.pieces)
        .map(|p| {
            let mut w = Writer {
                notes: Vec::new(),
                time: 0,
                pitch: rng.random_range(55..=72),
            };
            let mut phrase_starts = Vec::with_capacity(config.phrases_per_piece);
            for phrase in 0..config.phrases_per_piece {
                phrase_starts.push(w.notes.len());
                let leap_sign = if w.pitch > 64 { -1 } else { 1 };
                if config.gestures {
                    // Upbeat one beat before the next downbeat, then a rising fourth.
                    let earliest = w.time + if phrase == 0 { 0 } else { 1 } + QUARTER;
                    let downbeat = (earliest + BAR - 1) / BAR * BAR;
                    w.rest(downbeat - QUARTER - w.time);
                    let leap = if phrase == 0 { 0 } else { leap_sign * rng.random_range(2..=9) };
                    w.note(QUARTER, leap);
                    w.note(QUARTER, 5);
                } else {
                    if phrase > 0 {
                        w.rest(rng.random_range(1..=6));
                    }
                    let leap = if phrase == 0 { 0 } else { leap_sign * rng.random_range(5..=11) };
                    w.note(rng.random_range(1..=8), leap);
                }
                for _ in 0..config.motifs_per_phrase {
                    let motif = &library[rng.random_range(0..library.len())];
                    for &(d, i) in motif {
                        w.note(d, i);
                    }
                }
                if config.gestures {
                    w.note(1, 2);
                    for interval in [-5, -3, -4] {
                        w.note(1, interval);
                    }
                    let last = [QUARTER, 2 * QUARTER, 3 * QUARTER][rng.random_range(0..3)];
                    w.note(last, rng.random_range(-7..=7));
                }
            }
            let score = Score::new(w.notes, Vec::new(), Some(DEFAULT_RESOLUTION))
                .expect("generated notes are valid and on the grid");
            SyntheticPiece {
                piece_id: format!("synth-{:04}", p),
                score,
                phrase_note_indices: phrase_starts,
            }
        })
        .collect()
}
