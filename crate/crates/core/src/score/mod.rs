//! Note-level score representation and ingestion.

mod midi;
mod quantize;
mod text;

use std::cmp::Ordering;

use num_rational::Ratio;
use num_traits::{Signed, Zero};

use crate::{Error, Result};

pub use midi::parse_midi;
pub use quantize::quantize;
pub use text::{parse_notes_text, render_notes_text};

/// Musical time measured in beats (quarter notes), kept exact.
pub type Beats = Ratio<i64>;

/// Positions per beat used when nothing else is configured (16th-note grid).
pub const DEFAULT_RESOLUTION: u32 = 4;

/// One sounding note. Velocity is not represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NoteEvent {
    pub pitch: u8,
    pub onset: Beats,
    pub duration: Beats,
    pub track: u16,
}

impl NoteEvent {
    pub fn new(pitch: u8, onset: Beats, duration: Beats, track: u16) -> Result<Self> {
        let note = NoteEvent {
            pitch,
            onset,
            duration,
            track,
        };
        note.validate()?;
        Ok(note)
    }

    pub fn end(&self) -> Beats {
        self.onset + self.duration
    }

    fn validate(&self) -> Result<()> {
        if self.pitch > 127 {
            return Err(Error::invalid(format!("pitch {} outside 0..=127", self.pitch)));
        }
        if !self.duration.is_positive() {
            return Err(Error::invalid(format!("non-positive duration {}", self.duration)));
        }
        if self.onset.is_negative() {
            return Err(Error::invalid(format!("negative onset {}", self.onset)));
        }
        Ok(())
    }

    fn sort_key(&self) -> (Beats, u16, u8, Beats) {
        (self.onset, self.track, self.pitch, self.duration)
    }
}

/// A meter change starting at `start` beats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeSignature {
    pub start: Beats,
    pub numerator: u8,
    pub denominator: u8,
}

impl TimeSignature {
    pub fn common_time() -> Self {
        TimeSignature {
            start: Beats::zero(),
            numerator: 4,
            denominator: 4,
        }
    }

    /// Bar length in beats.
    pub fn bar_length(&self) -> Beats {
        Beats::new(i64::from(self.numerator) * 4, i64::from(self.denominator))
    }
}

/// Time-ordered notes with meter context.
///
/// Notes are kept sorted by (onset, track, pitch, duration) with exact
/// duplicates removed. `resolution` is set once the score has been snapped
/// to a grid of `1/resolution` beats.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Score {
    notes: Vec<NoteEvent>,
    time_signatures: Vec<TimeSignature>,
    resolution: Option<u32>,
}

impl Default for Score {
    fn default() -> Self {
        Score {
            notes: Vec::new(),
            time_signatures: vec![TimeSignature::common_time()],
            resolution: None,
        }
    }
}

impl Score {
    /// Builds a score, sorting notes and normalizing the meter map.
    ///
    /// An empty or late-starting meter map gets 4/4 from beat 0. If
    /// `resolution` is given, every onset and duration must lie on its grid.
    pub fn new(
        mut notes: Vec<NoteEvent>,
        time_signatures: Vec<TimeSignature>,
        resolution: Option<u32>,
    ) -> Result<Self> {
        for note in &notes {
            note.validate()?;
        }
        notes.sort_by_key(NoteEvent::sort_key);
        notes.dedup();
        let time_signatures = normalize_meter(time_signatures)?;
        let score = Score {
            notes,
            time_signatures,
            resolution,
        };
        if let Some(res) = resolution {
            if res == 0 {
                return Err(Error::invalid("resolution must be positive"));
            }
            if !score.is_on_grid(res) {
                return Err(Error::invalid(format!("notes are not on the 1/{res} beat grid")));
            }
        }
        Ok(score)
    }

    pub fn from_notes(notes: Vec<NoteEvent>) -> Result<Self> {
        Score::new(notes, Vec::new(), None)
    }

    pub fn notes(&self) -> &[NoteEvent] {
        &self.notes
    }

    pub fn time_signatures(&self) -> &[TimeSignature] {
        &self.time_signatures
    }

    pub fn resolution(&self) -> Option<u32> {
        self.resolution
    }

    pub fn is_empty(&self) -> bool {
        self.notes.is_empty()
    }

    /// True when every onset and duration is a multiple of `1/resolution` beats.
    pub fn is_on_grid(&self, resolution: u32) -> bool {
        let res = i64::from(resolution);
        self.notes.iter().all(|n| {
            (n.onset * res).is_integer() && (n.duration * res).is_integer()
        })
    }

    pub fn with_time_signatures(mut self, time_signatures: Vec<TimeSignature>) -> Result<Self> {
        self.time_signatures = normalize_meter(time_signatures)?;
        Ok(self)
    }

    /// True when no two notes overlap in time.
    pub fn is_monophonic(&self) -> bool {
        first_overlap(&self.notes).is_none()
    }

    pub fn meter(&self) -> Meter<'_> {
        Meter {
            signatures: &self.time_signatures,
        }
    }
}

/// Indices of the first pair of overlapping notes, if any.
pub(crate) fn first_overlap(notes: &[NoteEvent]) -> Option<(usize, usize)> {
    notes
        .windows(2)
        .enumerate()
        .find(|(_, w)| w[1].onset < w[0].end())
        .map(|(i, _)| (i, i + 1))
}

fn normalize_meter(mut sigs: Vec<TimeSignature>) -> Result<Vec<TimeSignature>> {
    for ts in &sigs {
        if ts.numerator == 0 || ts.denominator == 0 {
            return Err(Error::invalid("time signature with zero numerator or denominator"));
        }
        if ts.start.is_negative() {
            return Err(Error::invalid("time signature starting before beat 0"));
        }
    }
    sigs.sort_by_key(|ts| ts.start);
    // A later signature at the same beat replaces the earlier one.
    let mut out: Vec<TimeSignature> = Vec::with_capacity(sigs.len() + 1);
    for ts in sigs {
        match out.last_mut() {
            Some(last) if last.start == ts.start => *last = ts,
            _ => out.push(ts),
        }
    }
    if out.first().is_none_or(|ts| !ts.start.is_zero()) {
        out.insert(0, TimeSignature::common_time());
    }
    Ok(out)
}

/// Bar lookup over a normalized meter map.
///
/// A signature change that falls inside a bar cuts that bar short.
#[derive(Debug, Clone, Copy)]
pub struct Meter<'a> {
    signatures: &'a [TimeSignature],
}

/// One bar of a [`Meter`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bar {
    pub index: usize,
    pub start: Beats,
    pub length: Beats,
}

impl<'a> Meter<'a> {
    pub fn new(signatures: &'a [TimeSignature]) -> Self {
        Meter { signatures }
    }

    /// All bars whose start is `<= last`, in order. Always returns at least bar 0.
    pub fn bars_through(&self, last: Beats) -> Vec<Bar> {
        let mut bars = Vec::new();
        self.walk(|bar| {
            let keep = bar.start <= last || bars.is_empty();
            if keep {
                bars.push(bar);
            }
            keep
        });
        bars
    }

    /// The bar containing `beat`.
    pub fn bar_at(&self, beat: Beats) -> Bar {
        let mut found = None;
        self.walk(|bar| {
            if beat < bar.start + bar.length {
                found = Some(bar);
                false
            } else {
                true
            }
        });
        found.expect("meter walk is unbounded")
    }

    /// The first `count` bars.
    pub fn first_bars(&self, count: usize) -> Vec<Bar> {
        let mut bars = Vec::with_capacity(count);
        if count == 0 {
            return bars;
        }
        self.walk(|bar| {
            bars.push(bar);
            bars.len() < count
        });
        bars
    }

    fn walk(&self, mut visit: impl FnMut(Bar) -> bool) {
        let default = [TimeSignature::common_time()];
        let sigs = if self.signatures.is_empty() {
            &default[..]
        } else {
            self.signatures
        };
        let mut index = 0;
        let mut seg = 0;
        let mut start = Beats::zero();
        loop {
            while seg + 1 < sigs.len() && sigs[seg + 1].start <= start {
                seg += 1;
            }
            let mut length = sigs[seg].bar_length();
            if let Some(next) = sigs.get(seg + 1) {
                if start + length > next.start {
                    length = next.start - start;
                }
            }
            if !visit(Bar {
                index,
                start,
                length,
            }) {
                return;
            }
            start += length;
            index += 1;
        }
    }
}

impl PartialOrd for NoteEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for NoteEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}
