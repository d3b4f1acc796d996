//! JSON-lines note interchange: one `{"pitch","onset","duration","track"}`
//! object per line, times in beats.

use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{Beats, NoteEvent, Score};
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoteRecord {
    pitch: i64,
    onset: serde_json::Number,
    duration: serde_json::Number,
    track: i64,
}

/// Parses the note-list format. Blank lines are ignored; line numbers in
/// errors are 1-based.
pub fn parse_notes_text(text: &str) -> Result<Score> {
    let mut notes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let err = |message: String| Error::NotesParse {
            line: line_no,
            message,
        };
        let rec: NoteRecord = serde_json::from_str(trimmed).map_err(|e| err(e.to_string()))?;
        let pitch = u8::try_from(rec.pitch)
            .ok()
            .filter(|p| *p <= 127)
            .ok_or_else(|| err(format!("pitch {} outside 0..=127", rec.pitch)))?;
        let track = u16::try_from(rec.track)
            .map_err(|_| err(format!("track {} is not a small non-negative integer", rec.track)))?;
        let onset = number_to_beats(&rec.onset).ok_or_else(|| err("onset is not finite".into()))?;
        let duration =
            number_to_beats(&rec.duration).ok_or_else(|| err("duration is not finite".into()))?;
        let note = NoteEvent::new(pitch, onset, duration, track).map_err(|e| err(e.to_string()))?;
        notes.push(note);
    }
    Score::from_notes(notes)
}

/// Renders a score in the note-list format, one line per note in score order.
pub fn render_notes_text(score: &Score) -> String {
    let mut out = String::new();
    for n in score.notes() {
        let rec = NoteRecord {
            pitch: i64::from(n.pitch),
            onset: beats_to_number(n.onset),
            duration: beats_to_number(n.duration),
            track: i64::from(n.track),
        };
        out.push_str(&serde_json::to_string(&rec).expect("note records serialize"));
        out.push('\n');
    }
    out
}

pub(crate) fn beats_to_number(b: Beats) -> serde_json::Number {
    if b.is_integer() {
        serde_json::Number::from(b.to_integer())
    } else {
        let f = b.to_f64().unwrap_or(f64::NAN);
        serde_json::Number::from_f64(f).expect("finite beat value")
    }
}

fn number_to_beats(n: &serde_json::Number) -> Option<Beats> {
    if let Some(i) = n.as_i64() {
        return Some(Beats::from_integer(i));
    }
    let f = n.as_f64()?;
    f64_to_beats(f)
}

const MAX_DENOMINATOR: i64 = 1_000_000_000;

/// Smallest-denominator rational within `1e-9` of `x`, found by walking the
/// continued-fraction convergents. Decimal literals such as 2.5 and 0.24 and
/// repeating values such as 1/3 written to 16 digits are recovered exactly.
pub(crate) fn f64_to_beats(x: f64) -> Option<Beats> {
    if !x.is_finite() || x.abs() > 1e12 {
        return None;
    }
    let tolerance = 1e-9 * x.abs().max(1.0);
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut rest = x;
    let mut best = Beats::from_integer(x.round() as i64);
    for _ in 0..64 {
        let a = rest.floor();
        let ai = a as i64;
        let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
        let k2 = ai.checked_mul(k1)?.checked_add(k0)?;
        if k2 > MAX_DENOMINATOR {
            break;
        }
        best = Beats::new(h2, k2);
        if (h2 as f64 / k2 as f64 - x).abs() <= tolerance {
            break;
        }
        let frac = rest - a;
        if frac.is_zero() {
            break;
        }
        rest = 1.0 / frac;
        (h0, h1) = (h1, h2);
        (k0, k1) = (k1, k2);
    }
    Some(best)
}
