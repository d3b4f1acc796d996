use super::{Beats, NoteEvent, Score};

/// Snaps onsets and durations to the nearest `1/resolution` beat.
///
/// Halfway values round up, durations never drop below one grid unit, and
/// notes that become identical collapse to one.
///
/// # Panics
///
/// If `resolution` is 0.
pub fn quantize(score: &Score, resolution: u32) -> Score {
    assert!(resolution >= 1, "resolution must be at least 1");
    let res = i64::from(resolution);
    let step = Beats::new(1, res);
    let notes = score
        .notes()
        .iter()
        .map(|n| {
            let onset = snap(n.onset, res);
            let duration = snap(n.duration, res).max(step);
            NoteEvent {
                onset,
                duration,
                ..*n
            }
        })
        .collect();
    Score::new(notes, score.time_signatures().to_vec(), Some(resolution))
        .expect("quantized notes satisfy the score invariants")
}

fn snap(value: Beats, res: i64) -> Beats {
    let half = Beats::new(1, 2);
    Beats::from_integer((value * res + half).floor().to_integer()) / res
}
