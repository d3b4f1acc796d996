use midly::num::{u15, u28, u4, u7};
use midly::{Format, Header, MetaMessage, MidiMessage, Smf, Timing, TrackEvent, TrackEventKind};
use num_rational::Ratio;
use proptest::prelude::*;
use supertok::score::{parse_midi, Beats, NoteEvent};

/// `(delta, channel, key, velocity)`; velocity 0 is a note-off.
type RawEvent = (u32, u8, u8, u8);

fn write_smf(tpq: u16, tracks: &[Vec<RawEvent>], meter: Option<(u8, u8)>) -> Vec<u8> {
    let mut smf = Smf::new(Header::new(Format::Parallel, Timing::Metrical(u15::new(tpq))));
    for (t, events) in tracks.iter().enumerate() {
        let mut track = Vec::new();
        if t == 0 {
            if let Some((num, pow)) = meter {
                track.push(TrackEvent {
                    delta: u28::new(0),
                    kind: TrackEventKind::Meta(MetaMessage::TimeSignature(num, pow, 24, 8)),
                });
            }
        }
        for &(delta, ch, key, vel) in events {
            let message = if vel == 0 && key % 2 == 0 {
                MidiMessage::NoteOff {
                    key: u7::new(key),
                    vel: u7::new(64),
                }
            } else {
                MidiMessage::NoteOn {
                    key: u7::new(key),
                    vel: u7::new(vel),
                }
            };
            track.push(TrackEvent {
                delta: u28::new(delta),
                kind: TrackEventKind::Midi {
                    channel: u4::new(ch),
                    message,
                },
            });
        }
        track.push(TrackEvent {
            delta: u28::new(0),
            kind: TrackEventKind::Meta(MetaMessage::EndOfTrack),
        });
        smf.tracks.push(track);
    }
    let mut out = Vec::new();
    smf.write_std(&mut out).unwrap();
    out
}

/// Notes as read by midly, paired first-in first-out per (channel, key);
/// notes still sounding close at the end of their track.
fn oracle_notes(bytes: &[u8]) -> Vec<NoteEvent> {
    let smf = Smf::parse(bytes).unwrap();
    let Timing::Metrical(tpq) = smf.header.timing else {
        panic!("metrical timing expected")
    };
    let tpq = i64::from(tpq.as_int());
    let mut notes = Vec::new();
    for (t, track) in smf.tracks.iter().enumerate() {
        let mut now = 0i64;
        let mut open: Vec<(u8, u8, i64)> = Vec::new();
        let close = |ch: u8, key: u8, at: i64, open: &mut Vec<(u8, u8, i64)>, notes: &mut Vec<NoteEvent>| {
            if let Some(i) = open.iter().position(|o| o.0 == ch && o.1 == key) {
                let (_, _, start) = open.remove(i);
                if at > start {
                    notes.push(NoteEvent {
                        pitch: key,
                        onset: Beats::new(start, tpq),
                        duration: Beats::new(at - start, tpq),
                        track: t as u16,
                    });
                }
            }
        };
        for ev in track {
            now += i64::from(ev.delta.as_int());
            if let TrackEventKind::Midi { channel, message } = ev.kind {
                let ch = channel.as_int();
                match message {
                    MidiMessage::NoteOn { key, vel } if vel.as_int() > 0 => open.push((ch, key.as_int(), now)),
                    MidiMessage::NoteOn { key, .. } | MidiMessage::NoteOff { key, .. } => {
                        close(ch, key.as_int(), now, &mut open, &mut notes)
                    }
                    _ => {}
                }
            }
        }
        while let Some(&(ch, key, _)) = open.first() {
            close(ch, key, now, &mut open, &mut notes);
        }
    }
    notes.sort_by_key(|n| (n.onset, n.track, n.pitch, n.duration));
    notes.dedup();
    notes
}

#[test]
fn three_track_file_matches_midly() {
    let tracks = vec![
        vec![(0, 0, 60, 90), (480, 0, 60, 0), (0, 0, 64, 80), (240, 0, 64, 0), (240, 0, 67, 70), (960, 0, 67, 0)],
        vec![(0, 1, 48, 100), (0, 1, 55, 100), (1920, 1, 48, 0), (0, 1, 55, 0)],
        vec![(120, 9, 36, 127), (60, 9, 36, 0), (60, 9, 36, 127), (120, 9, 42, 90)],
    ];
    let bytes = write_smf(480, &tracks, Some((3, 2)));
    let score = parse_midi(&bytes).unwrap();
    assert_eq!(score.notes(), oracle_notes(&bytes).as_slice());
    // The last hi-hat sounds for zero ticks before the track ends.
    assert_eq!(score.notes().len(), 7);
    let ts = score.time_signatures()[0];
    assert_eq!((ts.numerator, ts.denominator), (3, 4));
    assert_eq!(ts.start, Ratio::from_integer(0));
}

fn raw_event() -> impl Strategy<Value = RawEvent> {
    (0u32..500, 0u8..16, 40u8..80, prop_oneof![Just(0u8), 1u8..128])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn random_files_match_midly(
        tpq in prop_oneof![Just(96u16), Just(480), 1u16..2000],
        tracks in prop::collection::vec(prop::collection::vec(raw_event(), 0..40), 1..4),
    ) {
        let bytes = write_smf(tpq, &tracks, None);
        let score = parse_midi(&bytes).unwrap();
        let want = oracle_notes(&bytes);
        prop_assert_eq!(score.notes(), want.as_slice());
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..300)) {
        let _ = parse_midi(&bytes);
    }

    #[test]
    fn mutated_files_never_panic(
        tracks in prop::collection::vec(prop::collection::vec(raw_event(), 1..20), 1..3),
        flips in prop::collection::vec((any::<prop::sample::Index>(), any::<u8>()), 1..6),
        cut in any::<prop::sample::Index>(),
    ) {
        let mut bytes = write_smf(480, &tracks, Some((4, 2)));
        for (at, v) in flips {
            let i = at.index(bytes.len());
            bytes[i] = v;
        }
        let _ = parse_midi(&bytes);
        let n = cut.index(bytes.len());
        let _ = parse_midi(&bytes[..n]);
    }
}
