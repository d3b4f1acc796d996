//! Standard MIDI File reader (formats 0 and 1).
//!
//! Only what tokenization needs is kept: note on/off pairs and time
//! signatures. Tempo, controllers, sysex and every other event are skipped.
//! Times are returned in beats (ticks / ticks-per-quarter), unquantized.

use std::collections::{HashMap, VecDeque};

use super::{Beats, NoteEvent, Score, TimeSignature};
use crate::{Error, Result};

/// Parses SMF bytes into an unquantized score.
///
/// Note-offs are paired first-in-first-out per (track, channel, pitch).
/// Notes still open at the end of their track are closed there; zero-length
/// notes are dropped. Format 0 files use the MIDI channel as the track number,
/// format 1 files use the track chunk index.
pub fn parse_midi(bytes: &[u8]) -> Result<Score> {
    let mut r = Reader::new(bytes);
    let (id, len, body_start) = r.chunk_header()?;
    if &id != b"MThd" {
        return Err(r.error_at(0, "missing MThd header chunk"));
    }
    if len < 6 {
        return Err(r.error_at(4, format!("header chunk length {len} is shorter than 6")));
    }
    let format = r.u16()?;
    let _declared_tracks = r.u16()?;
    let division = r.u16()?;
    r.seek(body_start + len)?;

    if format == 2 {
        return Err(Error::UnsupportedMidi("format 2 (independent sequences)".into()));
    }
    if format > 2 {
        return Err(r.error_at(body_start, format!("unknown SMF format {format}")));
    }
    if division & 0x8000 != 0 {
        return Err(Error::UnsupportedMidi("SMPTE time division".into()));
    }
    if division == 0 {
        return Err(r.error_at(body_start + 4, "ticks per quarter note is zero"));
    }
    let tpq = i64::from(division);

    let mut notes = Vec::new();
    let mut signatures = Vec::new();
    let mut track_index: u16 = 0;
    while !r.at_end() {
        let (id, len, start) = r.chunk_header()?;
        let end = start
            .checked_add(len)
            .filter(|e| *e <= bytes.len())
            .ok_or_else(|| r.error_at(start - 8, format!("chunk length {len} runs past end of file")))?;
        if &id == b"MTrk" {
            let mut track = TrackParser {
                reader: Reader {
                    data: &bytes[..end],
                    pos: start,
                },
                tpq,
                track_number: track_index,
                per_channel: format == 0,
            };
            track.parse(&mut notes, &mut signatures)?;
            track_index = track_index.saturating_add(1);
        }
        r.seek(end)?;
    }
    Score::new(notes, signatures, None)
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(data: &'a [u8]) -> Self {
        Reader { data, pos: 0 }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.data.len()
    }

    fn error_at(&self, offset: usize, message: impl Into<String>) -> Error {
        Error::MidiParse {
            offset,
            message: message.into(),
        }
    }

    fn truncated(&self) -> Error {
        self.error_at(self.pos, "unexpected end of data")
    }

    fn seek(&mut self, pos: usize) -> Result<()> {
        if pos > self.data.len() {
            return Err(self.error_at(self.data.len(), "chunk runs past end of file"));
        }
        self.pos = pos;
        Ok(())
    }

    fn u8(&mut self) -> Result<u8> {
        let b = *self.data.get(self.pos).ok_or_else(|| self.truncated())?;
        self.pos += 1;
        Ok(b)
    }

    fn peek(&self) -> Result<u8> {
        self.data.get(self.pos).copied().ok_or_else(|| self.truncated())
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_be_bytes([self.u8()?, self.u8()?]))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes([self.u8()?, self.u8()?, self.u8()?, self.u8()?]))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|e| *e <= self.data.len())
            .ok_or_else(|| self.truncated())?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    /// Variable-length quantity, at most four bytes.
    fn vlq(&mut self) -> Result<u32> {
        let start = self.pos;
        let mut value: u32 = 0;
        for _ in 0..4 {
            let b = self.u8()?;
            value = (value << 7) | u32::from(b & 0x7f);
            if b & 0x80 == 0 {
                return Ok(value);
            }
        }
        Err(self.error_at(start, "variable-length quantity longer than 4 bytes"))
    }

    fn chunk_header(&mut self) -> Result<([u8; 4], usize, usize)> {
        let mut id = [0u8; 4];
        id.copy_from_slice(self.take(4)?);
        let len = self.u32()? as usize;
        Ok((id, len, self.pos))
    }
}

struct TrackParser<'a> {
    reader: Reader<'a>,
    tpq: i64,
    track_number: u16,
    per_channel: bool,
}

impl TrackParser<'_> {
    fn parse(&mut self, notes: &mut Vec<NoteEvent>, signatures: &mut Vec<TimeSignature>) -> Result<()> {
        let r = &mut self.reader;
        let mut tick: u64 = 0;
        let mut running: Option<u8> = None;
        let mut open: HashMap<(u8, u8), VecDeque<u64>> = HashMap::new();
        let mut finished: Vec<(u8, u8, u64, u64)> = Vec::new();

        while !r.at_end() {
            tick += u64::from(r.vlq()?);
            let status_pos = r.pos;
            let status = if r.peek()? >= 0x80 {
                r.u8()?
            } else {
                running.ok_or_else(|| r.error_at(status_pos, "data byte without running status"))?
            };
            match status {
                0xFF => {
                    running = None;
                    let kind = r.u8()?;
                    let len = r.vlq()? as usize;
                    let data = r.take(len)?;
                    match kind {
                        0x2F => break,
                        0x58 if data.len() >= 2 && data[0] > 0 && data[1] <= 7 => {
                            signatures.push(TimeSignature {
                                start: Beats::new(tick as i64, self.tpq),
                                numerator: data[0],
                                denominator: 1u8 << data[1],
                            });
                        }
                        _ => {}
                    }
                }
                0xF0 | 0xF7 => {
                    running = None;
                    let len = r.vlq()? as usize;
                    r.take(len)?;
                }
                0x80..=0xEF => {
                    running = Some(status);
                    let kind = status >> 4;
                    let channel = status & 0x0f;
                    let data_len = if kind == 0xC || kind == 0xD { 1 } else { 2 };
                    let data_pos = r.pos;
                    let data = r.take(data_len)?;
                    if data.iter().any(|b| *b >= 0x80) {
                        return Err(r.error_at(data_pos, "status byte where data byte expected"));
                    }
                    let is_on = kind == 0x9 && data[1] > 0;
                    let is_off = kind == 0x8 || (kind == 0x9 && data[1] == 0);
                    let key = (channel, data[0]);
                    if is_on {
                        open.entry(key).or_default().push_back(tick);
                    } else if is_off {
                        if let Some(on) = open.get_mut(&key).and_then(VecDeque::pop_front) {
                            finished.push((channel, data[0], on, tick));
                        }
                    }
                }
                _ => {
                    return Err(r.error_at(status_pos, format!("unexpected status byte {status:#04x}")));
                }
            }
        }

        let mut leftovers: Vec<_> = open.into_iter().collect();
        leftovers.sort();
        for ((channel, pitch), onsets) in leftovers {
            for on in onsets {
                finished.push((channel, pitch, on, tick));
            }
        }

        for (channel, pitch, on, off) in finished {
            if off <= on {
                continue;
            }
            let track = if self.per_channel {
                u16::from(channel)
            } else {
                self.track_number
            };
            notes.push(NoteEvent {
                pitch,
                onset: Beats::new(on as i64, self.tpq),
                duration: Beats::new((off - on) as i64, self.tpq),
                track,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Minimal SMF writer for tests: `(delta, bytes)` events per track.
    pub(crate) fn smf(format: u16, tpq: u16, tracks: &[Vec<(u32, Vec<u8>)>]) -> Vec<u8> {
        let mut out = b"MThd".to_vec();
        out.extend(6u32.to_be_bytes());
        out.extend(format.to_be_bytes());
        out.extend((tracks.len() as u16).to_be_bytes());
        out.extend(tpq.to_be_bytes());
        for events in tracks {
            let mut body = Vec::new();
            for (delta, bytes) in events {
                body.extend(vlq(*delta));
                body.extend(bytes);
            }
            body.extend([0x00, 0xFF, 0x2F, 0x00]);
            out.extend(b"MTrk");
            out.extend((body.len() as u32).to_be_bytes());
            out.extend(body);
        }
        out
    }

    fn vlq(mut v: u32) -> Vec<u8> {
        let mut bytes = vec![(v & 0x7f) as u8];
        v >>= 7;
        while v > 0 {
            bytes.push((v & 0x7f) as u8 | 0x80);
            v >>= 7;
        }
        bytes.reverse();
        bytes
    }

    #[test]
    fn no_notes() {
        let bytes = smf(1, 480, &[vec![]]);
        assert!(parse_midi(&bytes).unwrap().is_empty());
    }

    #[test]
    fn one_quarter_note() {
        let bytes = smf(0, 480, &[vec![(0, vec![0x90, 60, 100]), (480, vec![0x80, 60, 0])]]);
        let score = parse_midi(&bytes).unwrap();
        assert_eq!(score.notes().len(), 1);
        let n = score.notes()[0];
        assert_eq!((n.pitch, n.onset, n.duration), (60, Beats::from_integer(0), Beats::from_integer(1)));
    }

    #[test]
    fn running_status_and_velocity_zero_off() {
        let bytes = smf(
            0,
            96,
            &[vec![
                (0, vec![0x90, 60, 90]),
                (0, vec![64, 90]),
                (48, vec![60, 0]),
                (48, vec![64, 0]),
            ]],
        );
        let score = parse_midi(&bytes).unwrap();
        let durs: Vec<_> = score.notes().iter().map(|n| n.duration).collect();
        assert_eq!(durs, vec![Beats::new(1, 2), Beats::from_integer(1)]);
    }

    #[test]
    fn overlapping_same_pitch_pairs_fifo() {
        let bytes = smf(
            0,
            4,
            &[vec![
                (0, vec![0x90, 60, 90]),
                (1, vec![0x90, 60, 90]),
                (1, vec![0x80, 60, 0]),
                (1, vec![0x80, 60, 0]),
            ]],
        );
        let score = parse_midi(&bytes).unwrap();
        let spans: Vec<_> = score.notes().iter().map(|n| (n.onset, n.duration)).collect();
        assert_eq!(
            spans,
            vec![(Beats::new(0, 1), Beats::new(2, 4)), (Beats::new(1, 4), Beats::new(2, 4))]
        );
    }

    #[test]
    fn time_signature_meta() {
        let bytes = smf(1, 480, &[vec![(960, vec![0xFF, 0x58, 4, 6, 3, 24, 8])]]);
        let score = parse_midi(&bytes).unwrap();
        let ts = score.time_signatures();
        assert_eq!(ts.len(), 2);
        assert_eq!((ts[1].start, ts[1].numerator, ts[1].denominator), (Beats::from_integer(2), 6, 8));
    }

    #[test]
    fn format_two_rejected() {
        let bytes = smf(2, 480, &[vec![]]);
        assert!(matches!(parse_midi(&bytes), Err(Error::UnsupportedMidi(_))));
    }

    #[test]
    fn truncation_reports_offset() {
        let bytes = smf(0, 480, &[vec![(0, vec![0x90, 60, 100]), (480, vec![0x80, 60, 0])]]);
        let cut = &bytes[..bytes.len() - 3];
        match parse_midi(cut) {
            Err(Error::MidiParse { offset, .. }) => assert_eq!(offset, 14),
            other => panic!("unexpected {other:?}"),
        }
        match parse_midi(b"RIFF....") {
            Err(Error::MidiParse { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("unexpected {other:?}"),
        }
    }
}
