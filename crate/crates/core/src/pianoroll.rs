//! Binary pianorolls and their JSON file format.
//!
//! ```json
//! {"version": 1, "tracks": 1, "steps_per_quarter": 4, "length": 16,
//!  "notes": [[0, 60, 0, 4]],
//!  "chords": [[0, 16, 0, 145]], "key": [0, "major"]}
//! ```
//!
//! `notes` rows are `[track, pitch, onset, offset)` in steps. `chords` and
//! `key` are optional; a chord row is `[start, end, root, chroma_bitmask]`
//! with bit `i` of the mask standing for pitch class `i`.

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PITCHES: usize = 128;
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pianoroll {
    /// `tracks × 128 × time`, entries in `{0, 1}`.
    grid: Array3<u8>,
    steps_per_quarter: usize,
    /// Length before zero padding.
    length: usize,
    pub name: String,
}

impl Pianoroll {
    /// Empty roll; the time axis is padded up to a multiple of `steps_per_quarter`.
    pub fn zeros(tracks: usize, steps_per_quarter: usize, length: usize) -> Result<Self> {
        if steps_per_quarter == 0 {
            return Err(Error::Format("steps_per_quarter must be positive".into()));
        }
        if tracks == 0 {
            return Err(Error::Format("at least one track required".into()));
        }
        let time = length.div_ceil(steps_per_quarter) * steps_per_quarter;
        Ok(Pianoroll { grid: Array3::zeros((tracks, PITCHES, time)), steps_per_quarter, length, name: String::new() })
    }

    /// Builds a roll from a dense `tracks × 128 × time` tensor.
    pub fn from_dense(values: &Array3<i64>, steps_per_quarter: usize) -> Result<Self> {
        let (tracks, pitches, time) = values.dim();
        if pitches != PITCHES {
            return Err(Error::Format(format!("expected 128 pitch rows, got {pitches}")));
        }
        if let Some(v) = values.iter().find(|v| **v != 0 && **v != 1) {
            return Err(Error::NonBinary(*v));
        }
        let mut roll = Pianoroll::zeros(tracks, steps_per_quarter, time)?;
        roll.grid.slice_mut(ndarray::s![.., .., ..time]).assign(&values.mapv(|v| v as u8));
        Ok(roll)
    }

    pub fn tracks(&self) -> usize {
        self.grid.dim().0
    }

    /// Padded time length.
    pub fn time(&self) -> usize {
        self.grid.dim().2
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn steps_per_quarter(&self) -> usize {
        self.steps_per_quarter
    }

    pub fn grid(&self) -> &Array3<u8> {
        &self.grid
    }

    pub fn get(&self, track: usize, pitch: usize, t: usize) -> bool {
        self.grid[[track, pitch, t]] == 1
    }

    /// Sets `[onset, offset)` of one pitch to 1.
    pub fn add_note(&mut self, track: usize, pitch: usize, onset: usize, offset: usize) -> Result<()> {
        if track >= self.tracks() || pitch >= PITCHES || onset >= offset || offset > self.length {
            return Err(Error::Format(format!(
                "invalid note [{track}, {pitch}, {onset}, {offset}] for {} tracks and length {}",
                self.tracks(),
                self.length
            )));
        }
        self.grid.slice_mut(ndarray::s![track, pitch, onset..offset]).fill(1);
        Ok(())
    }

    /// `true` if cell `t` is on and cell `t - 1` is off (or `t = 0`).
    pub fn is_onset(&self, track: usize, pitch: usize, t: usize) -> bool {
        self.get(track, pitch, t) && (t == 0 || !self.get(track, pitch, t - 1))
    }

    /// Maximal runs of active cells as `[track, pitch, onset, offset]`.
    pub fn notes(&self) -> Vec<[usize; 4]> {
        let mut out = Vec::new();
        for track in 0..self.tracks() {
            for pitch in 0..PITCHES {
                let mut start = None;
                for t in 0..=self.time() {
                    let on = t < self.time() && self.get(track, pitch, t);
                    match (on, start) {
                        (true, None) => start = Some(t),
                        (false, Some(s)) => {
                            out.push([track, pitch, s, t]);
                            start = None;
                        }
                        _ => {}
                    }
                }
            }
        }
        out
    }

    /// The roll repeated `times` times along the time axis.
    pub fn tiled(&self, times: usize) -> Result<Self> {
        let mut out = Pianoroll::zeros(self.tracks(), self.steps_per_quarter, self.time() * times)?;
        for k in 0..times {
            let lo = k * self.time();
            out.grid.slice_mut(ndarray::s![.., .., lo..lo + self.time()]).assign(&self.grid);
        }
        out.name = self.name.clone();
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Major,
    Minor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Key {
    pub tonic: u8,
    pub mode: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChordSpan {
    pub start: usize,
    pub end: usize,
    pub root: u8,
    /// Bit `i` set means pitch class `i` sounds.
    pub chroma: u16,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChordAnnotation {
    pub spans: Vec<ChordSpan>,
    pub key: Option<Key>,
}

impl ChordAnnotation {
    /// Span covering step `t`.
    pub fn chord_at(&self, t: usize) -> Option<&ChordSpan> {
        self.spans.iter().find(|s| s.start <= t && t < s.end)
    }

    /// Checks spans are well formed, ordered, non-overlapping and cover `[0, length)`.
    pub fn check_coverage(&self, length: usize) -> Result<()> {
        if self.spans.is_empty() {
            return Err(Error::MissingAnnotation);
        }
        let mut spans = self.spans.clone();
        spans.sort_by_key(|s| s.start);
        let mut cursor = 0;
        for s in &spans {
            if s.start > cursor {
                return Err(Error::CoverageGap(cursor));
            }
            if s.start < cursor {
                return Err(Error::Format(format!("chord spans overlap at step {}", s.start)));
            }
            cursor = s.end;
        }
        if cursor < length {
            return Err(Error::CoverageGap(cursor));
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawFile {
    version: i64,
    tracks: i64,
    steps_per_quarter: i64,
    length: i64,
    notes: Vec<[i64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    chords: Option<Vec<[i64; 4]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    key: Option<(i64, Mode)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
}

fn non_negative(v: i64, what: &str) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::Format(format!("{what} must be non-negative, got {v}")))
}

/// Parses a pianoroll file, ignoring chord and key annotations.
pub fn load_pianoroll(bytes: &[u8]) -> Result<Pianoroll> {
    load_annotated(bytes).map(|(roll, _)| roll)
}

/// Parses a pianoroll file with its optional chord annotation.
pub fn load_annotated(bytes: &[u8]) -> Result<(Pianoroll, Option<ChordAnnotation>)> {
    let raw: RawFile = serde_json::from_slice(bytes).map_err(|e| Error::Format(e.to_string()))?;
    if raw.version != FORMAT_VERSION as i64 {
        return Err(Error::Format(format!("unsupported version {}", raw.version)));
    }
    let tracks = non_negative(raw.tracks, "tracks")?;
    let spq = non_negative(raw.steps_per_quarter, "steps_per_quarter")?;
    let length = non_negative(raw.length, "length")?;
    let mut roll = Pianoroll::zeros(tracks, spq, length)?;
    roll.name = raw.name.unwrap_or_default();
    for note in raw.notes {
        let mut fields = [0usize; 4];
        for (slot, v) in fields.iter_mut().zip(note) {
            *slot = non_negative(v, "note field")?;
        }
        let [track, pitch, onset, offset] = fields;
        roll.add_note(track, pitch, onset, offset)?;
    }
    let spans = raw
        .chords
        .map(|rows| {
            rows.into_iter()
                .map(|[start, end, root, chroma]| {
                    let (start, end) = (non_negative(start, "chord start")?, non_negative(end, "chord end")?);
                    if start >= end {
                        return Err(Error::Format(format!("chord span [{start}, {end}) is empty")));
                    }
                    if !(0..12).contains(&root) {
                        return Err(Error::Format(format!("chord root {root} outside 0..12")));
                    }
                    if !(1..4096).contains(&chroma) {
                        return Err(Error::Format(format!("chord chroma {chroma} outside 1..4096")));
                    }
                    Ok(ChordSpan { start, end, root: root as u8, chroma: chroma as u16 })
                })
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    let key = match raw.key {
        Some((tonic, mode)) if (0..12).contains(&tonic) => Some(Key { tonic: tonic as u8, mode }),
        Some((tonic, _)) => return Err(Error::Format(format!("key tonic {tonic} outside 0..12"))),
        None => None,
    };
    let ann = match (spans, key) {
        (None, None) => None,
        (spans, key) => Some(ChordAnnotation { spans: spans.unwrap_or_default(), key }),
    };
    Ok((roll, ann))
}

/// Serializes a roll (and optional annotation) to the JSON file format.
pub fn to_json(roll: &Pianoroll, ann: Option<&ChordAnnotation>) -> Result<String> {
    let as_i64 = |v: usize| v as i64;
    let raw = RawFile {
        version: FORMAT_VERSION as i64,
        tracks: as_i64(roll.tracks()),
        steps_per_quarter: as_i64(roll.steps_per_quarter),
        length: as_i64(roll.length),
        notes: roll.notes().into_iter().map(|n| n.map(as_i64)).collect(),
        chords: ann.filter(|a| !a.spans.is_empty()).map(|a| {
            a.spans.iter().map(|s| [s.start as i64, s.end as i64, s.root as i64, s.chroma as i64]).collect()
        }),
        key: ann.and_then(|a| a.key).map(|k| (k.tonic as i64, k.mode)),
        name: (!roll.name.is_empty()).then(|| roll.name.clone()),
    };
    Ok(serde_json::to_string(&raw)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file() {
        let roll = load_pianoroll(br#"{"version":1,"tracks":1,"steps_per_quarter":4,"length":8,"notes":[[0,60,0,4]]}"#).unwrap();
        assert!((0..4).all(|t| roll.get(0, 60, t)));
        assert!(!roll.get(0, 60, 4));
        assert_eq!(roll.grid().iter().map(|v| *v as usize).sum::<usize>(), 4);
    }

    #[test]
    fn empty_notes_and_padding() {
        let roll = load_pianoroll(br#"{"version":1,"tracks":2,"steps_per_quarter":4,"length":6,"notes":[]}"#).unwrap();
        assert_eq!(roll.time(), 8);
        assert_eq!(roll.length(), 6);
        assert!(roll.grid().iter().all(|v| *v == 0));
    }

    #[test]
    fn validation_errors() {
        let bad = [
            &br#"{"version":1,"tracks":1,"steps_per_quarter":4,"length":8,"notes":[[0,60,4,4]]}"#[..],
            br#"{"version":2,"tracks":1,"steps_per_quarter":4,"length":8,"notes":[]}"#,
            br#"{"version":1,"tracks":1,"steps_per_quarter":4,"length":8,"notes":[[0,128,0,1]]}"#,
            br#"{"version":1,"tracks":1,"steps_per_quarter":4,"length":8,"notes":[[0,60,-1,1]]}"#,
            br#"{"version":1,"tracks":1,"steps_per_quarter":0,"length":8,"notes":[]}"#,
            br#"not json"#,
        ];
        for b in bad {
            assert!(matches!(load_pianoroll(b), Err(Error::Format(_))), "{}", String::from_utf8_lossy(b));
        }
        let dense = Array3::from_elem((1, 128, 4), 2i64);
        assert!(matches!(Pianoroll::from_dense(&dense, 4), Err(Error::NonBinary(2))));
    }

    #[test]
    fn round_trip_with_chords() {
        let text = br#"{"version":1,"tracks":1,"steps_per_quarter":2,"length":8,"notes":[[0,60,0,3],[0,64,2,8]],"chords":[[0,4,0,145],[4,8,7,2180]],"key":[0,"major"]}"#;
        let (roll, ann) = load_annotated(text).unwrap();
        let ann = ann.unwrap();
        assert_eq!(ann.spans.len(), 2);
        assert_eq!(ann.key, Some(Key { tonic: 0, mode: Mode::Major }));
        let json = to_json(&roll, Some(&ann)).unwrap();
        let (roll2, ann2) = load_annotated(json.as_bytes()).unwrap();
        assert_eq!(roll, roll2);
        assert_eq!(Some(ann), ann2);
    }

    #[test]
    fn coverage_checks() {
        let span = |start, end| ChordSpan { start, end, root: 0, chroma: 1 };
        let ann = ChordAnnotation { spans: vec![span(0, 4), span(5, 8)], key: None };
        assert!(matches!(ann.check_coverage(8), Err(Error::CoverageGap(4))));
        let ann = ChordAnnotation { spans: vec![span(0, 4)], key: None };
        assert!(matches!(ann.check_coverage(8), Err(Error::CoverageGap(4))));
        assert!(matches!(ChordAnnotation::default().check_coverage(8), Err(Error::MissingAnnotation)));
        let ann = ChordAnnotation { spans: vec![span(4, 8), span(0, 4)], key: None };
        assert!(ann.check_coverage(8).is_ok());
    }

    #[test]
    fn tiling_repeats_grid() {
        let mut roll = Pianoroll::zeros(1, 2, 4).unwrap();
        roll.add_note(0, 62, 1, 3).unwrap();
        let t = roll.tiled(3).unwrap();
        assert_eq!(t.time(), 12);
        assert_eq!(t.notes(), vec![[0, 62, 1, 3], [0, 62, 5, 7], [0, 62, 9, 11]]);
    }
}
