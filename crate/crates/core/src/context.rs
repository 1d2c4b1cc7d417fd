//! Context labels for pianoroll events and the plug-in content/context MI.
//!
//! Chord tokens are `root * 4096 + chroma_bitmask`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pianoroll::{ChordAnnotation, ChordSpan, Mode, Pianoroll, PITCHES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContextType {
    /// Timestep index.
    Time,
    /// Chord tokens renumbered within the sample.
    Rep,
    /// Chord tokens transposed to a C tonic, with the mode kept.
    Key,
    /// Raw chroma bitmask.
    Bin,
}

impl ContextType {
    pub const ALL: [ContextType; 4] = [ContextType::Time, ContextType::Rep, ContextType::Key, ContextType::Bin];

    pub fn name(self) -> &'static str {
        match self {
            ContextType::Time => "time",
            ContextType::Rep => "rep",
            ContextType::Key => "key",
            ContextType::Bin => "bin",
        }
    }
}

impl fmt::Display for ContextType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ContextType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ContextType::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown context type '{s}'")))
    }
}

/// How REP renumbers chord tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RepOrder {
    /// Ascending global token id.
    #[default]
    Id,
    /// Order of first appearance in time.
    Appearance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ContextOptions {
    pub rep_order: RepOrder,
    /// Emit one event per note onset instead of one per active cell.
    pub onset_only: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabeledEvents {
    /// `(pitch, context label)`.
    pub pairs: Vec<(u8, u64)>,
}

pub fn chord_token(root: u8, chroma: u16) -> u64 {
    root as u64 * 4096 + chroma as u64
}

/// Rotates a 12-bit chroma mask down by `semitones`.
pub fn transpose_chroma(chroma: u16, semitones: u8) -> u16 {
    let s = (semitones % 12) as u32;
    let mask = chroma as u32 & 0xfff;
    (((mask >> s) | (mask << (12 - s))) & 0xfff) as u16
}

/// Span labels for a chord-based context, in span order.
fn span_labels(spans: &[ChordSpan], ann: &ChordAnnotation, ctx: ContextType, opts: ContextOptions) -> Result<Vec<u64>> {
    Ok(match ctx {
        ContextType::Time => unreachable!("time labels do not depend on chords"),
        ContextType::Bin => spans.iter().map(|s| s.chroma as u64).collect(),
        ContextType::Key => {
            let key = ann.key.ok_or(Error::MissingKey)?;
            let mode = match key.mode {
                Mode::Major => 0,
                Mode::Minor => 1,
            };
            spans
                .iter()
                .map(|s| {
                    let root = (s.root + 12 - key.tonic) % 12;
                    mode * 12 * 4096 + chord_token(root, transpose_chroma(s.chroma, key.tonic))
                })
                .collect()
        }
        ContextType::Rep => {
            let tokens: Vec<u64> = spans.iter().map(|s| chord_token(s.root, s.chroma)).collect();
            let mut order: Vec<u64> = Vec::new();
            for t in &tokens {
                if !order.contains(t) {
                    order.push(*t);
                }
            }
            if opts.rep_order == RepOrder::Id {
                order.sort_unstable();
            }
            tokens.iter().map(|t| order.iter().position(|o| o == t).expect("token recorded") as u64).collect()
        }
    })
}

/// Labels every active cell (or onset) of the roll with its context token.
pub fn assign_context(pr: &Pianoroll, ann: Option<&ChordAnnotation>, ctx: ContextType, opts: ContextOptions) -> Result<LabeledEvents> {
    let step_labels: Vec<u64> = match ctx {
        ContextType::Time => (0..pr.time() as u64).collect(),
        _ => {
            let ann = ann.ok_or(Error::MissingAnnotation)?;
            ann.check_coverage(pr.length())?;
            let mut spans = ann.spans.clone();
            spans.sort_by_key(|s| s.start);
            let labels = span_labels(&spans, ann, ctx, opts)?;
            let mut steps = vec![u64::MAX; pr.time()];
            for (s, label) in spans.iter().zip(labels) {
                for slot in steps.iter_mut().take(s.end).skip(s.start) {
                    *slot = label;
                }
            }
            steps
        }
    };
    let mut pairs = Vec::new();
    for (t, &label) in step_labels.iter().enumerate() {
        for track in 0..pr.tracks() {
            for pitch in 0..PITCHES {
                let hit = if opts.onset_only { pr.is_onset(track, pitch, t) } else { pr.get(track, pitch, t) };
                if hit {
                    if label == u64::MAX {
                        return Err(Error::CoverageGap(t));
                    }
                    pairs.push((pitch as u8, label));
                }
            }
        }
    }
    Ok(LabeledEvents { pairs })
}

fn counts<K: Ord + Copy>(keys: impl Iterator<Item = K>) -> BTreeMap<K, u64> {
    let mut map = BTreeMap::new();
    for k in keys {
        *map.entry(k).or_insert(0) += 1;
    }
    map
}

fn entropy_of(hist: &BTreeMap<impl Ord, u64>, n: f64) -> f64 {
    hist.values().map(|&c| {
        let p = c as f64 / n;
        -p * p.ln()
    }).sum()
}

/// Plug-in entropy of the pitch marginal, in nats.
pub fn pitch_entropy(events: &LabeledEvents) -> Result<f64> {
    if events.pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(entropy_of(&counts(events.pairs.iter().map(|p| p.0)), events.pairs.len() as f64))
}

/// Plug-in entropy of the label marginal, in nats.
pub fn label_entropy(events: &LabeledEvents) -> Result<f64> {
    if events.pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(entropy_of(&counts(events.pairs.iter().map(|p| p.1)), events.pairs.len() as f64))
}

/// Plug-in estimate of `I(pitch; label)` in nats.
pub fn mutual_information(events: &LabeledEvents) -> Result<f64> {
    if events.pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = events.pairs.len() as f64;
    let joint = counts(events.pairs.iter().copied());
    let px = counts(events.pairs.iter().map(|p| p.0));
    let py = counts(events.pairs.iter().map(|p| p.1));
    let mi: f64 = joint
        .iter()
        .map(|(&(x, y), &c)| {
            let c = c as f64;
            c / n * (c * n / (px[&x] as f64 * py[&y] as f64)).ln()
        })
        .sum();
    Ok(mi.max(0.0))
}

pub const ESTIMATOR: &str = "plug-in";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiReport {
    pub context: ContextType,
    pub events: usize,
    pub mi_nats: f64,
    pub estimator: String,
}

pub fn mi_report(pr: &Pianoroll, ann: Option<&ChordAnnotation>, ctx: ContextType, opts: ContextOptions) -> Result<MiReport> {
    let events = assign_context(pr, ann, ctx, opts)?;
    Ok(MiReport { context: ctx, events: events.pairs.len(), mi_nats: mutual_information(&events)?, estimator: ESTIMATOR.into() })
}

/// Events from several annotated samples pooled into one histogram input.
pub fn pooled_events(corpus: &[(Pianoroll, Option<ChordAnnotation>)], ctx: ContextType, opts: ContextOptions) -> Result<LabeledEvents> {
    let mut pairs = Vec::new();
    for (roll, ann) in corpus {
        pairs.extend(assign_context(roll, ann.as_ref(), ctx, opts)?.pairs);
    }
    Ok(LabeledEvents { pairs })
}

const MAJOR_DEGREES: [(u8, [u8; 3]); 5] = [(0, [0, 4, 7]), (2, [0, 3, 7]), (5, [0, 4, 7]), (7, [0, 4, 7]), (9, [0, 3, 7])];
const CORPUS_TONICS: [u8; 8] = [0, 0, 0, 0, 7, 5, 2, 9];

/// Constructed corpus of major-key samples whose melodies use chord tones.
///
/// Each sample has 8 half-measure chords (spq = 4, 64 steps) drawn from
/// I, ii, IV, V and vi, a bass note on every chord root and a chord-tone
/// melody note on every quarter. Half the samples are in C.
pub fn synthetic_chord_corpus(n_samples: usize, seed: u64) -> Result<Vec<(Pianoroll, Option<ChordAnnotation>)>> {
    use crate::pianoroll::Key;
    use crate::rng::{stream_id, SeededRng};
    let pick = |rng: &mut SeededRng, n: usize| ((rng.uniform() * n as f64) as usize).min(n - 1);
    (0..n_samples)
        .map(|i| {
            let mut rng = SeededRng::new(seed, stream_id(11, i as u64));
            let tonic = CORPUS_TONICS[pick(&mut rng, CORPUS_TONICS.len())];
            let mut roll = Pianoroll::zeros(2, 4, 64)?;
            let mut spans = Vec::new();
            for c in 0..8 {
                let (degree, shape) = MAJOR_DEGREES[pick(&mut rng, MAJOR_DEGREES.len())];
                let root = (tonic + degree) % 12;
                let chroma = shape.iter().fold(0u16, |m, iv| m | 1 << ((root + iv) % 12));
                let (start, end) = (c * 8, c * 8 + 8);
                spans.push(ChordSpan { start, end, root, chroma });
                roll.add_note(1, 36 + root as usize, start, end)?;
                for q in 0..2 {
                    let tone = (root + shape[pick(&mut rng, 3)]) % 12;
                    let onset = start + 4 * q;
                    roll.add_note(0, 60 + tone as usize, onset, onset + 4)?;
                }
            }
            Ok((roll, Some(ChordAnnotation { spans, key: Some(Key { tonic, mode: Mode::Major }) })))
        })
        .collect()
}
