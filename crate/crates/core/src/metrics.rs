//! Objective pianoroll metrics: SSMD, chroma similarity, grooving similarity
//! and note density distance.
//!
//! A half-measure is two quarter notes. Cosine similarity involving a zero
//! vector is 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pianoroll::{Pianoroll, PITCHES};

/// Onsets per pitch class, one 12-vector per half-measure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChromaOnsetSequence {
    pub vectors: Vec<[u32; 12]>,
}

pub fn half_measure_steps(pr: &Pianoroll) -> usize {
    2 * pr.steps_per_quarter()
}

pub fn chroma_onsets(pr: &Pianoroll) -> ChromaOnsetSequence {
    let hm = half_measure_steps(pr);
    let mut vectors = vec![[0u32; 12]; pr.time().div_ceil(hm)];
    for track in 0..pr.tracks() {
        for pitch in 0..PITCHES {
            for t in 0..pr.time() {
                if pr.is_onset(track, pitch, t) {
                    vectors[t / hm][pitch % 12] += 1;
                }
            }
        }
    }
    ChromaOnsetSequence { vectors }
}

fn cosine(a: &[u32; 12], b: &[u32; 12]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum();
    let na: f64 = a.iter().map(|x| (*x as f64).powi(2)).sum();
    let nb: f64 = b.iter().map(|x| (*x as f64).powi(2)).sum();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb).sqrt()
    }
}

/// Pairwise cosine similarities of chroma onset vectors.
pub fn self_similarity(seq: &ChromaOnsetSequence) -> Vec<Vec<f64>> {
    seq.vectors.iter().map(|a| seq.vectors.iter().map(|b| cosine(a, b)).collect()).collect()
}

fn check_lengths(target: &Pianoroll, pred: &Pianoroll) -> Result<()> {
    if target.time() != pred.time() || target.steps_per_quarter() != pred.steps_per_quarter() {
        return Err(Error::LengthMismatch { target: target.time(), pred: pred.time() });
    }
    Ok(())
}

/// `50 · mean |SSM_target - SSM_pred|`, in `[0, 100]`.
pub fn ssmd(target: &Pianoroll, pred: &Pianoroll) -> Result<f64> {
    check_lengths(target, pred)?;
    let a = self_similarity(&chroma_onsets(target));
    let b = self_similarity(&chroma_onsets(pred));
    let n = a.len();
    if n == 0 {
        return Ok(0.0);
    }
    let total: f64 = a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).sum();
    Ok(50.0 * total / (n * n) as f64)
}

/// `100 · mean_i cos(target_i, pred_i)` over half-measures, in `[-100, 100]`.
pub fn chroma_similarity(target: &Pianoroll, pred: &Pianoroll) -> Result<f64> {
    check_lengths(target, pred)?;
    let a = chroma_onsets(target).vectors;
    let b = chroma_onsets(pred).vectors;
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok(100.0 * a.iter().zip(&b).map(|(x, y)| cosine(x, y)).sum::<f64>() / a.len() as f64)
}

/// One flag per quarter note: does any onset fall in it.
pub fn grooving_pattern(pr: &Pianoroll) -> Vec<bool> {
    let spq = pr.steps_per_quarter();
    let mut groove = vec![false; pr.time().div_ceil(spq)];
    for track in 0..pr.tracks() {
        for pitch in 0..PITCHES {
            for t in 0..pr.time() {
                if pr.is_onset(track, pitch, t) {
                    groove[t / spq] = true;
                }
            }
        }
    }
    groove
}

/// Mean of `target XOR pred` over quarter-note grooving flags.
pub fn grooving_xor_mean(target: &Pianoroll, pred: &Pianoroll) -> Result<f64> {
    check_lengths(target, pred)?;
    let a = grooving_pattern(target);
    let b = grooving_pattern(pred);
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok(a.iter().zip(&b).filter(|(x, y)| x != y).count() as f64 / a.len() as f64)
}

/// `100 · (1 - mean XOR)`, so identical grooves score 100.
pub fn grooving_similarity(target: &Pianoroll, pred: &Pianoroll) -> Result<f64> {
    Ok(100.0 * (1.0 - grooving_xor_mean(target, pred)?))
}

/// Distinct `(track, pitch)` pairs sounding in each 16th-note bin.
pub fn sixteenth_counts(pr: &Pianoroll) -> Result<Vec<u32>> {
    let spq = pr.steps_per_quarter();
    if spq < 4 {
        return Err(Error::ResolutionTooCoarse(spq));
    }
    let bin_of = |t: usize| t * 4 / spq;
    let mut counts = vec![0u32; (pr.time() * 4).div_ceil(spq)];
    for track in 0..pr.tracks() {
        for pitch in 0..PITCHES {
            let mut last_bin = None;
            for t in 0..pr.time() {
                if pr.get(track, pitch, t) && last_bin != Some(bin_of(t)) {
                    counts[bin_of(t)] += 1;
                    last_bin = Some(bin_of(t));
                }
            }
        }
    }
    Ok(counts)
}

/// Mean percentage of target pitches missing from the prediction per 16th note.
pub fn note_density_distance(target: &Pianoroll, pred: &Pianoroll) -> Result<f64> {
    check_lengths(target, pred)?;
    let a = sixteenth_counts(target)?;
    let b = sixteenth_counts(pred)?;
    let misses: Vec<f64> = a
        .iter()
        .zip(&b)
        .filter(|(t, _)| **t > 0)
        .map(|(t, p)| t.saturating_sub(*p) as f64 / *t as f64)
        .collect();
    if misses.is_empty() {
        return Ok(0.0);
    }
    Ok(100.0 * misses.iter().sum::<f64>() / misses.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricBundle {
    pub ssmd: f64,
    pub cs: f64,
    pub gs: f64,
    pub ndd: f64,
}

pub fn evaluate(target: &Pianoroll, pred: &Pianoroll) -> Result<MetricBundle> {
    Ok(MetricBundle {
        ssmd: ssmd(target, pred)?,
        cs: chroma_similarity(target, pred)?,
        gs: grooving_similarity(target, pred)?,
        ndd: note_density_distance(target, pred)?,
    })
}
