//! Angular toy model of content/context interaction with unit-norm 2-D chunks.
//!
//! A point carries a content angle `ψ` (embedded as `(cos ψ, sin ψ)`) and a
//! context angle `ξ` used as its scalar position.

use std::f64::consts::{FRAC_PI_4, PI};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::exact_attention;
use crate::params::{Method, PeParams, PositionalIndexSequence, QkMatrices};
use crate::rng::{stream_id, SeededRng};

const TOY_STREAM: u32 = 9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyPoint {
    pub psi: f64,
    pub xi: f64,
    pub context_id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyDataset {
    pub points: Vec<ToyPoint>,
    pub n_contexts: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl ToyDataset {
    /// `C_k = kπ/(N+1)` for `k = 1..=N`.
    pub fn centers(&self) -> Vec<f64> {
        context_centers(self.n_contexts)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Point indices in ascending `ψ` order.
    pub fn sorted_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.points.len()).collect();
        order.sort_by(|&a, &b| self.points[a].psi.total_cmp(&self.points[b].psi).then(a.cmp(&b)));
        order
    }
}

pub fn context_centers(n: usize) -> Vec<f64> {
    (1..=n).map(|k| k as f64 * PI / (n as f64 + 1.0)).collect()
}

/// Point `j` belongs to context `j mod N` and draws `ψ ~ N(C, σ²)`.
pub fn generate_toy(n_contexts: usize, n_points: usize, sigma: f64, seed: u64) -> Result<ToyDataset> {
    if n_contexts == 0 || n_points == 0 {
        return Err(Error::InvalidArgument("toy dataset needs N >= 1 and P >= 1".into()));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    let centers = context_centers(n_contexts);
    let mut rng = SeededRng::new(seed, stream_id(TOY_STREAM, 0));
    let points = (0..n_points)
        .map(|j| {
            let context_id = j % n_contexts;
            let xi = centers[context_id];
            ToyPoint { psi: xi + sigma * rng.gaussian(), xi, context_id }
        })
        .collect();
    Ok(ToyDataset { points, n_contexts, sigma, seed })
}

/// Closed-form single-pair score.
pub fn toy_score(method: Method, psi_q: f64, xi_q: f64, psi_k: f64, xi_k: f64, f: f64) -> f64 {
    match method {
        Method::Rope => ((psi_q - psi_k) + f * (xi_q - xi_k)).cos(),
        Method::FStripe1 => (psi_q - psi_k).cos() * (f * (xi_q - xi_k)).cos(),
        Method::RopePool => 2.0 * (psi_q + f * xi_q - FRAC_PI_4).cos() * (psi_k + f * xi_k - FRAC_PI_4).cos(),
    }
}

/// One query/key evaluation of the toy model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyInput {
    pub psi_q: f64,
    pub xi_q: f64,
    pub psi_k: f64,
    pub xi_k: f64,
    pub f: f64,
}

/// Max abs error between [`toy_score`] and the exact oracle on the embedded unit vectors.
pub fn toy_score_consistency(method: Method, inputs: &[ToyInput]) -> Result<f64> {
    let mut worst = 0.0f64;
    for inp in inputs {
        let q = Array2::from_shape_vec((1, 2), vec![inp.psi_q.cos(), inp.psi_q.sin()]).expect("1×2");
        let k = Array2::from_shape_vec((1, 2), vec![inp.psi_k.cos(), inp.psi_k.sin()]).expect("1×2");
        let qk = QkMatrices::new(q, k)?;
        let units = method.unit_count(2);
        let params = PeParams::with_scalar_frequencies(method, 2, &vec![inp.f; units])?;
        let exact = exact_attention(
            method,
            &qk,
            &PositionalIndexSequence::scalars(&[inp.xi_q]),
            &PositionalIndexSequence::scalars(&[inp.xi_k]),
            &params,
        )?;
        let closed = toy_score(method, inp.psi_q, inp.xi_q, inp.psi_k, inp.xi_k, inp.f);
        worst = worst.max((exact.values[[0, 0]] - closed).abs());
    }
    Ok(worst)
}

/// Uniform random inputs with angles in `[-2π, 2π)` and `f ∈ [0, 1)`.
pub fn random_toy_inputs(n: usize, seed: u64) -> Vec<ToyInput> {
    let mut rng = SeededRng::new(seed, stream_id(TOY_STREAM, 1));
    (0..n)
        .map(|_| ToyInput {
            psi_q: rng.uniform_range(-2.0 * PI, 2.0 * PI),
            xi_q: rng.uniform_range(-2.0 * PI, 2.0 * PI),
            psi_k: rng.uniform_range(-2.0 * PI, 2.0 * PI),
            xi_k: rng.uniform_range(-2.0 * PI, 2.0 * PI),
            f: rng.uniform(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    /// `|f_grid| × P`, columns in ascending-ψ order.
    pub values: Array2<f64>,
    pub f_grid: Vec<f64>,
    pub query_index: usize,
    /// `order[j]` is the dataset index shown in column `j`.
    pub order: Vec<usize>,
    pub sorted_psi: Vec<f64>,
}

impl Heatmap {
    /// Column holding the query itself.
    pub fn query_column(&self) -> usize {
        self.order.iter().position(|&i| i == self.query_index).expect("query is in the dataset")
    }

    /// Header `psi,f_0,f_1,...`, then one line per point (ψ, then its score at each f).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("psi");
        for f in &self.f_grid {
            out.push(',');
            out.push_str(&fmt_f64(*f));
        }
        out.push('\n');
        for (j, psi) in self.sorted_psi.iter().enumerate() {
            out.push_str(&fmt_f64(*psi));
            for v in self.values.column(j) {
                out.push(',');
                out.push_str(&fmt_f64(*v));
            }
            out.push('\n');
        }
        out
    }
}

/// Round-trippable float formatting with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn check_grid(f_grid: &[f64]) -> Result<()> {
    match f_grid.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        Some(f) => Err(Error::InvalidArgument(format!("frequency {f} outside [0, 1]"))),
        None => Ok(()),
    }
}

pub fn heatmap(method: Method, ds: &ToyDataset, query_index: usize, f_grid: &[f64]) -> Result<Heatmap> {
    if query_index >= ds.len() {
        return Err(Error::IndexOutOfRange { index: query_index, len: ds.len() });
    }
    check_grid(f_grid)?;
    let order = ds.sorted_order();
    let q = ds.points[query_index];
    let rows: Vec<Vec<f64>> = f_grid
        .par_iter()
        .map(|&f| order.iter().map(|&j| toy_score(method, q.psi, q.xi, ds.points[j].psi, ds.points[j].xi, f)).collect())
        .collect();
    let values = Array2::from_shape_fn((f_grid.len(), ds.len()), |(i, j)| rows[i][j]);
    let sorted_psi = order.iter().map(|&j| ds.points[j].psi).collect();
    Ok(Heatmap { values, f_grid: f_grid.to_vec(), query_index, order, sorted_psi })
}

/// Scores of keys at `(ψ+dψ, ξ+dξ)` and `(ψ-dψ, ξ-dξ)` against the query `(ψ, ξ)`.
pub fn mirror_asymmetry(method: Method, psi: f64, xi: f64, dpsi: f64, dxi: f64, f: f64) -> (f64, f64) {
    (
        toy_score(method, psi, xi, psi + dpsi, xi + dxi, f),
        toy_score(method, psi, xi, psi - dpsi, xi - dxi, f),
    )
}

/// Mean score over same-context keys minus mean over other-context keys.
///
/// Every point, the query included, counts as a key.
pub fn discriminability(method: Method, ds: &ToyDataset, query_index: usize, f: f64) -> Result<f64> {
    if ds.n_contexts < 2 {
        return Err(Error::SingleContext);
    }
    if query_index >= ds.len() {
        return Err(Error::IndexOutOfRange { index: query_index, len: ds.len() });
    }
    let q = ds.points[query_index];
    let (mut same, mut n_same, mut other, mut n_other) = (0.0, 0usize, 0.0, 0usize);
    for k in &ds.points {
        let s = toy_score(method, q.psi, q.xi, k.psi, k.xi, f);
        if k.context_id == q.context_id {
            same += s;
            n_same += 1;
        } else {
            other += s;
            n_other += 1;
        }
    }
    if n_other == 0 {
        return Err(Error::SingleContext);
    }
    Ok(same / n_same as f64 - other / n_other as f64)
}
