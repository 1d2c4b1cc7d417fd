//! Kernelized attention on PE-enriched features.
//!
//! Both paths compute `y_m = Σ_n a_mn v_n / Σ_n a_mn` with
//! `a_mn = ⟨φ(q'_m), φ(k'_n)⟩`, where `q'`, `k'` come from
//! [`crate::transform::feature_matrix`]. The linear path never forms the
//! `T_Q × T_K` score matrix.

use std::time::Instant;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{check_positions, Method, PeParams, Pooling, PositionalIndexSequence, QkMatrices};
use crate::rng::{stream_id, SeededRng};
use crate::transform::{feature_matrix, Side};

const FEATURE_STREAM: u32 = 7;
const BENCH_STREAM: u32 = 8;

/// Denominators at or below this raise [`Error::ZeroNormalizer`].
pub const NORMALIZER_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureMap {
    /// `x + 1` for `x >= 0`, `exp(x)` otherwise.
    #[default]
    PositiveShift,
    /// `exp(⟨w_i, x⟩ - ‖x‖²/2) / √r`, `w_i ~ N(0, I)`.
    ExpRandom { features: usize, seed: u64 },
}

impl FeatureMap {
    pub fn name(&self) -> String {
        match self {
            FeatureMap::PositiveShift => "positive_shift".into(),
            FeatureMap::ExpRandom { features, seed } => format!("exp_random(r={features},seed={seed})"),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            FeatureMap::ExpRandom { features: 0, .. } => Err(Error::InvalidArgument("random feature count must be at least 1".into())),
            _ => Ok(()),
        }
    }
}

pub fn positive_shift(x: f64) -> f64 {
    if x >= 0.0 {
        x + 1.0
    } else {
        x.exp()
    }
}

fn projection(features: usize, seed: u64, width: usize) -> Array2<f64> {
    let mut rng = SeededRng::new(seed, stream_id(FEATURE_STREAM, 0));
    Array2::from_shape_fn((features, width), |_| rng.gaussian())
}

/// A feature map with its random projection drawn for a fixed input width.
#[derive(Debug, Clone)]
pub struct PreparedMap {
    map: FeatureMap,
    w: Option<Array2<f64>>,
}

impl PreparedMap {
    pub fn new(map: FeatureMap, width: usize) -> Result<Self> {
        map.validate()?;
        let w = match map {
            FeatureMap::PositiveShift => None,
            FeatureMap::ExpRandom { features, seed } => Some(projection(features, seed, width)),
        };
        Ok(PreparedMap { map, w })
    }

    pub fn map(&self) -> FeatureMap {
        self.map
    }

    /// Applies φ to every row.
    pub fn apply(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        match &self.w {
            None => Ok(x.mapv(positive_shift)),
            Some(w) => {
                if w.ncols() != x.ncols() {
                    return Err(Error::DimensionMismatch(format!("feature map prepared for width {}, got {}", w.ncols(), x.ncols())));
                }
                let scale = (w.nrows() as f64).sqrt();
                let mut proj = x.dot(&w.t());
                for (mut row, x) in proj.rows_mut().into_iter().zip(x.rows()) {
                    let half_sq = x.dot(&x) / 2.0;
                    row.mapv_inplace(|v| (v - half_sq).exp() / scale);
                }
                Ok(proj)
            }
        }
    }
}

/// φ applied to a single vector.
pub fn phi(x: &[f64], map: FeatureMap) -> Result<Vec<f64>> {
    let prepared = PreparedMap::new(map, x.len())?;
    let row = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("1×n shape");
    Ok(prepared.apply(&row)?.into_raw_vec_and_offset().0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionOutput {
    pub y: Array2<f64>,
    pub normalizers: Array1<f64>,
}

/// Attention inputs shared by both paths.
#[derive(Debug, Clone, Copy)]
pub struct AttentionSpec<'a> {
    pub method: Method,
    pub params: &'a PeParams,
    pub pooling: Pooling,
    pub map: FeatureMap,
}

fn mapped_features(
    qk: &QkMatrices,
    p_q: &PositionalIndexSequence,
    p_k: &PositionalIndexSequence,
    v: &Array2<f64>,
    spec: &AttentionSpec<'_>,
) -> Result<(Array2<f64>, Array2<f64>)> {
    check_positions(qk, p_q, p_k)?;
    if v.nrows() != qk.k.nrows() {
        return Err(Error::DimensionMismatch(format!("{} value rows for {} keys", v.nrows(), qk.k.nrows())));
    }
    let fq = feature_matrix(&qk.q, p_q, spec.method, spec.params, spec.pooling, Side::Query)?;
    let fk = feature_matrix(&qk.k, p_k, spec.method, spec.params, spec.pooling, Side::Key)?;
    let map = PreparedMap::new(spec.map, fq.width())?;
    Ok((map.apply(&fq.rows)?, map.apply(&fk.rows)?))
}

fn normalize(mut y: Array2<f64>, normalizers: Array1<f64>) -> Result<AttentionOutput> {
    for (row, &z) in normalizers.iter().enumerate() {
        if z.is_nan() || z <= NORMALIZER_FLOOR {
            return Err(Error::ZeroNormalizer { row, value: z });
        }
    }
    for (mut row, &z) in y.rows_mut().into_iter().zip(normalizers.iter()) {
        row /= z;
    }
    Ok(AttentionOutput { y, normalizers })
}

/// `O(T)` path: `Y = φ(Q') (φ(K')ᵀ V) / φ(Q') Σ_n φ(k'_n)`.
pub fn linear_path(
    qk: &QkMatrices,
    p_q: &PositionalIndexSequence,
    p_k: &PositionalIndexSequence,
    v: &Array2<f64>,
    spec: &AttentionSpec<'_>,
) -> Result<AttentionOutput> {
    let (phi_q, phi_k) = mapped_features(qk, p_q, p_k, v, spec)?;
    let kv = phi_k.t().dot(v);
    let k_sum = phi_k.sum_axis(Axis(0));
    normalize(phi_q.dot(&kv), phi_q.dot(&k_sum))
}

/// Reference path that materializes the `T_Q × T_K` score matrix.
pub fn quadratic_path(
    qk: &QkMatrices,
    p_q: &PositionalIndexSequence,
    p_k: &PositionalIndexSequence,
    v: &Array2<f64>,
    spec: &AttentionSpec<'_>,
) -> Result<AttentionOutput> {
    let (phi_q, phi_k) = mapped_features(qk, p_q, p_k, v, spec)?;
    let scores = phi_q.dot(&phi_k.t());
    normalize(scores.dot(v), scores.sum_axis(Axis(1)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Linear,
    Quadratic,
}

impl PathKind {
    pub fn name(self) -> &'static str {
        match self {
            PathKind::Linear => "linear",
            PathKind::Quadratic => "quadratic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: Method,
    pub t: usize,
    pub d: usize,
    pub path: PathKind,
    pub median_ns: u128,
    pub repeats: usize,
}

pub const BENCH_HEADER: &str = "method,T,D,path,median_ns,repeats";

impl BenchRow {
    pub fn csv(&self) -> String {
        format!("{},{},{},{},{},{}", self.method, self.t, self.d, self.path.name(), self.median_ns, self.repeats)
    }
}

fn median(mut xs: Vec<u128>) -> u128 {
    xs.sort_unstable();
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2
    }
}

/// Wall-clock medians for both paths at each length, one warm-up run per cell.
///
/// Rows come out as linear then quadratic for each length.
pub fn benchmark_scaling(method: Method, lengths: &[usize], dim: usize, repeats: usize, seed: u64) -> Result<Vec<BenchRow>> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    if lengths.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("lengths must be ascending".into()));
    }
    let params = crate::params::make_params(method, dim, 1, crate::params::InitScheme::ExponentialShared, crate::params::DEFAULT_BASE, seed)?;
    let spec = AttentionSpec { method, params: &params, pooling: method.default_pooling(), map: FeatureMap::PositiveShift };
    let mut rows = Vec::with_capacity(lengths.len() * 2);
    for &t in lengths {
        let qk = QkMatrices::random_unit(t, t, dim, seed);
        let mut rng = SeededRng::new(seed, stream_id(BENCH_STREAM, t as u64));
        let v = Array2::from_shape_fn((t, dim), |_| rng.gaussian());
        let pos = PositionalIndexSequence::time(t);
        for path in [PathKind::Linear, PathKind::Quadratic] {
            let run = || match path {
                PathKind::Linear => linear_path(&qk, &pos, &pos, &v, &spec),
                PathKind::Quadratic => quadratic_path(&qk, &pos, &pos, &v, &spec),
            };
            std::hint::black_box(run()?);
            let mut samples = Vec::with_capacity(repeats);
            for _ in 0..repeats {
                let start = Instant::now();
                std::hint::black_box(run()?);
                samples.push(start.elapsed().as_nanos());
            }
            rows.push(BenchRow { method, t, d: dim, path, median_ns: median(samples), repeats });
        }
    }
    Ok(rows)
}

/// `time[i+1] / time[i]` for one path.
pub fn scaling_ratios(rows: &[BenchRow], path: PathKind) -> Vec<f64> {
    let times: Vec<f64> = rows.iter().filter(|r| r.path == path).map(|r| r.median_ns as f64).collect();
    times.windows(2).map(|w| w[1] / w[0]).collect()
}
