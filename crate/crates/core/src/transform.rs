//! Feature transforms that turn PE-enriched attention into plain inner
//! products of per-timestep features.
//!
//! A per-unit function `h` maps a unit of the content vector (one dimension
//! for F-StrIPE₁, one pair for the rotary methods) and a position to a small
//! feature vector. The unpooled transform concatenates the unit outputs; the
//! pooled transform sums them.
//!
//! * F-StrIPE₁: `h(a) = [a cos θ, a sin θ]`, pooled by summing over all dimensions.
//! * RoPE: `h` rotates each pair by `θ`, always unpooled.
//! * RoPEPool: the rotated pair's two coordinates (one per dimension) are
//!   summed, giving one feature per pair. This is the transform whose inner
//!   product expands into the four-term lag/sum score.
//!
//! Gains enter as `sqrt(Λ)` on both sides. Phases shift the query-side angle
//! only, so the product sees `Θ` exactly once.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::params::{check_positions, dot, Method, MethodTag, PeParams, Pooling, PositionalIndexSequence, QkMatrices, ScoreMatrix};

/// Which side of the attention product a feature row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Query,
    Key,
}

/// Transformed features, one row per timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: Array2<f64>,
    pub pooling: Pooling,
    pub method: Method,
}

impl FeatureMatrix {
    pub fn width(&self) -> usize {
        self.rows.ncols()
    }
}

/// Feature width produced by `method` with `pooling` on `dim`-dimensional inputs.
pub fn feature_width(method: Method, dim: usize, pooling: Pooling) -> usize {
    match (method, pooling) {
        (Method::FStripe1, Pooling::Unpooled) => 2 * dim,
        (Method::FStripe1, Pooling::Pooled) => 2,
        (Method::Rope, _) => dim,
        (Method::RopePool, _) => dim / 2,
    }
}

fn check_len(f: &[f64], p: &[f64]) -> Result<()> {
    if f.len() != p.len() {
        return Err(Error::DimensionMismatch(format!(
            "frequency dimension {} vs position dimension {}",
            f.len(),
            p.len()
        )));
    }
    Ok(())
}

fn h_fstripe1_at(a: f64, angle: f64) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    [a * c, a * s]
}

fn rotate(pair: [f64; 2], angle: f64) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    [pair[0] * c - pair[1] * s, pair[1] * c + pair[0] * s]
}

/// `[a cos<f, p>, a sin<f, p>]`.
pub fn h_fstripe1(a: f64, p: &[f64], f: &[f64]) -> Result<[f64; 2]> {
    check_len(f, p)?;
    Ok(h_fstripe1_at(a, dot(f, p)))
}

/// Rotates `pair` by `<f, p>`.
pub fn h_rope(pair: [f64; 2], p: &[f64], f: &[f64]) -> Result<[f64; 2]> {
    check_len(f, p)?;
    Ok(rotate(pair, dot(f, p)))
}

fn check_transform(method: Method, dim: usize, params: &PeParams, pooling: Pooling, pos_dim: usize) -> Result<()> {
    method.check_pooling(pooling)?;
    params.check_compatible(method, dim, pos_dim)
}

/// Writes the transformed row for content `x` at position `p` into `out`.
fn write_row(x: &[f64], p: &[f64], method: Method, params: &PeParams, pooling: Pooling, side: Side, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for unit in 0..params.units() {
        let mut angle = params.angle(unit, p);
        if side == Side::Query {
            angle += params.phases[unit];
        }
        let scale = params.gains[unit].sqrt();
        match method {
            Method::FStripe1 => {
                let h = h_fstripe1_at(scale * x[unit], angle);
                let at = if pooling == Pooling::Pooled { 0 } else { 2 * unit };
                out[at] += h[0];
                out[at + 1] += h[1];
            }
            Method::Rope => {
                let h = rotate([scale * x[2 * unit], scale * x[2 * unit + 1]], angle);
                out[2 * unit] = h[0];
                out[2 * unit + 1] = h[1];
            }
            Method::RopePool => {
                let h = rotate([scale * x[2 * unit], scale * x[2 * unit + 1]], angle);
                out[unit] = h[0] + h[1];
            }
        }
    }
}

/// Transforms one content vector.
pub fn transform(x: &[f64], p: &[f64], method: Method, params: &PeParams, pooling: Pooling, side: Side) -> Result<Vec<f64>> {
    check_transform(method, x.len(), params, pooling, p.len())?;
    let mut out = vec![0.0; feature_width(method, x.len(), pooling)];
    write_row(x, p, method, params, pooling, side, &mut out);
    Ok(out)
}

/// Transforms every row of `x` with its position.
pub fn feature_matrix(
    x: &Array2<f64>,
    positions: &PositionalIndexSequence,
    method: Method,
    params: &PeParams,
    pooling: Pooling,
    side: Side,
) -> Result<FeatureMatrix> {
    if x.nrows() != positions.len() {
        return Err(Error::DimensionMismatch(format!("{} rows with {} positions", x.nrows(), positions.len())));
    }
    check_transform(method, x.ncols(), params, pooling, positions.dim())?;
    let width = feature_width(method, x.ncols(), pooling);
    let mut rows = Array2::zeros((x.nrows(), width));
    let mut buf = vec![0.0; x.ncols()];
    for (t, mut out) in rows.rows_mut().into_iter().enumerate() {
        buf.iter_mut().zip(x.row(t)).for_each(|(b, v)| *b = *v);
        let out = out.as_slice_mut().expect("fresh array rows are contiguous");
        write_row(&buf, positions.get(t), method, params, pooling, side, out);
    }
    Ok(FeatureMatrix { rows, pooling, method })
}

/// Scores as inner products of transformed queries and keys.
pub fn transform_attention(
    qk: &QkMatrices,
    p_q: &PositionalIndexSequence,
    p_k: &PositionalIndexSequence,
    method: Method,
    params: &PeParams,
    pooling: Pooling,
) -> Result<ScoreMatrix> {
    check_positions(qk, p_q, p_k)?;
    let fq = feature_matrix(&qk.q, p_q, method, params, pooling, Side::Query)?;
    let fk = feature_matrix(&qk.k, p_k, method, params, pooling, Side::Key)?;
    let tag = match pooling {
        Pooling::Unpooled => MethodTag::TransformUnpooled,
        Pooling::Pooled => MethodTag::TransformPooled,
    };
    Ok(ScoreMatrix::new(fq.rows.dot(&fk.rows.t()), tag))
}

/// Pooled-minus-unpooled statistics for F-StrIPE₁.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualStats {
    pub mean_abs: f64,
    pub max_abs: f64,
    /// Mean of the signed difference.
    pub mean_signed: f64,
}

/// How far pooled F-StrIPE₁ scores sit from unpooled ones.
///
/// The difference is exactly the sum of the cross-dimension products
/// `h(q_md) · h(k_nd')` over `d != d'`.
pub fn cross_dimension_residual(
    qk: &QkMatrices,
    p_q: &PositionalIndexSequence,
    p_k: &PositionalIndexSequence,
    params: &PeParams,
) -> Result<ResidualStats> {
    let unpooled = transform_attention(qk, p_q, p_k, Method::FStripe1, params, Pooling::Unpooled)?;
    let pooled = transform_attention(qk, p_q, p_k, Method::FStripe1, params, Pooling::Pooled)?;
    let diff = &pooled.values - &unpooled.values;
    let n = diff.len().max(1) as f64;
    Ok(ResidualStats {
        mean_abs: diff.iter().map(|v| v.abs()).sum::<f64>() / n,
        max_abs: diff.iter().fold(0.0, |acc: f64, v| acc.max(v.abs())),
        mean_signed: diff.sum() / n,
    })
}
