//! Brute-force reference scores for PE-enriched attention.
//!
//! Everything here evaluates the closed-form score expressions term by term
//! in `O(T_Q * T_K * D)`. The fast paths in [`crate::transform`],
//! [`crate::spe`] and [`crate::linear`] are all checked against it.
//!
//! Conventions shared by every method, for unit `d` with gain `Λ_d` and phase `Θ_d`:
//!
//! * lag angle `Δ⁻ = <f_d, p_m - p_n> + Θ_d`
//! * sum angle `Δ⁺ = <f_d, p_m + p_n> + Θ_d` (RoPEPool only)
//! * each unit's contribution is scaled by `Λ_d`

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::params::{check_positions, Method, MethodTag, PeParams, PositionalIndexSequence, QkMatrices, ScoreMatrix};

/// Positional matrix `P_d` of the canonical form for one unit.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionalMatrix {
    pub values: Array2<f64>,
    pub unit: usize,
}

fn lag_angle(freq: &[f64], p_m: &[f64], p_n: &[f64]) -> f64 {
    freq.iter().zip(p_m.iter().zip(p_n)).map(|(f, (a, b))| f * (a - b)).sum()
}

fn sum_angle(freq: &[f64], p_m: &[f64], p_n: &[f64]) -> f64 {
    freq.iter().zip(p_m.iter().zip(p_n)).map(|(f, (a, b))| f * (a + b)).sum()
}

/// `P_d[m, n] = Λ_d cos(<f_d, p_m - p_n> + Θ_d)`.
pub fn positional_matrix_rff(
    params: &PeParams,
    unit: usize,
    p_q: &PositionalIndexSequence,
    p_k: &PositionalIndexSequence,
) -> Result<PositionalMatrix> {
    if unit >= params.units() {
        return Err(Error::IndexOutOfRange { index: unit, len: params.units() });
    }
    if p_q.dim() != params.pos_dim || p_k.dim() != params.pos_dim {
        return Err(Error::DimensionMismatch(format!(
            "frequency dimension {} vs position dimensions {} / {}",
            params.pos_dim,
            p_q.dim(),
            p_k.dim()
        )));
    }
    let freq = params.frequency(unit);
    let (gain, phase) = (params.gains[unit], params.phases[unit]);
    let values = Array2::from_shape_fn((p_q.len(), p_k.len()), |(m, n)| {
        gain * (lag_angle(freq, p_q.get(m), p_k.get(n)) + phase).cos()
    });
    Ok(PositionalMatrix { values, unit })
}

/// Content kernel terms of one pair `(q1, q2)`, `(k1, k2)`.
struct PairTerms {
    /// `q1 k1 + q2 k2`
    f1: f64,
    /// `q1 k2 - q2 k1`
    f2: f64,
    /// `q1 k1 - q2 k2`
    f3: f64,
    /// `q1 k2 + q2 k1`
    f4: f64,
}

fn pair_terms(q1: f64, q2: f64, k1: f64, k2: f64) -> PairTerms {
    PairTerms {
        f1: q1 * k1 + q2 * k2,
        f2: q1 * k2 - q2 * k1,
        f3: q1 * k1 - q2 * k2,
        f4: q1 * k2 + q2 * k1,
    }
}

/// Score of one unit at one `(m, n)` cell.
fn unit_score(method: Method, params: &PeParams, unit: usize, q: &[f64], k: &[f64], p_m: &[f64], p_n: &[f64]) -> f64 {
    let freq = params.frequency(unit);
    let gain = params.gains[unit];
    let minus = lag_angle(freq, p_m, p_n) + params.phases[unit];
    match method {
        Method::FStripe1 => gain * q[unit] * k[unit] * minus.cos(),
        Method::Rope => {
            let t = pair_terms(q[2 * unit], q[2 * unit + 1], k[2 * unit], k[2 * unit + 1]);
            gain * (t.f1 * minus.cos() + t.f2 * minus.sin())
        }
        Method::RopePool => {
            let t = pair_terms(q[2 * unit], q[2 * unit + 1], k[2 * unit], k[2 * unit + 1]);
            let plus = sum_angle(freq, p_m, p_n) + params.phases[unit];
            gain * (t.f1 * minus.cos() + t.f2 * minus.sin() + t.f3 * plus.sin() + t.f4 * plus.cos())
        }
    }
}

fn check_inputs(method: Method, qk: &QkMatrices, p_q: &PositionalIndexSequence, p_k: &PositionalIndexSequence, params: &PeParams) -> Result<()> {
    check_positions(qk, p_q, p_k)?;
    params.check_compatible(method, qk.dim(), p_q.dim())
}

/// Exact PE-enriched attention scores from the closed forms.
pub fn exact_attention(
    method: Method,
    qk: &QkMatrices,
    p_q: &PositionalIndexSequence,
    p_k: &PositionalIndexSequence,
    params: &PeParams,
) -> Result<ScoreMatrix> {
    check_inputs(method, qk, p_q, p_k, params)?;
    let units = params.units();
    let qs: Vec<Vec<f64>> = qk.q.rows().into_iter().map(|r| r.to_vec()).collect();
    let ks: Vec<Vec<f64>> = qk.k.rows().into_iter().map(|r| r.to_vec()).collect();
    let values = Array2::from_shape_fn((qs.len(), ks.len()), |(m, n)| {
        (0..units).map(|u| unit_score(method, params, u, &qs[m], &ks[n], p_q.get(m), p_k.get(n))).sum()
    });
    Ok(ScoreMatrix::new(values, MethodTag::Exact))
}

/// Canonical form `a_mn = Σ_d q_md P_d[m, n] k_nd` with one matrix per dimension.
pub fn canonical_attention(qk: &QkMatrices, pmats: &[PositionalMatrix]) -> Result<ScoreMatrix> {
    let dim = qk.dim();
    if pmats.len() != dim {
        return Err(Error::UnitCountMismatch { expected: dim, actual: pmats.len() });
    }
    let shape = (qk.q.nrows(), qk.k.nrows());
    if let Some(bad) = pmats.iter().find(|p| p.values.dim() != shape) {
        return Err(Error::DimensionMismatch(format!(
            "positional matrix for unit {} is {:?}, expected {:?}",
            bad.unit,
            bad.values.dim(),
            shape
        )));
    }
    let values = Array2::from_shape_fn(shape, |(m, n)| {
        pmats
            .iter()
            .enumerate()
            .map(|(d, p)| qk.q[[m, d]] * p.values[[m, n]] * qk.k[[n, d]])
            .sum()
    });
    Ok(ScoreMatrix::new(values, MethodTag::Exact))
}

/// Analytic `∂a_mn / ∂f_unit[component]`.
pub fn frequency_gradient(
    method: Method,
    qk: &QkMatrices,
    p_q: &PositionalIndexSequence,
    p_k: &PositionalIndexSequence,
    params: &PeParams,
    unit: usize,
    component: usize,
) -> Result<Array2<f64>> {
    check_inputs(method, qk, p_q, p_k, params)?;
    if unit >= params.units() {
        return Err(Error::IndexOutOfRange { index: unit, len: params.units() });
    }
    if component >= params.pos_dim {
        return Err(Error::IndexOutOfRange { index: component, len: params.pos_dim });
    }
    let freq = params.frequency(unit);
    let gain = params.gains[unit];
    let phase = params.phases[unit];
    let grad = Array2::from_shape_fn((qk.q.nrows(), qk.k.nrows()), |(m, n)| {
        let (p_m, p_n) = (p_q.get(m), p_k.get(n));
        let minus = lag_angle(freq, p_m, p_n) + phase;
        let d_minus = p_m[component] - p_n[component];
        match method {
            Method::FStripe1 => -gain * qk.q[[m, unit]] * qk.k[[n, unit]] * minus.sin() * d_minus,
            Method::Rope | Method::RopePool => {
                let t = pair_terms(qk.q[[m, 2 * unit]], qk.q[[m, 2 * unit + 1]], qk.k[[n, 2 * unit]], qk.k[[n, 2 * unit + 1]]);
                let mut g = (-t.f1 * minus.sin() + t.f2 * minus.cos()) * d_minus;
                if method == Method::RopePool {
                    let plus = sum_angle(freq, p_m, p_n) + phase;
                    let d_plus = p_m[component] + p_n[component];
                    g += (t.f3 * plus.cos() - t.f4 * plus.sin()) * d_plus;
                }
                gain * g
            }
        }
    });
    Ok(grad)
}
