//! Stochastic positional encoding with sinusoidal features.
//!
//! For unit `d`, the positional features of a sequence are
//! `Ω(P, f_d, θ_d) · diag(λ_d) · Z_d / sqrt(2 N_f)` with `Z_d` a `2N_f x R`
//! standard Gaussian matrix shared between the query and key sides. Their
//! product divided by `R` approximates the positional matrix `P_d`; as `R`
//! grows the empirical covariance `Z Zᵀ / R` tends to the identity and the
//! approximation tends to the RFF form
//! `(1 / 2N_f) Σ_ω λ_ω² cos(<f_ω, p_m - p_n> + θ^Q_ω - θ^K_ω)`.

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::oracle::{canonical_attention, PositionalMatrix};
use crate::params::{check_positions, dot, Method, MethodTag, PeParams, Pooling, PositionalIndexSequence, QkMatrices, ScoreMatrix};
use crate::rng::{stream_id, SeededRng};
use crate::transform::Side;

const NOISE_STREAM: u32 = 3;
const COVARIANCE_STREAM: u32 = 4;

/// Stochastic feature configuration; all per-unit tables are indexed `[unit][ω]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SffConfig {
    pub realizations: usize,
    pub n_freq: usize,
    pub frequencies: Vec<Vec<Vec<f64>>>,
    pub gains: Vec<Vec<f64>>,
    pub phases_q: Vec<Vec<f64>>,
    pub phases_k: Vec<Vec<f64>>,
    pub seed: u64,
}

impl SffConfig {
    /// Single-frequency configuration whose `R → ∞` limit equals F-StrIPE₁ with `params`.
    ///
    /// Uses `λ = sqrt(2Λ)`, `θ^Q = Θ` and `θ^K = 0`.
    pub fn from_params(params: &PeParams, realizations: usize, seed: u64) -> Result<Self> {
        if params.method != Method::FStripe1 {
            return Err(Error::InvalidArgument("stochastic features use one unit per dimension".into()));
        }
        let cfg = SffConfig {
            realizations,
            n_freq: 1,
            frequencies: params.frequencies.iter().map(|f| vec![f.clone()]).collect(),
            gains: params.gains.iter().map(|g| vec![(2.0 * g).sqrt()]).collect(),
            phases_q: params.phases.iter().map(|p| vec![*p]).collect(),
            phases_k: vec![vec![0.0]; params.units()],
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn units(&self) -> usize {
        self.frequencies.len()
    }

    pub fn pos_dim(&self) -> usize {
        self.frequencies.first().and_then(|u| u.first()).map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 || self.n_freq == 0 {
            return Err(Error::InvalidArgument("realization and frequency counts must be at least 1".into()));
        }
        let units = self.units();
        let tables_ok = self.gains.len() == units && self.phases_q.len() == units && self.phases_k.len() == units;
        let per_unit_ok = (0..units).all(|d| {
            self.frequencies[d].len() == self.n_freq
                && self.gains[d].len() == self.n_freq
                && self.phases_q[d].len() == self.n_freq
                && self.phases_k[d].len() == self.n_freq
        });
        if !tables_ok || !per_unit_ok {
            return Err(Error::DimensionMismatch("per-unit tables must all hold n_freq entries".into()));
        }
        let l = self.pos_dim();
        if l == 0 || self.frequencies.iter().flatten().any(|f| f.len() != l) {
            return Err(Error::DimensionMismatch("frequency vectors must share one nonzero dimension".into()));
        }
        Ok(())
    }

    /// The equivalent ideal-covariance F-StrIPE₁ parameters (single frequency only).
    pub fn ideal_params(&self) -> Result<PeParams> {
        self.validate()?;
        if self.n_freq != 1 {
            return Err(Error::InvalidArgument("ideal parameters need exactly one frequency per unit".into()));
        }
        PeParams::explicit(
            Method::FStripe1,
            self.units(),
            self.frequencies.iter().map(|f| f[0].clone()).collect(),
            self.gains.iter().map(|g| g[0] * g[0] / 2.0).collect(),
            (0..self.units()).map(|d| self.phases_q[d][0] - self.phases_k[d][0]).collect(),
        )
    }

    /// Gaussian mixing matrix `Z_d` (`2N_f x R`); depends only on the seed and unit.
    pub fn noise(&self, unit: usize) -> Array2<f64> {
        let mut rng = SeededRng::new(self.seed, stream_id(NOISE_STREAM, unit as u64));
        Array2::from_shape_fn((2 * self.n_freq, self.realizations), |_| rng.gaussian())
    }
}

fn check_unit(cfg: &SffConfig, positions: &PositionalIndexSequence, unit: usize) -> Result<()> {
    cfg.validate()?;
    if unit >= cfg.units() {
        return Err(Error::IndexOutOfRange { index: unit, len: cfg.units() });
    }
    if positions.dim() != cfg.pos_dim() {
        return Err(Error::DimensionMismatch(format!(
            "positions have dimension {} but frequencies {}",
            positions.dim(),
            cfg.pos_dim()
        )));
    }
    Ok(())
}

/// Gain-weighted sinusoid matrix `Ω diag(λ) / sqrt(2 N_f)`: cosine columns then sine columns.
fn sinusoids(positions: &PositionalIndexSequence, cfg: &SffConfig, side: Side, unit: usize) -> Array2<f64> {
    let nf = cfg.n_freq;
    let phases = match side {
        Side::Query => &cfg.phases_q[unit],
        Side::Key => &cfg.phases_k[unit],
    };
    let norm = (2.0 * nf as f64).sqrt();
    let mut omega = Array2::zeros((positions.len(), 2 * nf));
    for t in 0..positions.len() {
        for w in 0..nf {
            let angle = dot(&cfg.frequencies[unit][w], positions.get(t)) + phases[w];
            let gain = cfg.gains[unit][w] / norm;
            omega[[t, w]] = gain * angle.cos();
            omega[[t, nf + w]] = gain * angle.sin();
        }
    }
    omega
}

pub(crate) fn sff_features_with_noise(
    positions: &PositionalIndexSequence,
    cfg: &SffConfig,
    side: Side,
    unit: usize,
    noise: &Array2<f64>,
) -> Result<Array2<f64>> {
    check_unit(cfg, positions, unit)?;
    if noise.dim() != (2 * cfg.n_freq, cfg.realizations) {
        return Err(Error::DimensionMismatch(format!("noise matrix is {:?}", noise.dim())));
    }
    Ok(sinusoids(positions, cfg, side, unit).dot(noise))
}

/// `T x R` stochastic positional features for one unit and side.
pub fn sff_features(positions: &PositionalIndexSequence, cfg: &SffConfig, side: Side, unit: usize) -> Result<Array2<f64>> {
    check_unit(cfg, positions, unit)?;
    sff_features_with_noise(positions, cfg, side, unit, &cfg.noise(unit))
}

/// Scores from stochastic features, unpooled or pooled across dimensions.
pub fn spe_attention(
    qk: &QkMatrices,
    p_q: &PositionalIndexSequence,
    p_k: &PositionalIndexSequence,
    cfg: &SffConfig,
    pooling: Pooling,
) -> Result<ScoreMatrix> {
    check_positions(qk, p_q, p_k)?;
    cfg.validate()?;
    if cfg.units() != qk.dim() {
        return Err(Error::DimensionMismatch(format!("{} feature units for D={}", cfg.units(), qk.dim())));
    }
    let r = cfg.realizations as f64;
    let (t_q, t_k) = (qk.q.nrows(), qk.k.nrows());
    let mut values = Array2::zeros((t_q, t_k));
    let mut pooled_q = Array2::zeros((t_q, cfg.realizations));
    let mut pooled_k = Array2::zeros((t_k, cfg.realizations));
    for d in 0..qk.dim() {
        let noise = cfg.noise(d);
        let fq = sff_features_with_noise(p_q, cfg, Side::Query, d, &noise)?;
        let fk = sff_features_with_noise(p_k, cfg, Side::Key, d, &noise)?;
        // diag(Q_:,d) P̃^Q_d / sqrt(R)
        let sq = &fq * &qk.q.column(d).insert_axis(ndarray::Axis(1)) / r.sqrt();
        let sk = &fk * &qk.k.column(d).insert_axis(ndarray::Axis(1)) / r.sqrt();
        match pooling {
            Pooling::Unpooled => values += &sq.dot(&sk.t()),
            Pooling::Pooled => {
                pooled_q += &sq;
                pooled_k += &sk;
            }
        }
    }
    if pooling == Pooling::Pooled {
        values = pooled_q.dot(&pooled_k.t());
    }
    Ok(ScoreMatrix::new(values, MethodTag::Spe))
}

/// Limit `R → ∞` of the stochastic positional matrix for one unit.
pub fn rff_positional_matrix(
    cfg: &SffConfig,
    unit: usize,
    p_q: &PositionalIndexSequence,
    p_k: &PositionalIndexSequence,
) -> Result<PositionalMatrix> {
    check_unit(cfg, p_q, unit)?;
    check_unit(cfg, p_k, unit)?;
    let nf = cfg.n_freq;
    let values = Array2::from_shape_fn((p_q.len(), p_k.len()), |(m, n)| {
        let (pm, pn) = (p_q.get(m), p_k.get(n));
        (0..nf)
            .map(|w| {
                let f = &cfg.frequencies[unit][w];
                let lag: f64 = f.iter().zip(pm.iter().zip(pn)).map(|(f, (a, b))| f * (a - b)).sum();
                let gain = cfg.gains[unit][w];
                gain * gain * (lag + cfg.phases_q[unit][w] - cfg.phases_k[unit][w]).cos()
            })
            .sum::<f64>()
            / (2.0 * nf as f64)
    });
    Ok(PositionalMatrix { values, unit })
}

/// Ideal-covariance scores through the canonical form.
pub fn rff_attention(qk: &QkMatrices, p_q: &PositionalIndexSequence, p_k: &PositionalIndexSequence, cfg: &SffConfig) -> Result<ScoreMatrix> {
    check_positions(qk, p_q, p_k)?;
    let pmats = (0..cfg.units())
        .map(|d| rff_positional_matrix(cfg, d, p_q, p_k))
        .collect::<Result<Vec<_>>>()?;
    canonical_attention(qk, &pmats)
}

/// One trial of the empirical covariance entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceSample {
    /// Mean of `R` squared standard normals (diagonal entry).
    pub alpha: f64,
    /// Mean of `R` products of independent standard normals (off-diagonal entry).
    pub beta: f64,
}

/// Draws `trials` independent `(α, β)` samples at realization count `r`.
pub fn covariance_stats(r: usize, trials: usize, seed: u64) -> Result<Vec<CovarianceSample>> {
    if r == 0 || trials == 0 {
        return Err(Error::InvalidArgument("realizations and trials must be at least 1".into()));
    }
    Ok((0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = SeededRng::new(seed, stream_id(COVARIANCE_STREAM, trial as u64));
            let (mut sq, mut cross) = (0.0, 0.0);
            for _ in 0..r {
                let (u, v) = (rng.gaussian(), rng.gaussian());
                sq += u * u;
                cross += u * v;
            }
            CovarianceSample { alpha: sq / r as f64, beta: cross / r as f64 }
        })
        .collect())
}
