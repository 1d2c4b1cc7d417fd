//! Kernel views of PE-enriched attention: Gram matrices, tensor-product
//! decompositions and positive-definiteness checks.
//!
//! A sample set `{(x_i, p_i)}` is used on both sides of the score, so
//! `G[i][j]` is the score of sample `i` as a query against sample `j` as a
//! key. The decomposition splits each unit's score into content kernels
//! (functions of the content coordinates only) multiplied elementwise by
//! context kernels (functions of the positions only).

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::exact_attention;
use crate::params::{Method, PeParams, PositionalIndexSequence, QkMatrices};
use crate::rng::{stream_id, SeededRng};

const WITNESS_STREAM: u32 = 5;
const QUADRATIC_STREAM: u32 = 6;

/// Off-diagonal Frobenius norm at which Jacobi iteration stops.
pub const JACOBI_TOLERANCE: f64 = 1e-10;
/// A Gram matrix is a non-PD witness when `min_eig < -WITNESS_THRESHOLD * max|eig|`.
pub const WITNESS_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub content: Vec<f64>,
    pub position: Vec<f64>,
}

fn to_inputs(samples: &[KernelSample]) -> Result<(QkMatrices, PositionalIndexSequence)> {
    let first = samples.first().ok_or(Error::EmptyInput)?;
    let (dim, pos_dim) = (first.content.len(), first.position.len());
    if samples.iter().any(|s| s.content.len() != dim || s.position.len() != pos_dim) {
        return Err(Error::DimensionMismatch("samples must share content and position dimensions".into()));
    }
    let x = Array2::from_shape_fn((samples.len(), dim), |(i, d)| samples[i].content[d]);
    let positions: Vec<Vec<f64>> = samples.iter().map(|s| s.position.clone()).collect();
    Ok((QkMatrices::new(x.clone(), x)?, PositionalIndexSequence::vectors(&positions)?))
}

/// `G[i][j]` = exact score of sample `i` (query) against sample `j` (key).
pub fn gram_matrix(method: Method, samples: &[KernelSample], params: &PeParams) -> Result<Array2<f64>> {
    let (qk, pos) = to_inputs(samples)?;
    Ok(exact_attention(method, &qk, &pos, &pos, params)?.values)
}

/// One tensor-product term: `content ∘ context` (elementwise).
#[derive(Debug, Clone, PartialEq)]
pub struct TensorTerm {
    pub unit: usize,
    /// e.g. `"linear x cos(lag)"` or `"F2 x sin(lag)"`.
    pub label: &'static str,
    pub content: Array2<f64>,
    pub context: Array2<f64>,
}

impl TensorTerm {
    pub fn product(&self) -> Array2<f64> {
        &self.content * &self.context
    }
}

/// Decomposes the Gram matrix into content-kernel ⊗ context-kernel terms.
///
/// Gains are folded into the context kernel.
pub fn tensor_terms(method: Method, samples: &[KernelSample], params: &PeParams) -> Result<Vec<TensorTerm>> {
    let (qk, pos) = to_inputs(samples)?;
    params.check_compatible(method, qk.dim(), pos.dim())?;
    let n = samples.len();
    let x = &qk.q;
    let mut terms = Vec::new();
    for unit in 0..params.units() {
        let f = params.frequency(unit);
        let (gain, phase) = (params.gains[unit], params.phases[unit]);
        let lag = Array2::from_shape_fn((n, n), |(i, j)| {
            f.iter().zip(pos.get(i).iter().zip(pos.get(j))).map(|(f, (a, b))| f * (a - b)).sum::<f64>() + phase
        });
        let sum = Array2::from_shape_fn((n, n), |(i, j)| {
            f.iter().zip(pos.get(i).iter().zip(pos.get(j))).map(|(f, (a, b))| f * (a + b)).sum::<f64>() + phase
        });
        let context = |a: &Array2<f64>, g: fn(f64) -> f64| a.mapv(|v| gain * g(v));
        match method {
            Method::FStripe1 => terms.push(TensorTerm {
                unit,
                label: "linear x cos(lag)",
                content: Array2::from_shape_fn((n, n), |(i, j)| x[[i, unit]] * x[[j, unit]]),
                context: context(&lag, f64::cos),
            }),
            Method::Rope | Method::RopePool => {
                let (a, b) = (2 * unit, 2 * unit + 1);
                let content = |g: &dyn Fn(f64, f64, f64, f64) -> f64| {
                    Array2::from_shape_fn((n, n), |(i, j)| g(x[[i, a]], x[[i, b]], x[[j, a]], x[[j, b]]))
                };
                terms.push(TensorTerm {
                    unit,
                    label: "F1 x cos(lag)",
                    content: content(&|q1, q2, k1, k2| q1 * k1 + q2 * k2),
                    context: context(&lag, f64::cos),
                });
                terms.push(TensorTerm {
                    unit,
                    label: "F2 x sin(lag)",
                    content: content(&|q1, q2, k1, k2| q1 * k2 - q2 * k1),
                    context: context(&lag, f64::sin),
                });
                if method == Method::RopePool {
                    terms.push(TensorTerm {
                        unit,
                        label: "F3 x sin(sum)",
                        content: content(&|q1, q2, k1, k2| q1 * k1 - q2 * k2),
                        context: context(&sum, f64::sin),
                    });
                    terms.push(TensorTerm {
                        unit,
                        label: "F4 x cos(sum)",
                        content: content(&|q1, q2, k1, k2| q1 * k2 + q2 * k1),
                        context: context(&sum, f64::cos),
                    });
                }
            }
        }
    }
    Ok(terms)
}

/// Max abs error between exact scores and the sum of tensor-product terms.
pub fn factorization_check(method: Method, samples: &[KernelSample], params: &PeParams) -> Result<f64> {
    let gram = gram_matrix(method, samples, params)?;
    let mut total = Array2::zeros(gram.dim());
    for term in tensor_terms(method, samples, params)? {
        total += &term.product();
    }
    Ok(crate::params::max_abs_diff(&gram, &total))
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(matrix: &Array2<f64>) -> Result<Vec<f64>> {
    let (rows, cols) = matrix.dim();
    if rows != cols {
        return Err(Error::NonSquare { rows, cols });
    }
    let n = rows;
    let mut a = matrix.clone();
    let off_norm = |a: &Array2<f64>| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[[i, j]] * a[[i, j]];
                }
            }
        }
        s.sqrt()
    };
    for _sweep in 0..100 {
        if off_norm(&a) <= JACOBI_TOLERANCE {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq.abs() < f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[[i, i]]).collect();
    eig.sort_by(|x, y| x.total_cmp(y));
    Ok(eig)
}

/// `(G + Gᵀ) / 2`.
pub fn symmetrize(g: &Array2<f64>) -> Array2<f64> {
    (g + &g.t()) / 2.0
}

/// Largest elementwise `|G - Gᵀ|`.
pub fn asymmetry(g: &Array2<f64>) -> f64 {
    crate::params::max_abs_diff(g, &g.t().to_owned())
}

/// Found non-PD instance, serializable as a regression fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessFixture {
    pub method: Method,
    pub trial: usize,
    pub params: PeParams,
    pub samples: Vec<KernelSample>,
    pub min_eigenvalue: f64,
    pub max_abs_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdReport {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub matrix_size: usize,
    pub is_pd: bool,
    pub witness: Option<WitnessFixture>,
}

/// Positive (semi)definiteness of the symmetrized matrix at relative tolerance `tol`.
pub fn pd_check(g: &Array2<f64>, tol: f64) -> Result<PdReport> {
    let (rows, cols) = g.dim();
    if rows != cols {
        return Err(Error::NonSquare { rows, cols });
    }
    let eig = symmetric_eigenvalues(&symmetrize(g))?;
    let min = eig.first().copied().unwrap_or(0.0);
    let max = eig.last().copied().unwrap_or(0.0);
    Ok(PdReport {
        min_eigenvalue: min,
        max_eigenvalue: max,
        matrix_size: rows,
        is_pd: min >= -tol * max.abs().max(1.0),
        witness: None,
    })
}

/// Smallest `xᵀ G x` over `trials` random unit vectors.
pub fn min_quadratic_form(g: &Array2<f64>, trials: usize, seed: u64) -> Result<f64> {
    let (rows, cols) = g.dim();
    if rows != cols {
        return Err(Error::NonSquare { rows, cols });
    }
    let mut rng = SeededRng::new(seed, stream_id(QUADRATIC_STREAM, 0));
    let mut best = f64::INFINITY;
    for _ in 0..trials {
        let mut x = ndarray::Array1::from(rng.gaussian_vec(rows));
        let norm = x.dot(&x).sqrt();
        if norm > 0.0 {
            x /= norm;
        }
        best = best.min(x.dot(&g.dot(&x)));
    }
    Ok(best)
}

/// Randomized witness search configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessSearch {
    pub method: Method,
    pub n_points: usize,
    pub dim: usize,
    pub budget: usize,
    pub seed: u64,
    /// Positions are drawn uniformly from `[0, position_range)`.
    pub position_range: f64,
}

impl WitnessSearch {
    pub fn new(method: Method, n_points: usize, budget: usize, seed: u64) -> Self {
        WitnessSearch { method, n_points, dim: 2, budget, seed, position_range: 10.0 }
    }
}

/// Which matrix the search inspects for each candidate sample set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchTarget {
    /// The full score Gram matrix.
    Score,
    /// Each tensor-product term of the decomposition separately.
    Terms,
}

fn trial_instance(cfg: &WitnessSearch, trial: usize) -> Result<(PeParams, Vec<KernelSample>)> {
    let mut rng = SeededRng::new(cfg.seed, stream_id(WITNESS_STREAM, trial as u64));
    let units = cfg.method.unit_count(cfg.dim);
    let freqs: Vec<f64> = (0..units).map(|_| rng.uniform_open_closed()).collect();
    let params = PeParams::with_scalar_frequencies(cfg.method, cfg.dim, &freqs)?;
    let samples = (0..cfg.n_points)
        .map(|_| KernelSample {
            content: rng.gaussian_vec(cfg.dim),
            position: vec![rng.uniform_range(0.0, cfg.position_range)],
        })
        .collect();
    Ok((params, samples))
}

fn spectrum(g: &Array2<f64>) -> (f64, f64) {
    let eig = symmetric_eigenvalues(&symmetrize(g)).expect("square");
    let min = eig[0];
    let max_abs = eig.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    (min, max_abs)
}

/// Searches random sample sets for a symmetrized matrix with
/// `min_eig < -1e-6 * max|eig|`. Returns the lowest-index success.
pub fn pd_witness_search(cfg: &WitnessSearch, target: SearchTarget) -> Result<PdReport> {
    if cfg.n_points < 2 {
        return Err(Error::InvalidArgument("witness search needs at least two points".into()));
    }
    if cfg.method.is_pair_based() && !cfg.dim.is_multiple_of(2) {
        return Err(Error::OddDimension(cfg.dim));
    }
    let found = (0..cfg.budget).into_par_iter().find_map_first(|trial| {
        let (params, samples) = trial_instance(cfg, trial).ok()?;
        let matrices = match target {
            SearchTarget::Score => vec![gram_matrix(cfg.method, &samples, &params).ok()?],
            SearchTarget::Terms => tensor_terms(cfg.method, &samples, &params).ok()?.iter().map(TensorTerm::product).collect(),
        };
        matrices.iter().find_map(|g| {
            let (min, max_abs) = spectrum(g);
            (max_abs > 0.0 && min < -WITNESS_THRESHOLD * max_abs).then(|| WitnessFixture {
                method: cfg.method,
                trial,
                params: params.clone(),
                samples: samples.clone(),
                min_eigenvalue: min,
                max_abs_eigenvalue: max_abs,
            })
        })
    });
    Ok(match found {
        Some(w) => PdReport {
            min_eigenvalue: w.min_eigenvalue,
            max_eigenvalue: w.max_abs_eigenvalue,
            matrix_size: cfg.n_points,
            is_pd: false,
            witness: Some(w),
        },
        None => PdReport {
            min_eigenvalue: f64::NAN,
            max_eigenvalue: f64::NAN,
            matrix_size: cfg.n_points,
            is_pd: true,
            witness: None,
        },
    })
}
