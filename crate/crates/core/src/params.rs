//! Shared domain types: methods, positional index sequences, encoding
//! parameters and score matrices.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_id, SeededRng};

/// Default exponential base for the fixed-frequency initializations.
pub const DEFAULT_BASE: f64 = 10_000.0;

/// Positional encoding method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// RFF encoding with one frequency per dimension.
    FStripe1,
    /// Rotary encoding: pairwise rotations, unpooled features.
    Rope,
    /// Rotary `h` with pooled features.
    RopePool,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::FStripe1, Method::Rope, Method::RopePool];

    pub fn name(self) -> &'static str {
        match self {
            Method::FStripe1 => "fstripe1",
            Method::Rope => "rope",
            Method::RopePool => "ropepool",
        }
    }

    /// Whether the unit of analysis is a pair of dimensions.
    pub fn is_pair_based(self) -> bool {
        !matches!(self, Method::FStripe1)
    }

    /// Number of parameter units for a `dim`-dimensional query/key.
    pub fn unit_count(self, dim: usize) -> usize {
        if self.is_pair_based() {
            dim / 2
        } else {
            dim
        }
    }

    /// The pooling mode the method is defined with.
    pub fn default_pooling(self) -> Pooling {
        match self {
            Method::FStripe1 | Method::Rope => Pooling::Unpooled,
            Method::RopePool => Pooling::Pooled,
        }
    }

    /// Checks that `pooling` is a valid combination for this method.
    pub fn check_pooling(self, pooling: Pooling) -> Result<()> {
        match (self, pooling) {
            (Method::FStripe1, _) | (Method::Rope, Pooling::Unpooled) | (Method::RopePool, Pooling::Pooled) => Ok(()),
            _ => Err(Error::IncompatiblePooling {
                method: self.name(),
                pooling: pooling.name(),
            }),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fstripe1" | "f-stripe1" | "fstripe" => Ok(Method::FStripe1),
            "rope" => Ok(Method::Rope),
            "ropepool" => Ok(Method::RopePool),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

/// Feature transform pooling: concatenate per-unit outputs or sum them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    Unpooled,
    Pooled,
}

impl Pooling {
    pub fn name(self) -> &'static str {
        match self {
            Pooling::Unpooled => "unpooled",
            Pooling::Pooled => "pooled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PositionKind {
    Time,
    StructuralToken,
    StructuralVector,
}

/// Per-timestep positional labels, each a vector of dimension `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionalIndexSequence {
    entries: Array2<f64>,
    kind: PositionKind,
}

impl PositionalIndexSequence {
    /// Positions `[0], [1], ..., [len - 1]`.
    pub fn time(len: usize) -> Self {
        let entries = Array2::from_shape_fn((len, 1), |(t, _)| t as f64);
        PositionalIndexSequence { entries, kind: PositionKind::Time }
    }

    /// Scalar structural labels (chord tokens and the like).
    pub fn tokens(labels: &[f64]) -> Self {
        let entries = Array2::from_shape_fn((labels.len(), 1), |(t, _)| labels[t]);
        PositionalIndexSequence { entries, kind: PositionKind::StructuralToken }
    }

    /// Scalar positions without a kind constraint (used by the toy and tests).
    pub fn scalars(values: &[f64]) -> Self {
        Self::tokens(values)
    }

    /// Vector-valued structural labels; every entry must share one dimension.
    pub fn vectors(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(1, Vec::len);
        if dim == 0 {
            return Err(Error::DimensionMismatch("position vectors must have dimension >= 1".into()));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "position {bad} has dimension {} but expected {dim}",
                rows[bad].len()
            )));
        }
        let entries = Array2::from_shape_fn((rows.len(), dim), |(t, l)| rows[t][l]);
        Ok(PositionalIndexSequence { entries, kind: PositionKind::StructuralVector })
    }

    pub fn from_array(entries: Array2<f64>, kind: PositionKind) -> Result<Self> {
        let entries = entries.as_standard_layout().into_owned();
        if entries.ncols() == 0 {
            return Err(Error::DimensionMismatch("position vectors must have dimension >= 1".into()));
        }
        if kind == PositionKind::Time {
            let ok = entries.ncols() == 1 && entries.column(0).iter().enumerate().all(|(t, &v)| v == t as f64);
            if !ok {
                return Err(Error::InvalidArgument("time positions must be 0, 1, ..., T-1".into()));
            }
        }
        Ok(PositionalIndexSequence { entries, kind })
    }

    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Dimension `L` of each position vector.
    pub fn dim(&self) -> usize {
        self.entries.ncols()
    }

    pub fn kind(&self) -> PositionKind {
        self.kind
    }

    pub fn get(&self, t: usize) -> &[f64] {
        let row = self.entries.row(t);
        // rows of a standard-layout Array2 are contiguous
        row.to_slice().expect("contiguous position row")
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.entries
    }

    /// Returns a copy with `offset` added to every coordinate.
    pub fn shifted(&self, offset: f64) -> Self {
        PositionalIndexSequence {
            entries: &self.entries + offset,
            kind: if self.kind == PositionKind::Time { PositionKind::StructuralToken } else { self.kind },
        }
    }
}

/// How frequencies are initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitScheme {
    /// `base^(-u/D)` with `u` the unit's first dimension index; same for every head.
    ExponentialShared,
    /// Exponential spectrum with each head offset by a fraction of one step.
    ExponentialPerHead,
    /// Caller-supplied values.
    Explicit,
    /// Uniform on (0, 1] per unit and coordinate.
    RandomUniform,
}

/// Frequencies, gains and phases for every unit of one attention head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeParams {
    pub method: Method,
    pub dim: usize,
    pub pos_dim: usize,
    /// One frequency vector (length `pos_dim`) per unit.
    pub frequencies: Vec<Vec<f64>>,
    pub gains: Vec<f64>,
    pub phases: Vec<f64>,
    pub head_count: usize,
    pub head_index: usize,
    pub init_scheme: InitScheme,
    pub base: f64,
}

impl PeParams {
    /// Builds parameters from explicit per-unit values.
    pub fn explicit(
        method: Method,
        dim: usize,
        frequencies: Vec<Vec<f64>>,
        gains: Vec<f64>,
        phases: Vec<f64>,
    ) -> Result<Self> {
        check_dim(method, dim)?;
        let units = method.unit_count(dim);
        if frequencies.len() != units || gains.len() != units || phases.len() != units {
            return Err(Error::DimensionMismatch(format!(
                "{method} with D={dim} needs {units} units, got {} frequencies, {} gains, {} phases",
                frequencies.len(),
                gains.len(),
                phases.len()
            )));
        }
        let pos_dim = frequencies.first().map_or(1, Vec::len);
        if pos_dim == 0 || frequencies.iter().any(|f| f.len() != pos_dim) {
            return Err(Error::DimensionMismatch("frequency vectors must share one nonzero dimension".into()));
        }
        if let Some(g) = gains.iter().find(|g| !(**g >= 0.0)) {
            return Err(Error::InvalidArgument(format!("gain {g} must be nonnegative")));
        }
        Ok(PeParams {
            method,
            dim,
            pos_dim,
            frequencies,
            gains,
            phases,
            head_count: 1,
            head_index: 0,
            init_scheme: InitScheme::Explicit,
            base: DEFAULT_BASE,
        })
    }

    /// Scalar-position parameters with unit gains and zero phases.
    pub fn with_scalar_frequencies(method: Method, dim: usize, frequencies: &[f64]) -> Result<Self> {
        let units = frequencies.len();
        Self::explicit(
            method,
            dim,
            frequencies.iter().map(|&f| vec![f]).collect(),
            vec![1.0; units],
            vec![0.0; units],
        )
    }

    pub fn units(&self) -> usize {
        self.frequencies.len()
    }

    pub fn frequency(&self, unit: usize) -> &[f64] {
        &self.frequencies[unit]
    }

    /// Phase argument `<f_unit, p>`.
    pub fn angle(&self, unit: usize, position: &[f64]) -> f64 {
        dot(&self.frequencies[unit], position)
    }

    /// Checks compatibility with `method`, a content dimension and a position dimension.
    pub fn check_compatible(&self, method: Method, dim: usize, pos_dim: usize) -> Result<()> {
        check_dim(method, dim)?;
        if self.dim != dim || self.units() != method.unit_count(dim) {
            return Err(Error::DimensionMismatch(format!(
                "parameters hold {} units for D={}, but {method} with D={dim} needs {}",
                self.units(),
                self.dim,
                method.unit_count(dim)
            )));
        }
        if self.pos_dim != pos_dim {
            return Err(Error::DimensionMismatch(format!(
                "frequency vectors have dimension {} but positions have dimension {pos_dim}",
                self.pos_dim
            )));
        }
        Ok(())
    }

    /// Same parameters relabelled for another method with the same unit layout.
    pub fn for_method(&self, method: Method) -> Result<Self> {
        check_dim(method, self.dim)?;
        if method.unit_count(self.dim) != self.units() {
            return Err(Error::DimensionMismatch(format!(
                "{} units cannot serve {method} with D={}",
                self.units(),
                self.dim
            )));
        }
        Ok(PeParams { method, ..self.clone() })
    }
}

fn check_dim(method: Method, dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    if method.is_pair_based() && !dim.is_multiple_of(2) {
        return Err(Error::OddDimension(dim));
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Builds single-head parameters.
///
/// Exponential schemes set every coordinate of unit `u`'s frequency vector to
/// `base^(-s/D)`, where `s` is the index of the unit's first dimension
/// (`s = 2u` for pairs, `s = u` for single dimensions). They ignore `seed`.
pub fn make_params(method: Method, dim: usize, pos_dim: usize, scheme: InitScheme, base: f64, seed: u64) -> Result<PeParams> {
    let mut heads = make_multihead_params(method, dim, pos_dim, scheme, 1, base, seed)?;
    Ok(heads.remove(0))
}

/// Builds one parameter set per head.
///
/// `ExponentialPerHead` offsets head `h` by `h / heads` of one exponent step,
/// so head 0 matches `ExponentialShared` and the heads interleave the spectrum.
pub fn make_multihead_params(
    method: Method,
    dim: usize,
    pos_dim: usize,
    scheme: InitScheme,
    heads: usize,
    base: f64,
    seed: u64,
) -> Result<Vec<PeParams>> {
    check_dim(method, dim)?;
    if pos_dim == 0 {
        return Err(Error::InvalidArgument("position dimension must be at least 1".into()));
    }
    if heads == 0 {
        return Err(Error::InvalidArgument("head count must be at least 1".into()));
    }
    let exponential = matches!(scheme, InitScheme::ExponentialShared | InitScheme::ExponentialPerHead);
    if exponential && !(base > 1.0) {
        return Err(Error::BadBase(base));
    }
    if scheme == InitScheme::Explicit {
        return Err(Error::InvalidArgument("explicit parameters are built with PeParams::explicit".into()));
    }
    let units = method.unit_count(dim);
    let width = if method.is_pair_based() { 2.0 } else { 1.0 };
    let d = dim as f64;

    let params = (0..heads)
        .map(|h| {
            let frequencies: Vec<Vec<f64>> = match scheme {
                InitScheme::ExponentialShared => (0..units)
                    .map(|u| vec![base.powf(-(width * u as f64) / d); pos_dim])
                    .collect(),
                InitScheme::ExponentialPerHead => {
                    let offset = width * h as f64 / heads as f64;
                    (0..units)
                        .map(|u| vec![base.powf(-(width * u as f64 + offset) / d); pos_dim])
                        .collect()
                }
                InitScheme::RandomUniform => {
                    let mut rng = SeededRng::new(seed, stream_id(1, h as u64));
                    (0..units)
                        .map(|_| (0..pos_dim).map(|_| rng.uniform_open_closed()).collect())
                        .collect()
                }
                InitScheme::Explicit => unreachable!(),
            };
            PeParams {
                method,
                dim,
                pos_dim,
                frequencies,
                gains: vec![1.0; units],
                phases: vec![0.0; units],
                head_count: heads,
                head_index: h,
                init_scheme: scheme,
                base,
            }
        })
        .collect();
    Ok(params)
}

/// Query and key content matrices sharing dimension `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct QkMatrices {
    pub q: Array2<f64>,
    pub k: Array2<f64>,
}

impl QkMatrices {
    pub fn new(q: Array2<f64>, k: Array2<f64>) -> Result<Self> {
        if q.ncols() != k.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "query dimension {} differs from key dimension {}",
                q.ncols(),
                k.ncols()
            )));
        }
        Ok(QkMatrices { q, k })
    }

    /// Gaussian queries and keys, each row scaled to unit norm.
    pub fn random_unit(t_q: usize, t_k: usize, dim: usize, seed: u64) -> Self {
        let mut rng = SeededRng::new(seed, stream_id(2, 0));
        let mut draw = |rows: usize| {
            let mut m = Array2::from_shape_fn((rows, dim), |_| rng.gaussian());
            for mut row in m.rows_mut() {
                let norm = row.dot(&row).sqrt();
                if norm > 0.0 {
                    row /= norm;
                }
            }
            m
        };
        let q = draw(t_q);
        let k = draw(t_k);
        QkMatrices { q, k }
    }

    pub fn dim(&self) -> usize {
        self.q.ncols()
    }
}

/// Which computation produced a score matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodTag {
    Exact,
    TransformUnpooled,
    TransformPooled,
    Spe,
    LinearPath,
}

/// `T_Q x T_K` attention coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub values: Array2<f64>,
    pub tag: MethodTag,
}

impl ScoreMatrix {
    pub fn new(values: Array2<f64>, tag: MethodTag) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()), "non-finite score");
        ScoreMatrix { values, tag }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }

    /// Largest absolute elementwise difference; shapes must agree.
    pub fn max_abs_diff(&self, other: &ScoreMatrix) -> f64 {
        max_abs_diff(&self.values, &other.values)
    }
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim(), "shape mismatch");
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub(crate) fn check_positions(qk: &QkMatrices, p_q: &PositionalIndexSequence, p_k: &PositionalIndexSequence) -> Result<()> {
    if p_q.len() != qk.q.nrows() || p_k.len() != qk.k.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} query rows with {} positions, {} key rows with {} positions",
            qk.q.nrows(),
            p_q.len(),
            qk.k.nrows(),
            p_k.len()
        )));
    }
    if p_q.dim() != p_k.dim() {
        return Err(Error::DimensionMismatch(format!(
            "query positions have dimension {} but key positions {}",
            p_q.dim(),
            p_k.dim()
        )));
    }
    Ok(())
}
