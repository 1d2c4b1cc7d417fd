//! Efficient positional encodings for linearized attention.
//!
//! The crate implements three families of PE-enriched attention and the
//! tools used to compare them:
//!
//! * [`oracle`] evaluates exact scores term by term for F-StrIPE₁, RoPE and
//!   RoPEPool, plus analytic frequency gradients.
//! * [`transform`] rewrites each method as pooled or unpooled feature
//!   transforms, so scores become inner products of per-timestep features.
//! * [`spe`] builds stochastic Fourier features and their ideal-covariance limit.
//! * [`kernel`] checks tensor-product factorizations and positive definiteness.
//! * [`linear`] runs the `O(T)` kernelized attention path against the
//!   quadratic reference and benchmarks both.
//! * [`toy`] reproduces the angular toy model of content/context interaction.
//! * [`pianoroll`], [`metrics`] and [`context`] cover symbolic-music
//!   evaluation and content/context mutual information.

pub mod cli;
pub mod context;
pub mod error;
pub mod kernel;
pub mod linear;
pub mod metrics;
pub mod oracle;
pub mod params;
pub mod pianoroll;
pub mod rng;
pub mod spe;
pub mod toy;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
pub use oracle::{canonical_attention, exact_attention, frequency_gradient, positional_matrix_rff, PositionalMatrix};
pub use params::{
    make_multihead_params, make_params, InitScheme, Method, MethodTag, PeParams, Pooling, PositionKind,
    PositionalIndexSequence, QkMatrices, ScoreMatrix, DEFAULT_BASE,
};
pub use transform::{feature_matrix, transform, transform_attention, FeatureMatrix, Side};
