//! Randomized matrix multiplication with a built-in accuracy estimate.
//!
//! A sketch `S` compresses tall inputs `A` (n×d) and `B` (n×d′) to `SA` and
//! `SB` with `t ≪ n` rows, so that `(SA)ᵀ(SB)` approximates `AᵀB`. The
//! entrywise error `‖(SA)ᵀ(SB) − AᵀB‖∞` is random; this crate estimates its
//! `(1−α)` quantile from the sketches alone by bootstrapping, extrapolates
//! that estimate to larger sketch sizes, and plans the smallest `t` that
//! meets a target error.
//!
//! Module map:
//!
//! * [`matcore`]: dense matrices, products, norms, Householder QR.
//! * [`sketch`]: Gaussian, uniform, length-sampling and SRHT operators.
//! * [`booterr`]: bootstrap quantile estimation, extrapolation, planning.
//! * [`oracle`]: Monte-Carlo ground truth for the error quantile curve.
//! * [`datagen`]: synthetic test matrices and the LIBSVM loader.
//!
//! All randomness is drawn from seed-indexed streams (see [`streams`]), so
//! every result is reproducible for a fixed seed regardless of how many
//! threads rayon uses.

// `!(x > 0.0)` is how parameters reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod booterr;
pub mod datagen;
mod error;
pub mod matcore;
pub mod oracle;
pub mod sketch;
pub mod streams;

pub use booterr::{BootstrapConfig, BootstrapScheme, QuantileEstimate};
pub use datagen::{LibsvmError, RankProfile, SynthProfile};
pub use error::{Error, Result};
pub use matcore::DenseMatrix;
pub use oracle::QuantileCurve;
pub use sketch::{SketchKind, SketchPair, SketchSpec};
