//! Test matrices: synthetic inputs with a prescribed singular spectrum and
//! heavy-tailed, highly coherent left factor, and a dense LIBSVM loader.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::matcore::{cholesky, linf_norm, matmul, matmul_t, reduced_qr, DenseMatrix};
use crate::streams::{self, derive_seed, domain};

/// Densified LIBSVM inputs larger than this many entries are refused.
pub const MAX_DENSE_ENTRIES: usize = 1 << 28;
const QR_ATTEMPTS: u64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankProfile {
    /// `σ_i = 10^{κ_i}` with `κ_i` equally spaced from 0 to −6.
    Low,
    /// `σ_i` equally spaced from 0.1 to 1.
    High,
}

impl std::str::FromStr for RankProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low" => Ok(RankProfile::Low),
            "high" => Ok(RankProfile::High),
            other => Err(Error::InvalidParameter(format!(
                "unknown rank profile {other:?} (expected low or high)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthProfile {
    pub n: usize,
    pub d: usize,
    pub rank_mode: RankProfile,
    pub seed: u64,
}

impl SynthProfile {
    pub fn new(n: usize, d: usize, rank_mode: RankProfile, seed: u64) -> Result<Self> {
        if d < 2 || n < d {
            return Err(Error::InvalidParameter(format!(
                "synthetic profile needs n >= d >= 2, got n={n}, d={d}"
            )));
        }
        Ok(SynthProfile {
            n,
            d,
            rank_mode,
            seed,
        })
    }
}

/// The `d` singular values of a profile, largest first.
pub fn singular_value_profile(mode: RankProfile, d: usize) -> Vec<f64> {
    let step = |i: usize| if d > 1 { i as f64 / (d - 1) as f64 } else { 0.0 };
    match mode {
        RankProfile::Low => (0..d).map(|i| 10f64.powf(-6.0 * step(i))).collect(),
        RankProfile::High => (0..d).map(|i| 1.0 - 0.9 * step(i)).collect(),
    }
}

/// `Σσ_i² / max σ_i²` for a profile.
pub fn analytic_stable_rank(mode: RankProfile, d: usize) -> f64 {
    let sigma = singular_value_profile(mode, d);
    let top = sigma.iter().fold(0.0_f64, |m, s| m.max(*s));
    sigma.iter().map(|s| s * s).sum::<f64>() / (top * top)
}

/// `c_ij = 2·0.5^{|i−j|}`.
pub fn mvt_covariance(d: usize) -> Result<DenseMatrix> {
    DenseMatrix::from_fn(d, d, |i, j| 2.0 * 0.5f64.powi(i.abs_diff(j) as i32))
}

/// `n` i.i.d. rows from the multivariate t distribution with `nu` degrees of
/// freedom, zero mean and the covariance of [`mvt_covariance`]: each row is
/// `Lz/√(w/ν)` with `LLᵀ = C`, `z ~ N(0, I)` and `w ~ χ²_ν`.
pub fn mvt_rows(n: usize, d: usize, nu: f64, seed: u64) -> Result<DenseMatrix> {
    if n == 0 || d == 0 {
        return Err(Error::EmptyMatrix { rows: n, cols: d });
    }
    let chi = ChiSquared::new(nu)
        .map_err(|e| Error::InvalidParameter(format!("degrees of freedom {nu}: {e}")))?;
    let l = cholesky(&mvt_covariance(d)?)?;
    let mut data = vec![0.0; n * d];
    data.par_chunks_mut(d).enumerate().for_each(|(i, row)| {
        let mut rng = streams::stream(seed, domain::MVT_ROWS, i as u64);
        let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let w: f64 = chi.sample(&mut rng);
        let scale = 1.0 / (w / nu).sqrt();
        for (j, out) in row.iter_mut().enumerate() {
            let lz: f64 = l.row(j)[..=j].iter().zip(&z).map(|(a, b)| a * b).sum();
            *out = lz * scale;
        }
    });
    DenseMatrix::new(n, d, data)
}

/// The SVD factors of a synthetic matrix before normalization.
#[derive(Clone, Debug)]
pub struct SynthFactors {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

impl SynthFactors {
    /// `U·diag(σ)·Vᵀ`.
    pub fn compose(&self) -> Result<DenseMatrix> {
        let d = self.sigma.len();
        let us = DenseMatrix::from_fn(self.u.rows(), d, |i, j| self.u.get(i, j) * self.sigma[j])?;
        matmul(&us, &self.v.transpose())
    }
}

/// Draws `U` (Q factor of heavy-tailed rows) and `V` (Q factor of a Gaussian
/// `d×d` matrix). A rank-deficient draw is retried with a fresh seed, up to
/// three attempts.
pub fn synth_factors(profile: &SynthProfile) -> Result<SynthFactors> {
    let SynthProfile { n, d, rank_mode, seed } = SynthProfile::new(profile.n, profile.d, profile.rank_mode, profile.seed)?;
    let mut last_err = None;
    for attempt in 0..QR_ATTEMPTS {
        let attempt_seed = derive_seed(seed, domain::SYNTH_ATTEMPT, attempt);
        let x = mvt_rows(n, d, 2.0, attempt_seed)?;
        let g = gaussian_square(d, attempt_seed)?;
        match (reduced_qr(&x), reduced_qr(&g)) {
            (Ok((u, _)), Ok((v, _))) => {
                return Ok(SynthFactors {
                    u,
                    sigma: singular_value_profile(rank_mode, d),
                    v,
                })
            }
            (Err(e @ Error::RankDeficient { .. }), _) | (_, Err(e @ Error::RankDeficient { .. })) => {
                last_err = Some(e);
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

fn gaussian_square(d: usize, seed: u64) -> Result<DenseMatrix> {
    let mut data = vec![0.0; d * d];
    for (i, row) in data.chunks_mut(d).enumerate() {
        let mut rng = streams::stream(seed, domain::SYNTH_V, i as u64);
        row.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
    }
    DenseMatrix::new(d, d, data)
}

/// Synthetic `A = U·diag(σ)·Vᵀ` scaled so that `‖AᵀA‖∞ = 1`.
pub fn synth_matrix(profile: &SynthProfile) -> Result<DenseMatrix> {
    normalize_gram_linf(&synth_factors(profile)?.compose()?)
}

/// `A / √‖AᵀA‖∞`.
pub fn normalize_gram_linf(a: &DenseMatrix) -> Result<DenseMatrix> {
    let g = linf_norm(&matmul_t(a, a)?);
    if g == 0.0 {
        return Err(Error::ZeroMatrix("Gram normalization"));
    }
    a.scale(1.0 / g.sqrt())
}

#[derive(Debug, Error)]
pub enum LibsvmError {
    #[error("line {line}: malformed token {token:?}")]
    MalformedToken { line: usize, token: String },

    #[error("line {line}: feature index {index} does not increase past {previous}")]
    NonIncreasingIndex { line: usize, index: usize, previous: usize },

    #[error("line {line}: feature index {index} exceeds the expected {limit} features")]
    IndexOutOfRange { line: usize, index: usize, limit: usize },

    #[error("line {line}: not valid UTF-8")]
    InvalidUtf8 { line: usize },

    #[error("no data rows")]
    Empty,

    #[error("no feature columns (set the expected feature count)")]
    NoFeatures,

    #[error("{rows}x{cols} dense matrix exceeds the {MAX_DENSE_ENTRIES}-entry limit")]
    TooLarge { rows: usize, cols: usize },

    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl LibsvmError {
    /// 1-based line number for per-line errors.
    pub fn line(&self) -> Option<usize> {
        match self {
            LibsvmError::MalformedToken { line, .. }
            | LibsvmError::NonIncreasingIndex { line, .. }
            | LibsvmError::IndexOutOfRange { line, .. }
            | LibsvmError::InvalidUtf8 { line } => Some(*line),
            _ => None,
        }
    }
}

/// Parses LIBSVM text (`<label> <idx>:<val> …`, 1-based strictly increasing
/// indices) into a dense feature matrix. Labels are validated and dropped.
/// Blank lines are skipped; LF and CRLF endings are both accepted. Without
/// `expected_features` the width is the largest index seen.
pub fn parse_libsvm(bytes: &[u8], expected_features: Option<usize>) -> Result<DenseMatrix, LibsvmError> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_index = 0;
    for (lineno, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let line = lineno + 1;
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        let text = std::str::from_utf8(raw).map_err(|_| LibsvmError::InvalidUtf8 { line })?;
        let mut tokens = text.split_ascii_whitespace();
        let Some(label) = tokens.next() else {
            continue;
        };
        if !label.parse::<f64>().is_ok_and(f64::is_finite) {
            return Err(LibsvmError::MalformedToken {
                line,
                token: label.to_string(),
            });
        }
        let mut entries = Vec::new();
        let mut previous = 0;
        for token in tokens {
            let malformed = || LibsvmError::MalformedToken {
                line,
                token: token.to_string(),
            };
            let (idx, val) = token.split_once(':').ok_or_else(malformed)?;
            let index: usize = match idx.parse() {
                Ok(i) if i >= 1 && idx.bytes().all(|b| b.is_ascii_digit()) => i,
                _ => return Err(malformed()),
            };
            let value: f64 = match val.parse() {
                Ok(v) if f64::is_finite(v) => v,
                _ => return Err(malformed()),
            };
            if index <= previous {
                return Err(LibsvmError::NonIncreasingIndex { line, index, previous });
            }
            if let Some(limit) = expected_features {
                if index > limit {
                    return Err(LibsvmError::IndexOutOfRange { line, index, limit });
                }
            }
            previous = index;
            entries.push((index - 1, value));
        }
        max_index = max_index.max(previous);
        rows.push(entries);
    }
    if rows.is_empty() {
        return Err(LibsvmError::Empty);
    }
    let cols = expected_features.unwrap_or(max_index);
    if cols == 0 {
        return Err(LibsvmError::NoFeatures);
    }
    let n = rows.len();
    if n.checked_mul(cols).is_none_or(|total| total > MAX_DENSE_ENTRIES) {
        return Err(LibsvmError::TooLarge { rows: n, cols });
    }
    let mut data = vec![0.0; n * cols];
    for (i, entries) in rows.into_iter().enumerate() {
        for (j, v) in entries {
            data[i * cols + j] = v;
        }
    }
    Ok(DenseMatrix::new(n, cols, data).expect("finite values with positive shape"))
}

pub fn libsvm_load(path: impl AsRef<Path>, expected_features: Option<usize>) -> Result<DenseMatrix, LibsvmError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| LibsvmError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_libsvm(&bytes, expected_features)
}

/// Writes `a` in LIBSVM format with label `0`, omitting `+0.0` entries.
/// Values are printed in shortest round-trip form, so [`parse_libsvm`]
/// recovers them bit for bit.
pub fn write_libsvm<W: Write>(a: &DenseMatrix, mut out: W) -> std::io::Result<()> {
    for i in 0..a.rows() {
        out.write_all(b"0")?;
        for (j, v) in a.row(i).iter().enumerate() {
            if v.to_bits() != 0 {
                write!(out, " {}:{}", j + 1, v)?;
            }
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}
