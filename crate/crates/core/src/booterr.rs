//! Bootstrap estimates of the sketching error quantile.
//!
//! Given only the sketches `Ã = SA` and `B̃ = SB`, each replicate produces a
//! surrogate draw of `ε_t = ‖ÃᵀB̃ − AᵀB‖∞`:
//!
//! * multiplier scheme: `‖ξ̄·ÃᵀB̃ − ÃᵀΞB̃‖∞` with `ξ_i ~ N(0, 1)` i.i.d.;
//! * nonparametric scheme: resample the rows of `Ã` and `B̃` jointly with
//!   replacement and take `‖Ã*ᵀB̃* − ÃᵀB̃‖∞`. This equals the multiplier form
//!   with multinomial weights `ξ_i = ζ_i − 1`.
//!
//! The `(1−α)` quantile of the replicates estimates `q_{1−α}(t)`. Because the
//! quantile decays like `1/√t`, an estimate at a small `t₀` extrapolates to
//! any larger `t`, which also gives the sketch size needed for a target error.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{matmul_t, DenseMatrix};
use crate::sketch::SketchPair;
use crate::streams::{self, domain};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BootstrapScheme {
    Multiplier,
    Nonparametric,
}

impl std::str::FromStr for BootstrapScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multiplier" => Ok(BootstrapScheme::Multiplier),
            "nonparametric" => Ok(BootstrapScheme::Nonparametric),
            other => Err(Error::InvalidParameter(format!(
                "unknown bootstrap scheme {other:?} (expected multiplier or nonparametric)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BootstrapConfig {
    scheme: BootstrapScheme,
    replicates: usize,
    alpha: f64,
    seed: u64,
}

impl BootstrapConfig {
    /// Requires `replicates ≥ 2` and `0 < alpha < 1/2`.
    pub fn new(scheme: BootstrapScheme, replicates: usize, alpha: f64, seed: u64) -> Result<Self> {
        if replicates < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 bootstrap replicates, got {replicates}"
            )));
        }
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1/2), got {alpha}")));
        }
        Ok(BootstrapConfig {
            scheme,
            replicates,
            alpha,
            seed,
        })
    }

    pub fn scheme(&self) -> BootstrapScheme {
        self.scheme
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// `q̂_{1−α}(t₀)` together with the replicates it was computed from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileEstimate {
    pub t0: usize,
    pub alpha: f64,
    pub value: f64,
    pub samples: Vec<f64>,
}

impl QuantileEstimate {
    /// Builds an estimate directly from a known quantile value, for planning
    /// from a previously reported `q̂(t₀)`.
    pub fn from_value(t0: usize, alpha: f64, value: f64) -> Result<Self> {
        if t0 == 0 {
            return Err(Error::InvalidParameter("t0 must be at least 1".into()));
        }
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "quantile estimate must be finite and nonnegative, got {value}"
            )));
        }
        Ok(QuantileEstimate {
            t0,
            alpha,
            value,
            samples: Vec::new(),
        })
    }
}

/// `max_{j,k} |ξ̄·P_{jk} − Σ_i ξ_i·(ã_ij·b̃_ik)|` with `P = ÃᵀB̃` precomputed.
fn weighted_deviation(a: &DenseMatrix, b: &DenseMatrix, product: &DenseMatrix, xi: &[f64]) -> f64 {
    let (d, dp) = (a.cols(), b.cols());
    let xi_bar = xi.iter().sum::<f64>() / xi.len() as f64;
    let mut acc = vec![0.0; d * dp];
    for (i, &w) in xi.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let (ar, br) = (a.row(i), b.row(i));
        for (j, &aj) in ar.iter().enumerate() {
            let out = &mut acc[j * dp..(j + 1) * dp];
            for (o, &bk) in out.iter_mut().zip(br) {
                *o += w * (aj * bk);
            }
        }
    }
    acc.iter()
        .zip(product.data())
        .fold(0.0_f64, |m, (s, p)| m.max((xi_bar * p - s).abs()))
}

/// Multiplier statistic `‖ξ̄·ÃᵀB̃ − ÃᵀΞB̃‖∞` for given weights.
pub fn multiplier_statistic(pair: &SketchPair, xi: &[f64]) -> Result<f64> {
    if xi.len() != pair.t() {
        return Err(Error::InvalidParameter(format!(
            "expected {} weights, got {}",
            pair.t(),
            xi.len()
        )));
    }
    let product = matmul_t(pair.a_sketch(), pair.b_sketch())?;
    Ok(weighted_deviation(pair.a_sketch(), pair.b_sketch(), &product, xi))
}

/// Nonparametric statistic `‖Ã*ᵀB̃* − ÃᵀB̃‖∞` where row `i` of both resampled
/// sketches is row `indices[i]` of the originals.
pub fn resample_statistic(pair: &SketchPair, indices: &[usize]) -> Result<f64> {
    let t = pair.t();
    if indices.len() != t || indices.iter().any(|&l| l >= t) {
        return Err(Error::InvalidParameter(format!(
            "expected {t} row indices below {t}"
        )));
    }
    let product = matmul_t(pair.a_sketch(), pair.b_sketch())?;
    Ok(resample_deviation(pair, &product, indices))
}

fn resample_deviation(pair: &SketchPair, product: &DenseMatrix, indices: &[usize]) -> f64 {
    let (a, b) = (pair.a_sketch(), pair.b_sketch());
    let dp = b.cols();
    let mut acc = vec![0.0; a.cols() * dp];
    for &l in indices {
        let (ar, br) = (a.row(l), b.row(l));
        for (j, &aj) in ar.iter().enumerate() {
            let out = &mut acc[j * dp..(j + 1) * dp];
            for (o, &bk) in out.iter_mut().zip(br) {
                *o += aj * bk;
            }
        }
    }
    acc.iter()
        .zip(product.data())
        .fold(0.0_f64, |m, (r, p)| m.max((r - p).abs()))
}

/// Multinomial multipliers `ξ_i = ζ_i − 1` where `ζ_i` counts how often row
/// `i` appears in `indices`.
pub fn multinomial_weights(indices: &[usize], t: usize) -> Vec<f64> {
    let mut counts = vec![0.0; t];
    for &l in indices {
        counts[l] += 1.0;
    }
    counts.into_iter().map(|c| c - 1.0).collect()
}

fn draw_normals<R: Rng>(rng: &mut R, t: usize) -> Vec<f64> {
    (0..t).map(|_| rng.sample(StandardNormal)).collect()
}

fn draw_indices<R: Rng>(rng: &mut R, t: usize) -> Vec<usize> {
    (0..t).map(|_| rng.random_range(0..t)).collect()
}

/// One multiplier-bootstrap replicate.
pub fn multiplier_bootstrap_sample<R: Rng>(pair: &SketchPair, rng: &mut R) -> f64 {
    let product = matmul_t(pair.a_sketch(), pair.b_sketch()).expect("pair sketches share t rows");
    let xi = draw_normals(rng, pair.t());
    weighted_deviation(pair.a_sketch(), pair.b_sketch(), &product, &xi)
}

/// One nonparametric (row resampling) replicate.
pub fn nonparametric_bootstrap_sample<R: Rng>(pair: &SketchPair, rng: &mut R) -> f64 {
    let product = matmul_t(pair.a_sketch(), pair.b_sketch()).expect("pair sketches share t rows");
    let indices = draw_indices(rng, pair.t());
    resample_deviation(pair, &product, &indices)
}

/// The nonparametric replicate evaluated in multiplier form. Consumes the
/// same random draws as [`nonparametric_bootstrap_sample`].
pub fn multinomial_weight_sample<R: Rng>(pair: &SketchPair, rng: &mut R) -> f64 {
    let product = matmul_t(pair.a_sketch(), pair.b_sketch()).expect("pair sketches share t rows");
    let indices = draw_indices(rng, pair.t());
    let xi = multinomial_weights(&indices, pair.t());
    weighted_deviation(pair.a_sketch(), pair.b_sketch(), &product, &xi)
}

/// Linearly interpolated sample quantile: with sorted `x₍₁₎ ≤ … ≤ x₍B₎` and
/// `h = (B−1)p + 1`, returns `x₍⌊h⌋₎ + (h − ⌊h⌋)(x₍⌊h⌋+1₎ − x₍⌊h⌋₎)`, using
/// `x₍B₎` when `⌊h⌋ = B`.
pub fn empirical_quantile(samples: &[f64], p: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("quantile of an empty sample".into()));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("quantile level must lie in (0, 1), got {p}")));
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("quantile of a sample containing NaN".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted_quantile(&sorted, p))
}

pub(crate) fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    let b = sorted.len();
    let h = (b - 1) as f64 * p + 1.0;
    let lo = (h.floor() as usize).clamp(1, b);
    if lo == b {
        return sorted[b - 1];
    }
    let frac = h - lo as f64;
    sorted[lo - 1] + frac * (sorted[lo] - sorted[lo - 1])
}

/// `q̂_{1−α}(t)` from `B` replicates of the configured scheme. Replicate `b`
/// draws from stream `(seed, b)`, so a run with more replicates extends a
/// shorter one and the result does not depend on scheduling.
pub fn bootstrap_quantile(pair: &SketchPair, cfg: &BootstrapConfig) -> Result<QuantileEstimate> {
    let (a, b) = (pair.a_sketch(), pair.b_sketch());
    let product = matmul_t(a, b)?;
    let t = pair.t();
    let samples: Vec<f64> = (0..cfg.replicates)
        .into_par_iter()
        .map(|rep| {
            let mut rng = streams::stream(cfg.seed, domain::BOOTSTRAP, rep as u64);
            match cfg.scheme {
                BootstrapScheme::Multiplier => {
                    let xi = draw_normals(&mut rng, t);
                    weighted_deviation(a, b, &product, &xi)
                }
                BootstrapScheme::Nonparametric => {
                    let indices = draw_indices(&mut rng, t);
                    resample_deviation(pair, &product, &indices)
                }
            }
        })
        .collect();
    let value = empirical_quantile(&samples, 1.0 - cfg.alpha)?;
    Ok(QuantileEstimate {
        t0: t,
        alpha: cfg.alpha,
        value,
        samples,
    })
}

/// `q̂^ext(t) = √(t₀/t)·q̂(t₀)`.
pub fn extrapolate(est: &QuantileEstimate, t: usize) -> f64 {
    assert!(t >= 1, "sketch size must be at least 1");
    (est.t0 as f64 / t as f64).sqrt() * est.value
}

/// Smallest `t` with `q̂^ext(t) ≤ ε`, i.e. `⌈(√t₀·q̂(t₀)/ε)²⌉`, at least 1.
/// A bound within a relative `1e-9` of an integer is taken as that integer.
pub fn plan_sketch_size(est: &QuantileEstimate, epsilon: f64) -> Result<u64> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!("target error must be positive, got {epsilon}")));
    }
    if !(est.value >= 0.0) {
        return Err(Error::InvalidParameter(format!("negative quantile estimate {}", est.value)));
    }
    if est.value == 0.0 {
        return Ok(1);
    }
    let ratio = est.value / epsilon;
    let exact = est.t0 as f64 * ratio * ratio;
    // Rounding noise must not push an exact integer bound up by one.
    let nearest = exact.round();
    let t = if (exact - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        exact.ceil()
    };
    if t >= u64::MAX as f64 {
        return Err(Error::InvalidParameter(format!("planned sketch size {t} overflows")));
    }
    Ok((t as u64).max(1))
}

/// `B / (t/t₀ + n·ln(t)/(d·t₀))`. At most 1 means the bootstrap costs no
/// more than forming the sketch itself (hidden constant taken as 1).
pub fn budget_check(replicates: usize, t: usize, t0: usize, n: usize, d: usize) -> f64 {
    let (t, t0, n, d) = (t as f64, t0 as f64, n as f64, d as f64);
    replicates as f64 / (t / t0 + n * t.ln() / (d * t0))
}
