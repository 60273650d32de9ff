//! Monte-Carlo ground truth: the actual error `ε_t` of a sketch, the
//! empirical quantile curve `t ↦ q_{1−α}(t)`, and coverage of the
//! extrapolated bootstrap bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::booterr::{bootstrap_quantile, extrapolate, sorted_quantile, BootstrapConfig};
use crate::error::{Error, Result};
use crate::matcore::{linf_norm, matmul_t, DenseMatrix};
use crate::sketch::{apply_spec, SketchKind, SketchPair, SketchSpec};
use crate::streams::{derive_seed, domain};

pub const MIN_REPS: usize = 10;
pub const DEFAULT_BAND: (f64, f64) = (0.1, 0.9);

/// Empirical `(1−α)` quantile of `ε_t` on a grid of sketch sizes, with
/// percentile bands over the realizations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileCurve {
    pub alpha: f64,
    pub reps: usize,
    pub points: Vec<(usize, f64)>,
    pub band_low: Option<Vec<f64>>,
    pub band_high: Option<Vec<f64>>,
}

impl QuantileCurve {
    pub fn ts(&self) -> impl Iterator<Item = usize> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }

    pub fn value_at(&self, t: usize) -> Option<f64> {
        self.points.iter().find(|p| p.0 == t).map(|p| p.1)
    }
}

/// `ε_t = ‖ÃᵀB̃ − AᵀB‖∞`.
pub fn true_error(a: &DenseMatrix, b: &DenseMatrix, pair: &SketchPair) -> Result<f64> {
    let exact = matmul_t(a, b)?;
    true_error_against(&exact, pair)
}

fn true_error_against(exact: &DenseMatrix, pair: &SketchPair) -> Result<f64> {
    let approx = matmul_t(pair.a_sketch(), pair.b_sketch())?;
    if approx.shape() != exact.shape() {
        return Err(Error::DimensionMismatch {
            op: "true_error",
            left: approx.shape(),
            right: exact.shape(),
        });
    }
    Ok(linf_norm(&approx.sub(exact)?))
}

/// Seed of realization `rep` at grid position `t_index`.
fn realization_seed(seed: u64, t_index: usize, rep: usize) -> u64 {
    derive_seed(derive_seed(seed, domain::ORACLE_REALIZATION, t_index as u64), domain::ORACLE_REALIZATION, rep as u64)
}

/// All `reps` error realizations at each grid point, independently drawn
/// per `t`. Rows follow `t_grid`.
pub fn error_realizations(
    a: &DenseMatrix,
    b: &DenseMatrix,
    kind: SketchKind,
    t_grid: &[usize],
    reps: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let exact = matmul_t(a, b)?;
    t_grid
        .iter()
        .enumerate()
        .map(|(ti, &t)| {
            (0..reps)
                .into_par_iter()
                .map(|rep| {
                    let spec = SketchSpec::new(kind, t, realization_seed(seed, ti, rep))?;
                    let pair = apply_spec(a, b, &spec)?;
                    true_error_against(&exact, &pair)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect()
}

fn validate_grid(t_grid: &[usize]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidParameter("t grid is empty".into()));
    }
    if t_grid[0] == 0 || t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(format!(
            "t grid must be positive and strictly increasing, got {t_grid:?}"
        )));
    }
    Ok(())
}

/// Monte-Carlo quantile curve with the default 10%/90% bands.
pub fn mc_quantile_curve(
    a: &DenseMatrix,
    b: &DenseMatrix,
    kind: SketchKind,
    t_grid: &[usize],
    reps: usize,
    alpha: f64,
    seed: u64,
) -> Result<QuantileCurve> {
    mc_quantile_curve_with_bands(a, b, kind, t_grid, reps, alpha, seed, DEFAULT_BAND)
}

#[allow(clippy::too_many_arguments)]
pub fn mc_quantile_curve_with_bands(
    a: &DenseMatrix,
    b: &DenseMatrix,
    kind: SketchKind,
    t_grid: &[usize],
    reps: usize,
    alpha: f64,
    seed: u64,
    band: (f64, f64),
) -> Result<QuantileCurve> {
    validate_grid(t_grid)?;
    if reps < MIN_REPS {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_REPS} realizations per t, got {reps}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(band.0 > 0.0 && band.0 < band.1 && band.1 < 1.0) {
        return Err(Error::InvalidParameter(format!("invalid band percentiles {band:?}")));
    }
    let errors = error_realizations(a, b, kind, t_grid, reps, seed)?;
    let mut points = Vec::with_capacity(t_grid.len());
    let mut low = Vec::with_capacity(t_grid.len());
    let mut high = Vec::with_capacity(t_grid.len());
    for (&t, mut errs) in t_grid.iter().zip(errors) {
        errs.sort_by(f64::total_cmp);
        points.push((t, sorted_quantile(&errs, 1.0 - alpha)));
        low.push(sorted_quantile(&errs, band.0));
        high.push(sorted_quantile(&errs, band.1));
    }
    Ok(QuantileCurve {
        alpha,
        reps,
        points,
        band_low: Some(low),
        band_high: Some(high),
    })
}

/// Fraction of trials where a fresh `ε_t` falls below `q̂^ext(t)`
/// extrapolated from an independent `t₀`-sketch.
#[allow(clippy::too_many_arguments)]
pub fn coverage_probe(
    a: &DenseMatrix,
    b: &DenseMatrix,
    kind: SketchKind,
    t0: usize,
    t: usize,
    cfg: &BootstrapConfig,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if t0 == 0 || t < t0 {
        return Err(Error::InvalidParameter(format!("need t >= t0 >= 1, got t0={t0}, t={t}")));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let exact = matmul_t(a, b)?;
    let hits: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let trial = trial as u64;
            let initial = SketchSpec::new(kind, t0, derive_seed(seed, domain::COVERAGE_INITIAL, trial))?;
            let pair0 = apply_spec(a, b, &initial)?;
            let boot = cfg.with_seed(derive_seed(seed, domain::COVERAGE_BOOT, trial));
            let bound = extrapolate(&bootstrap_quantile(&pair0, &boot)?, t);
            let target = SketchSpec::new(kind, t, derive_seed(seed, domain::COVERAGE_TARGET, trial))?;
            let err = true_error_against(&exact, &apply_spec(a, b, &target)?)?;
            Ok(err <= bound)
        })
        .collect::<Result<_>>()?;
    Ok(hits.iter().filter(|h| **h).count() as f64 / trials as f64)
}

/// `points` sketch sizes spaced evenly in `ln t` from `lo` to `hi`, rounded
/// and deduplicated.
pub fn log_spaced_grid(lo: usize, hi: usize, points: usize) -> Result<Vec<usize>> {
    if lo == 0 || hi < lo || points == 0 {
        return Err(Error::InvalidParameter(format!(
            "invalid grid request lo={lo}, hi={hi}, points={points}"
        )));
    }
    if points == 1 || lo == hi {
        return Ok(vec![lo]);
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut grid: Vec<usize> = (0..points)
        .map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp().round() as usize)
        .collect();
    grid[0] = lo;
    grid[points - 1] = hi;
    grid.dedup();
    Ok(grid)
}

/// Least-squares slope of `ln q` against `ln t`; `None` when fewer than two
/// points are positive.
pub fn log_log_slope(curve: &QuantileCurve) -> Option<f64> {
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|&(t, q)| ((t as f64).ln(), q.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}
