//! The full protocol: an oracle quantile curve next to the distribution of
//! extrapolated bootstrap estimates, written as one CSV.

use std::io::Write;
use std::path::PathBuf;

use log::{info, warn};
use rayon::prelude::*;
use sketchguard::booterr::{bootstrap_quantile, empirical_quantile, extrapolate};
use sketchguard::oracle::{log_spaced_grid, mc_quantile_curve, MIN_REPS};
use sketchguard::sketch::apply_spec;
use sketchguard::streams::{derive_seed, domain};
use sketchguard::{BootstrapConfig, BootstrapScheme, DenseMatrix, SketchKind, SketchSpec};

use crate::error::{CliError, CliResult};
use crate::source::DataSource;

pub const DEFAULT_ALPHA: f64 = 0.01;
pub const DEFAULT_BOOT_SAMPLES: usize = 20;
pub const DEFAULT_ORACLE_REPS: usize = 400;
pub const DEFAULT_ESTIMATOR_REPS: usize = 200;
pub const DEFAULT_GRID_POINTS: usize = 8;
pub const DEFAULT_SEED: u64 = 0;

pub const CSV_HEADER: &str = "t,oracle_q,oracle_lo,oracle_hi,est_mean,est_lo,est_hi";
pub const BAND: (f64, f64) = (0.1, 0.9);

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub source: DataSource,
    pub kind: SketchKind,
    /// Defaults to `d/2`.
    pub t0: Option<usize>,
    /// Defaults to [`default_grid`].
    pub t_grid: Option<Vec<usize>>,
    pub alpha: f64,
    pub boot_samples: usize,
    pub scheme: BootstrapScheme,
    pub oracle_reps: usize,
    pub estimator_reps: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn new(source: DataSource) -> Self {
        ExperimentSpec {
            source,
            kind: SketchKind::Gaussian,
            t0: None,
            t_grid: None,
            alpha: DEFAULT_ALPHA,
            boot_samples: DEFAULT_BOOT_SAMPLES,
            scheme: BootstrapScheme::Multiplier,
            oracle_reps: DEFAULT_ORACLE_REPS,
            estimator_reps: DEFAULT_ESTIMATOR_REPS,
            seed: DEFAULT_SEED,
            out: None,
        }
    }

    /// Checks everything that does not need the data.
    pub fn validate(&self) -> CliResult<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(CliError::usage(format!("alpha must lie in (0, 0.5), got {}", self.alpha)));
        }
        if self.boot_samples < 2 {
            return Err(CliError::usage("--boot-samples must be at least 2"));
        }
        if self.oracle_reps < MIN_REPS {
            return Err(CliError::usage(format!("--reps must be at least {MIN_REPS}")));
        }
        if self.estimator_reps == 0 {
            return Err(CliError::usage("--est-reps must be at least 1"));
        }
        if self.t0 == Some(0) {
            return Err(CliError::usage("--t0 must be at least 1"));
        }
        if let Some(grid) = &self.t_grid {
            check_grid(grid)?;
        }
        Ok(())
    }

    /// `(t0, grid)` for a matrix with `d` columns.
    pub fn resolve_sizes(&self, d: usize) -> CliResult<(usize, Vec<usize>)> {
        let t0 = self.t0.unwrap_or_else(|| default_t0(d));
        let grid = match &self.t_grid {
            Some(g) => g.clone(),
            None => default_grid(d)?,
        };
        if grid[0] < t0 {
            warn!("t grid starts at {} below t0 = {t0}; those points are interpolated, not extrapolated", grid[0]);
        }
        Ok((t0, grid))
    }
}

pub fn check_grid(grid: &[usize]) -> CliResult<()> {
    if grid.is_empty() || grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::usage(format!(
            "t grid must be positive and strictly increasing, got {grid:?}"
        )));
    }
    Ok(())
}

pub fn default_t0(d: usize) -> usize {
    (d / 2).max(1)
}

/// Eight log-spaced sizes from `d/2` to `10d`.
pub fn default_grid(d: usize) -> CliResult<Vec<usize>> {
    Ok(log_spaced_grid(default_t0(d), 10 * d.max(1), DEFAULT_GRID_POINTS)?)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentRow {
    pub t: usize,
    pub oracle_q: f64,
    pub oracle_lo: f64,
    pub oracle_hi: f64,
    pub est_mean: f64,
    pub est_lo: f64,
    pub est_hi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub t0: usize,
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentResult {
    /// Mean of `|est_mean − oracle_q| / oracle_q` over rows with a positive
    /// oracle value.
    pub fn mean_relative_gap(&self) -> Option<f64> {
        let gaps: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.oracle_q > 0.0)
            .map(|r| (r.est_mean - r.oracle_q).abs() / r.oracle_q)
            .collect();
        (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.t,
                fmt_value(r.oracle_q),
                fmt_value(r.oracle_lo),
                fmt_value(r.oracle_hi),
                fmt_value(r.est_mean),
                fmt_value(r.est_lo),
                fmt_value(r.est_hi)
            )?;
        }
        out.flush()
    }
}

/// Nine significant digits.
pub fn fmt_value(v: f64) -> String {
    format!("{v:.8e}")
}

/// `q̂(t₀)` from each of `reps` independent `t₀`-sketches of `(A, A)`.
pub fn initial_estimates(
    a: &DenseMatrix,
    kind: SketchKind,
    t0: usize,
    cfg: &BootstrapConfig,
    reps: usize,
    seed: u64,
) -> CliResult<Vec<f64>> {
    let values = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let spec = SketchSpec::new(kind, t0, derive_seed(seed, domain::ESTIMATOR_SKETCH, r))?;
            let pair = apply_spec(a, a, &spec)?;
            let boot = cfg.with_seed(derive_seed(seed, domain::ESTIMATOR_BOOT, r));
            Ok(bootstrap_quantile(&pair, &boot)?.value)
        })
        .collect::<sketchguard::Result<Vec<f64>>>()?;
    Ok(values)
}

pub fn run_experiment(spec: &ExperimentSpec) -> CliResult<ExperimentResult> {
    spec.validate()?;
    let a = spec.source.load()?;
    let (t0, grid) = spec.resolve_sizes(a.cols())?;
    let cfg = BootstrapConfig::new(spec.scheme, spec.boot_samples, spec.alpha, spec.seed)?;

    info!(
        "oracle: {} sizes x {} realizations, kind {}",
        grid.len(),
        spec.oracle_reps,
        spec.kind
    );
    let curve = mc_quantile_curve(&a, &a, spec.kind, &grid, spec.oracle_reps, spec.alpha, spec.seed)?;
    let lows = curve.band_low.as_deref().expect("oracle curve carries bands");
    let highs = curve.band_high.as_deref().expect("oracle curve carries bands");

    info!("estimator: {} sketches at t0 = {t0}, B = {}", spec.estimator_reps, spec.boot_samples);
    let q0 = initial_estimates(&a, spec.kind, t0, &cfg, spec.estimator_reps, spec.seed)?;

    let mut rows = Vec::with_capacity(grid.len());
    for (i, &(t, oracle_q)) in curve.points.iter().enumerate() {
        let ext: Vec<f64> = q0
            .iter()
            .map(|&v| {
                let est = sketchguard::QuantileEstimate {
                    t0,
                    alpha: spec.alpha,
                    value: v,
                    samples: Vec::new(),
                };
                extrapolate(&est, t)
            })
            .collect();
        rows.push(ExperimentRow {
            t,
            oracle_q,
            oracle_lo: lows[i],
            oracle_hi: highs[i],
            est_mean: ext.iter().sum::<f64>() / ext.len() as f64,
            est_lo: empirical_quantile(&ext, BAND.0)?,
            est_hi: empirical_quantile(&ext, BAND.1)?,
        });
    }
    let result = ExperimentResult { t0, rows };
    if let Some(gap) = result.mean_relative_gap() {
        info!("mean relative gap between estimate and oracle: {:.1}%", gap * 100.0);
    }
    Ok(result)
}
