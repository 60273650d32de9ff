use std::io::Write;
use std::path::PathBuf;

use log::info;
use sketchguard::booterr::{bootstrap_quantile, budget_check, extrapolate, plan_sketch_size};
use sketchguard::oracle::mc_quantile_curve_with_bands;
use sketchguard::sketch::apply_spec;
use sketchguard::{BootstrapConfig, BootstrapScheme, QuantileEstimate, SketchKind, SketchPair, SketchSpec};

use crate::error::{CliError, CliResult};
use crate::experiment::{check_grid, default_grid, default_t0, fmt_value, BAND};
use crate::pair_file::{encode_pair, read_pair};
use crate::source::DataSource;

/// Sketches `(A, A)` and writes the pair as JSON.
pub fn cmd_sketch<W: Write>(source: &DataSource, kind: SketchKind, t: Option<usize>, seed: u64, mut out: W) -> CliResult<()> {
    let a = source.load()?;
    let t = t.unwrap_or_else(|| default_t0(a.cols()));
    let pair = apply_spec(&a, &a, &SketchSpec::new(kind, t, seed)?)?;
    info!("sketched {}x{} to {}x{} ({kind})", a.rows(), a.cols(), t, a.cols());
    writeln!(out, "{}", encode_pair(&pair))?;
    Ok(())
}

#[derive(Clone, Debug)]
pub enum BootstrapInput {
    /// A pair written by `sketch`.
    Pair(PathBuf),
    /// Sketch the data at `t0` (default `d/2`) first.
    Fresh {
        source: DataSource,
        kind: SketchKind,
        t0: Option<usize>,
        sketch_seed: u64,
    },
}

#[derive(Clone, Debug)]
pub struct BootstrapOptions {
    pub input: BootstrapInput,
    pub scheme: BootstrapScheme,
    pub boot_samples: usize,
    pub alpha: f64,
    pub seed: u64,
    pub t_grid: Option<Vec<usize>>,
}

fn bootstrap_pair(input: &BootstrapInput) -> CliResult<SketchPair> {
    match input {
        BootstrapInput::Pair(path) => read_pair(path),
        BootstrapInput::Fresh {
            source,
            kind,
            t0,
            sketch_seed,
        } => {
            let a = source.load()?;
            let t0 = t0.unwrap_or_else(|| default_t0(a.cols()));
            Ok(apply_spec(&a, &a, &SketchSpec::new(*kind, t0, *sketch_seed)?)?)
        }
    }
}

/// Writes `t,q_ext` rows: `q̂(t₀)` first, then its extrapolation to each
/// grid size.
pub fn cmd_bootstrap<W: Write>(opts: &BootstrapOptions, mut out: W) -> CliResult<QuantileEstimate> {
    if let Some(grid) = &opts.t_grid {
        check_grid(grid)?;
    }
    let cfg = BootstrapConfig::new(opts.scheme, opts.boot_samples, opts.alpha, opts.seed)?;
    let pair = bootstrap_pair(&opts.input)?;
    let est = bootstrap_quantile(&pair, &cfg)?;
    info!("q_hat({}) = {:e} from {} replicates", est.t0, est.value, opts.boot_samples);
    writeln!(out, "t,q_ext")?;
    writeln!(out, "{},{}", est.t0, fmt_value(est.value))?;
    for &t in opts.t_grid.iter().flatten().filter(|&&t| t != est.t0) {
        writeln!(out, "{t},{}", fmt_value(extrapolate(&est, t)))?;
    }
    out.flush()?;
    Ok(est)
}

#[derive(Clone, Copy, Debug)]
pub struct PlanOptions {
    pub q_hat: f64,
    pub t0: usize,
    pub epsilon: f64,
    pub boot_samples: usize,
    /// `(n, d)` of the data, for the cost ratio.
    pub dims: Option<(usize, usize)>,
}

/// Prints `t=<smallest t>` and, when the data shape is known,
/// `budget_ratio=<B / (t/t₀ + n·ln t/(d·t₀))>`.
pub fn cmd_plan<W: Write>(opts: &PlanOptions, mut out: W) -> CliResult<u64> {
    let est = QuantileEstimate::from_value(opts.t0, 0.0, opts.q_hat)?;
    let t = plan_sketch_size(&est, opts.epsilon)?;
    writeln!(out, "t={t}")?;
    if let Some((n, d)) = opts.dims {
        if n == 0 || d == 0 {
            return Err(CliError::usage("--n and --d must be at least 1"));
        }
        let t_usize = usize::try_from(t).map_err(|_| CliError::Numerical(format!("planned t={t} overflows")))?;
        let ratio = budget_check(opts.boot_samples, t_usize, opts.t0, n, d);
        writeln!(out, "budget_ratio={}", fmt_value(ratio))?;
    }
    out.flush()?;
    Ok(t)
}

#[derive(Clone, Debug)]
pub struct OracleOptions {
    pub source: DataSource,
    pub kind: SketchKind,
    pub t_grid: Option<Vec<usize>>,
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
}

/// Writes `t,oracle_q,oracle_lo,oracle_hi`.
pub fn cmd_oracle<W: Write>(opts: &OracleOptions, mut out: W) -> CliResult<()> {
    if let Some(grid) = &opts.t_grid {
        check_grid(grid)?;
    }
    let a = opts.source.load()?;
    let grid = match &opts.t_grid {
        Some(g) => g.clone(),
        None => default_grid(a.cols())?,
    };
    let curve = mc_quantile_curve_with_bands(
        &a, &a, opts.kind, &grid, opts.reps, opts.alpha, opts.seed, BAND,
    )?;
    let lows = curve.band_low.as_deref().unwrap_or_default();
    let highs = curve.band_high.as_deref().unwrap_or_default();
    writeln!(out, "t,oracle_q,oracle_lo,oracle_hi")?;
    for (i, &(t, q)) in curve.points.iter().enumerate() {
        writeln!(out, "{t},{},{},{}", fmt_value(q), fmt_value(lows[i]), fmt_value(highs[i]))?;
    }
    out.flush()?;
    Ok(())
}
