use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sketchguard::{BootstrapScheme, SketchKind};

use sketchguard_cli::commands::{
    cmd_bootstrap, cmd_oracle, cmd_plan, cmd_sketch, BootstrapInput, BootstrapOptions, OracleOptions, PlanOptions,
};
use sketchguard_cli::config::{pick, Config};
use sketchguard_cli::experiment::{
    DEFAULT_ALPHA, DEFAULT_BOOT_SAMPLES, DEFAULT_ESTIMATOR_REPS, DEFAULT_ORACLE_REPS, DEFAULT_SEED,
};
use sketchguard_cli::source::{DataSource, SynthArg, TGrid};
use sketchguard_cli::{configure_threads, run_experiment, CliError, CliResult, ExperimentSpec};

/// Sketched matrix multiplication with bootstrap error estimates.
///
/// Settings come from flags, then from `--config FILE` (flat `key = value`
/// lines keyed by flag name), then from built-in defaults. Set
/// SKETCHGUARD_THREADS to cap parallelism (0 = all cores).
#[derive(Parser)]
#[command(name = "sketchguard", version)]
struct Cli {
    /// Flat key = value settings file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sketch (A, A) and write the pair as JSON.
    Sketch(SketchArgs),
    /// Estimate q(t0) by bootstrap and extrapolate it.
    Bootstrap(BootstrapArgs),
    /// Smallest sketch size meeting an error tolerance.
    Plan(PlanArgs),
    /// Monte-Carlo quantile curve of the actual error.
    Oracle(OracleArgs),
    /// Oracle curve next to extrapolated estimates, as CSV.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct SourceArgs {
    /// LIBSVM file; features are scaled so that |A^T A|_max = 1.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Synthetic matrix `n,d,low|high`, seeded by --seed.
    #[arg(long)]
    synth: Option<SynthArg>,
    /// Feature count for --data (default: largest index seen).
    #[arg(long)]
    d: Option<usize>,
}

#[derive(Args)]
struct SketchArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// gaussian | uniform | length | srht [default: gaussian]
    #[arg(long)]
    kind: Option<SketchKind>,
    /// Sketch size [default: d/2].
    #[arg(long)]
    t: Option<usize>,
    /// Seed for every random draw [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BootstrapArgs {
    /// Pair file written by `sketch`; otherwise the data is sketched at --t0.
    #[arg(long)]
    pair: Option<PathBuf>,
    #[command(flatten)]
    source: SourceArgs,
    /// gaussian | uniform | length | srht [default: gaussian]
    #[arg(long)]
    kind: Option<SketchKind>,
    /// Initial sketch size [default: d/2].
    #[arg(long)]
    t0: Option<usize>,
    /// Sizes to extrapolate to, comma separated.
    #[arg(long)]
    t_grid: Option<TGrid>,
    /// Quantile level is 1 - alpha [default: 0.01].
    #[arg(long)]
    alpha: Option<f64>,
    /// Bootstrap replicates B [default: 20].
    #[arg(long)]
    boot_samples: Option<usize>,
    /// multiplier | nonparametric [default: multiplier]
    #[arg(long)]
    scheme: Option<BootstrapScheme>,
    /// Seed for every random draw [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    /// Estimated quantile at t0.
    #[arg(long)]
    qhat: Option<f64>,
    #[arg(long)]
    t0: Option<usize>,
    /// Error tolerance.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Bootstrap replicates B, for the cost ratio [default: 20].
    #[arg(long)]
    boot_samples: Option<usize>,
    /// Rows of A; with --d also prints the cost ratio.
    #[arg(long)]
    n: Option<usize>,
    /// Columns of A.
    #[arg(long)]
    d: Option<usize>,
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// gaussian | uniform | length | srht [default: gaussian]
    #[arg(long)]
    kind: Option<SketchKind>,
    /// Sketch sizes [default: 8 log-spaced from d/2 to 10d].
    #[arg(long)]
    t_grid: Option<TGrid>,
    /// Quantile level is 1 - alpha [default: 0.01].
    #[arg(long)]
    alpha: Option<f64>,
    /// Realizations per sketch size [default: 400, a desk-scale stand-in for 1000].
    #[arg(long)]
    reps: Option<usize>,
    /// Seed for every random draw [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// gaussian | uniform | length | srht [default: gaussian]
    #[arg(long)]
    kind: Option<SketchKind>,
    /// Initial sketch size [default: d/2].
    #[arg(long)]
    t0: Option<usize>,
    /// Sketch sizes [default: 8 log-spaced from d/2 to 10d].
    #[arg(long)]
    t_grid: Option<TGrid>,
    /// Quantile level is 1 - alpha [default: 0.01].
    #[arg(long)]
    alpha: Option<f64>,
    /// Bootstrap replicates B [default: 20].
    #[arg(long)]
    boot_samples: Option<usize>,
    /// multiplier | nonparametric [default: multiplier]
    #[arg(long)]
    scheme: Option<BootstrapScheme>,
    /// Oracle realizations per size [default: 400, a desk-scale stand-in for 1000].
    #[arg(long)]
    reps: Option<usize>,
    /// Independent t0 estimates [default: 200, a desk-scale stand-in for 1000].
    #[arg(long)]
    est_reps: Option<usize>,
    /// Seed for every random draw [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

fn source(args: SourceArgs, cfg: &Config, seed: u64) -> CliResult<DataSource> {
    DataSource::from_options(
        pick(args.data, cfg, "data")?,
        pick(args.synth, cfg, "synth")?,
        pick(args.d, cfg, "d")?,
        seed,
    )
}

fn required<T>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::usage(format!("--{flag} is required")))
}

fn output(path: Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(&p).map_err(|e| CliError::Data(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Sketch(a) => {
            let seed = pick(a.seed, &cfg, "seed")?.unwrap_or(DEFAULT_SEED);
            let src = source(a.source, &cfg, seed)?;
            let kind = pick(a.kind, &cfg, "kind")?.unwrap_or(SketchKind::Gaussian);
            let t = pick(a.t, &cfg, "t")?;
            cmd_sketch(&src, kind, t, seed, output(pick(a.out, &cfg, "out")?)?)
        }
        Command::Bootstrap(a) => {
            let seed = pick(a.seed, &cfg, "seed")?.unwrap_or(DEFAULT_SEED);
            let input = match pick(a.pair, &cfg, "pair")? {
                Some(p) => BootstrapInput::Pair(p),
                None => BootstrapInput::Fresh {
                    source: source(a.source, &cfg, seed)?,
                    kind: pick(a.kind, &cfg, "kind")?.unwrap_or(SketchKind::Gaussian),
                    t0: pick(a.t0, &cfg, "t0")?,
                    sketch_seed: seed,
                },
            };
            let opts = BootstrapOptions {
                input,
                scheme: pick(a.scheme, &cfg, "scheme")?.unwrap_or(BootstrapScheme::Multiplier),
                boot_samples: pick(a.boot_samples, &cfg, "boot-samples")?.unwrap_or(DEFAULT_BOOT_SAMPLES),
                alpha: pick(a.alpha, &cfg, "alpha")?.unwrap_or(DEFAULT_ALPHA),
                seed,
                t_grid: pick(a.t_grid, &cfg, "t-grid")?.map(|g| g.0),
            };
            cmd_bootstrap(&opts, output(pick(a.out, &cfg, "out")?)?).map(|_| ())
        }
        Command::Plan(a) => {
            let n = pick(a.n, &cfg, "n")?;
            let d = pick(a.d, &cfg, "d")?;
            let opts = PlanOptions {
                q_hat: required(pick(a.qhat, &cfg, "qhat")?, "qhat")?,
                t0: required(pick(a.t0, &cfg, "t0")?, "t0")?,
                epsilon: required(pick(a.epsilon, &cfg, "epsilon")?, "epsilon")?,
                boot_samples: pick(a.boot_samples, &cfg, "boot-samples")?.unwrap_or(DEFAULT_BOOT_SAMPLES),
                dims: n.zip(d),
            };
            cmd_plan(&opts, output(pick(a.out, &cfg, "out")?)?).map(|_| ())
        }
        Command::Oracle(a) => {
            let seed = pick(a.seed, &cfg, "seed")?.unwrap_or(DEFAULT_SEED);
            let opts = OracleOptions {
                source: source(a.source, &cfg, seed)?,
                kind: pick(a.kind, &cfg, "kind")?.unwrap_or(SketchKind::Gaussian),
                t_grid: pick(a.t_grid, &cfg, "t-grid")?.map(|g| g.0),
                alpha: pick(a.alpha, &cfg, "alpha")?.unwrap_or(DEFAULT_ALPHA),
                reps: pick(a.reps, &cfg, "reps")?.unwrap_or(DEFAULT_ORACLE_REPS),
                seed,
            };
            cmd_oracle(&opts, output(pick(a.out, &cfg, "out")?)?)
        }
        Command::Experiment(a) => {
            let seed = pick(a.seed, &cfg, "seed")?.unwrap_or(DEFAULT_SEED);
            let mut spec = ExperimentSpec::new(source(a.source, &cfg, seed)?);
            spec.seed = seed;
            if let Some(kind) = pick(a.kind, &cfg, "kind")? {
                spec.kind = kind;
            }
            spec.t0 = pick(a.t0, &cfg, "t0")?;
            spec.t_grid = pick(a.t_grid, &cfg, "t-grid")?.map(|g| g.0);
            spec.alpha = pick(a.alpha, &cfg, "alpha")?.unwrap_or(DEFAULT_ALPHA);
            spec.boot_samples = pick(a.boot_samples, &cfg, "boot-samples")?.unwrap_or(DEFAULT_BOOT_SAMPLES);
            if let Some(scheme) = pick(a.scheme, &cfg, "scheme")? {
                spec.scheme = scheme;
            }
            spec.oracle_reps = pick(a.reps, &cfg, "reps")?.unwrap_or(DEFAULT_ORACLE_REPS);
            spec.estimator_reps = pick(a.est_reps, &cfg, "est-reps")?.unwrap_or(DEFAULT_ESTIMATOR_REPS);
            spec.out = pick(a.out, &cfg, "out")?;
            spec.validate()?;
            let result = run_experiment(&spec)?;
            let mut out = output(spec.out.clone())?;
            result.write_csv(&mut out)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let threads = std::env::var("SKETCHGUARD_THREADS").ok();
    let outcome = configure_threads(threads.as_deref()).and_then(|()| run(cli));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
