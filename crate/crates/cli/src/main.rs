//! Command-line surface for synthesis, estimation, sweeps, width
//! estimation, and the geometry audits.
//!
//! Every subcommand resolves its configuration from an optional JSON file
//! (`--config`) overlaid with inline flags, echoes the resolved config to
//! stderr as JSON (the echo is itself a valid `--config` input), and then
//! runs. Exit codes: 0 success, 1 parameter/format errors, 2 numerical
//! failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use obcs::config::{
    parse_json, ConstraintChoice, EstimateConfig, LambdaConfig, MeanWidthConfig, OutputFormat,
    SimulateConfig, SweepFileConfig, TessellateConfig, WidthSet,
};
use obcs::error::{Error, Result};
use obcs::geometry::{l1_embedding_audit, mean_width_mc, support_sparse_exact, tessellation_audit};
use obcs::harness::{rows_to_csv, rows_to_json, run_sweep, sweep_metadata};
use obcs::measure::{lambda_analytic, lambda_empirical, CovarianceSpec, LinkModel, SynthesisOptions};
use obcs::record;
use obcs::sampling::{norm2, sample_signal, RngSpec, Signal, SignalKind};
use obcs::solve::{estimate, ConstraintSet};

#[derive(Parser)]
#[command(name = "obcs", version, about = "One-bit measurement synthesis and reconstruction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw single-bit measurements of a sampled signal and write a record file.
    Simulate(SimulateArgs),
    /// Reconstruct a signal from a record file.
    Estimate(EstimateArgs),
    /// Run a Monte Carlo sweep from a config file.
    Sweep(SweepArgs),
    /// Monte Carlo mean-width estimate of a signal set.
    Meanwidth(MeanwidthArgs),
    /// Tessellation and l1-embedding audits of the sign map.
    Tessellate(TessellateArgs),
    /// Analytic (and optionally empirical) link correlation coefficient.
    Lambda(LambdaArgs),
}

#[derive(Args)]
struct ModelFlags {
    /// noiseless | bitflip | prequant | logistic
    #[arg(long)]
    model: Option<String>,
    /// Keep probability for bitflip.
    #[arg(long)]
    p: Option<f64>,
    /// Noise standard deviation for prequant.
    #[arg(long)]
    sigma: Option<f64>,
    /// Scale for logistic.
    #[arg(long)]
    alpha: Option<f64>,
}

impl ModelFlags {
    fn build(&self) -> Result<Option<LinkModel>> {
        let Some(name) = self.model.as_deref() else {
            return Ok(None);
        };
        let model = match name {
            "noiseless" => LinkModel::Noiseless,
            "bitflip" => LinkModel::BitFlip {
                p: self.p.ok_or_else(|| Error::Parameter("bitflip needs --p".into()))?,
            },
            "prequant" => LinkModel::PreQuantNoise {
                sigma: self
                    .sigma
                    .ok_or_else(|| Error::Parameter("prequant needs --sigma".into()))?,
            },
            "logistic" => LinkModel::Logistic {
                alpha: self
                    .alpha
                    .ok_or_else(|| Error::Parameter("logistic needs --alpha".into()))?,
            },
            other => {
                return Err(Error::Parameter(format!(
                    "unknown model '{other}' (expected noiseless|bitflip|prequant|logistic)"
                )))
            }
        };
        Ok(Some(model))
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    s: Option<f64>,
    /// exact-sparse | compressible
    #[arg(long)]
    kind: Option<String>,
    #[command(flatten)]
    model: ModelFlags,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stream: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Record file produced by simulate.
    #[arg(long)]
    record: Option<PathBuf>,
    /// sparse | lowrank (correlated constraints need a config file for the
    /// diagonal).
    #[arg(long)]
    constraint: Option<String>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Attach the fixed-signal bound at this beta.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    width_samples: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// csv | json
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct MeanwidthArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// ball | sparse-hull | exact-sparse
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TessellateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    pairs: Option<usize>,
    #[arg(long)]
    embedding_samples: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct LambdaArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    model: ModelFlags,
    /// Also estimate the coefficient empirically at this many measurements.
    #[arg(long)]
    empirical_m: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Numerical(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn load_config<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Parameter(format!("cannot read config {}: {e}", path.display())))?;
    parse_json(&bytes)
}

fn echo_config<T: serde::Serialize>(config: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(config)
        .map_err(|e| Error::Format(format!("config echo: {e}")))?;
    eprintln!("{text}");
    Ok(())
}

fn require<T>(value: Option<T>, name: &str) -> Result<T> {
    value.ok_or_else(|| Error::Parameter(format!("missing required parameter: {name}")))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => run_simulate(args),
        Command::Estimate(args) => run_estimate(args),
        Command::Sweep(args) => run_sweep_cmd(args),
        Command::Meanwidth(args) => run_meanwidth(args),
        Command::Tessellate(args) => run_tessellate(args),
        Command::Lambda(args) => run_lambda(args),
    }
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    let base: Option<SimulateConfig> = args.config.as_ref().map(load_config).transpose()?;
    let kind = match args.kind.as_deref() {
        None => base.as_ref().map(|c| c.signal_kind),
        Some("exact-sparse") => Some(SignalKind::ExactSparse),
        Some("compressible") => Some(SignalKind::Compressible),
        Some(other) => {
            return Err(Error::Parameter(format!(
                "unknown signal kind '{other}' (expected exact-sparse|compressible)"
            )))
        }
    };
    let config = SimulateConfig {
        n: require(args.n.or(base.as_ref().map(|c| c.n)), "n")?,
        s: require(args.s.or(base.as_ref().map(|c| c.s)), "s")?,
        signal_kind: kind.unwrap_or(SignalKind::ExactSparse),
        model: require(args.model.build()?.or(base.as_ref().map(|c| c.model)), "model")?,
        m: require(args.m.or(base.as_ref().map(|c| c.m)), "m")?,
        seed: require(args.seed.or(base.as_ref().map(|c| c.seed)), "seed")?,
        stream: args.stream.or(base.as_ref().map(|c| c.stream)).unwrap_or(0),
        covariance_diagonal: base
            .as_ref()
            .map(|c| c.covariance_diagonal.clone())
            .unwrap_or_default(),
        output: require(
            args.output
                .map(|p| p.display().to_string())
                .or(base.as_ref().map(|c| c.output.clone())),
            "output",
        )?,
    };
    config.validate()?;
    echo_config(&config)?;

    let rng = RngSpec::with_stream(config.seed, config.stream);
    let covariance = if config.covariance_diagonal.is_empty() {
        None
    } else {
        Some(CovarianceSpec::diagonal(config.covariance_diagonal.clone())?)
    };
    let truth = build_truth(rng, &config, covariance.as_ref())?;
    let opts = SynthesisOptions {
        covariance,
        ..Default::default()
    };
    let rec = obcs::measure::synthesize_flat(&truth, config.model, config.m, rng, &opts)?;
    record::write_file(&rec, &config.output)?;
    println!(
        "{}",
        serde_json::json!({
            "output": config.output,
            "n": rec.n(),
            "m": rec.m,
            "model": config.model,
        })
    );
    Ok(())
}

/// Ground truth for simulation: a sampled signal, renormalized in the
/// covariance metric when rows are correlated.
fn build_truth(
    rng: RngSpec,
    config: &SimulateConfig,
    covariance: Option<&CovarianceSpec>,
) -> Result<Vec<f64>> {
    let signal = sample_signal(rng.derive(1), config.n, config.s, config.signal_kind)?;
    let mut values = signal.into_values();
    if let Some(cov) = covariance {
        let scale = cov.sigma_norm(&values);
        for v in values.iter_mut() {
            *v /= scale;
        }
    }
    Ok(values)
}

fn run_estimate(args: EstimateArgs) -> Result<()> {
    let base: Option<EstimateConfig> = args.config.as_ref().map(load_config).transpose()?;
    let constraint = match args.constraint.as_deref() {
        None => require(base.as_ref().map(|c| c.constraint.clone()), "constraint")?,
        Some("sparse") => ConstraintChoice::Sparse { s: require(args.s, "s")? },
        Some("lowrank") => ConstraintChoice::LowRank {
            r: require(args.r, "r")?,
            n1: require(args.n1, "n1")?,
            n2: require(args.n2, "n2")?,
        },
        Some("correlated") => {
            return Err(Error::Parameter(
                "correlated constraints need a config file carrying the diagonal".into(),
            ))
        }
        Some(other) => {
            return Err(Error::Parameter(format!(
                "unknown constraint '{other}' (expected sparse|correlated|lowrank)"
            )))
        }
    };
    let config = EstimateConfig {
        record: require(
            args.record
                .map(|p| p.display().to_string())
                .or(base.as_ref().map(|c| c.record.clone())),
            "record",
        )?,
        constraint,
        output: args
            .output
            .map(|p| p.display().to_string())
            .or(base.as_ref().and_then(|c| c.output.clone())),
        beta: args.beta.or(base.as_ref().and_then(|c| c.beta)),
        width_samples: args
            .width_samples
            .or(base.as_ref().and_then(|c| c.width_samples)),
    };
    config.validate()?;
    echo_config(&config)?;

    let rec = record::read_file(&config.record)?;
    let set = constraint_set(&config.constraint, rec.n())?;
    let mut report = estimate(&rec, &set, None)?;
    if let Some(beta) = config.beta {
        let samples = config.width_samples.unwrap_or(400);
        let w = width_of(&set, rec.n(), samples, rec.rng)?;
        report.bound_value = Some(obcs::harness::bound_fixed_signal(
            report.lambda_used.unwrap_or(f64::NAN),
            rec.m,
            w,
            beta,
        ));
    }
    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Format(format!("report serialize: {e}")))?;
    match &config.output {
        Some(path) => std::fs::write(path, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn constraint_set(choice: &ConstraintChoice, n: usize) -> Result<ConstraintSet> {
    Ok(match choice {
        ConstraintChoice::Sparse { s } => ConstraintSet::SparseBall { n, s: *s },
        ConstraintChoice::Correlated { s, diagonal } => ConstraintSet::CorrelatedSparse {
            cov: CovarianceSpec::diagonal(diagonal.clone())?,
            s: *s,
        },
        ConstraintChoice::LowRank { r, n1, n2 } => ConstraintSet::NuclearFrobenius {
            n1: *n1,
            n2: *n2,
            r: *r,
        },
    })
}

fn width_of(set: &ConstraintSet, n: usize, samples: usize, rng: RngSpec) -> Result<f64> {
    let est = match set {
        ConstraintSet::SparseBall { s, .. } => {
            let s = *s;
            mean_width_mc(
                move |g| obcs::sparse_argmax(g, s).map(|r| r.objective).unwrap_or(0.0),
                n,
                samples,
                rng.derive(99),
                "sparse-ball",
            )?
        }
        ConstraintSet::CorrelatedSparse { cov, s } => {
            let cov = cov.clone();
            let s = *s;
            mean_width_mc(
                move |g| {
                    obcs::correlated_argmax(g, &cov, s)
                        .map(|r| r.objective)
                        .unwrap_or(0.0)
                },
                n,
                samples,
                rng.derive(99),
                "correlated-sparse",
            )?
        }
        ConstraintSet::NuclearFrobenius { n1, n2, r } => {
            let (n1, n2, r) = (*n1, *n2, *r);
            mean_width_mc(
                move |g| {
                    obcs::lowrank_argmax(g, n1, n2, r)
                        .map(|rep| rep.objective)
                        .unwrap_or(0.0)
                },
                n,
                samples,
                rng.derive(99),
                "nuclear-frobenius",
            )?
        }
        ConstraintSet::Oracle { .. } => {
            return Err(Error::Parameter(
                "width estimation for oracle sets is not exposed on the CLI".into(),
            ))
        }
    };
    Ok(est.w_hat)
}

fn run_sweep_cmd(args: SweepArgs) -> Result<()> {
    let mut config: SweepFileConfig = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.sweep.base_seed = seed;
    }
    if let Some(workers) = args.workers {
        config.sweep.workers = workers;
    }
    if let Some(path) = args.output {
        config.output = path.display().to_string();
    }
    match args.format.as_deref() {
        None => {}
        Some("csv") => config.format = OutputFormat::Csv,
        Some("json") => config.format = OutputFormat::Json,
        Some(other) => {
            return Err(Error::Parameter(format!(
                "unknown format '{other}' (expected csv|json)"
            )))
        }
    }
    config.sweep.validate()?;
    echo_config(&config)?;

    let rows = run_sweep(&config.sweep)?;
    match config.format {
        OutputFormat::Csv => std::fs::write(&config.output, rows_to_csv(&rows))?,
        OutputFormat::Json => {
            std::fs::write(&config.output, rows_to_json(&rows))?;
            let meta_path = format!("{}.meta.json", config.output);
            std::fs::write(&meta_path, sweep_metadata(&config.sweep))?;
        }
    }
    println!(
        "{}",
        serde_json::json!({ "output": config.output, "rows": rows.len() })
    );
    Ok(())
}

fn run_meanwidth(args: MeanwidthArgs) -> Result<()> {
    let base: Option<MeanWidthConfig> = args.config.as_ref().map(load_config).transpose()?;
    let set = match args.family.as_deref() {
        None => require(base.as_ref().map(|c| c.set.clone()), "family")?,
        Some("ball") => WidthSet::Ball { n: require(args.n, "n")? },
        Some("sparse-hull") => WidthSet::SparseHull {
            n: require(args.n, "n")?,
            s: require(args.s, "s")?,
        },
        Some("exact-sparse") => WidthSet::ExactSparse {
            n: require(args.n, "n")?,
            s: require(args.s, "s")? as usize,
        },
        Some(other) => {
            return Err(Error::Parameter(format!(
                "unknown set family '{other}' (expected ball|sparse-hull|exact-sparse)"
            )))
        }
    };
    let config = MeanWidthConfig {
        set,
        samples: require(args.samples.or(base.as_ref().map(|c| c.samples)), "samples")?,
        seed: require(args.seed.or(base.as_ref().map(|c| c.seed)), "seed")?,
    };
    config.validate()?;
    echo_config(&config)?;

    let rng = RngSpec::new(config.seed);
    let est = match config.set {
        WidthSet::Ball { n } => mean_width_mc(norm2, n, config.samples, rng, "ball")?,
        WidthSet::SparseHull { n, s } => mean_width_mc(
            move |g| obcs::sparse_argmax(g, s).map(|r| r.objective).unwrap_or(0.0),
            n,
            config.samples,
            rng,
            "sparse-hull",
        )?,
        WidthSet::ExactSparse { n, s } => mean_width_mc(
            move |g| support_sparse_exact(g, s).unwrap_or(0.0),
            n,
            config.samples,
            rng,
            "exact-sparse",
        )?,
    };
    let mut payload = serde_json::to_value(&est)
        .map_err(|e| Error::Format(format!("estimate serialize: {e}")))?;
    // For sparse families, also report the squared width against the
    // dimension proxy s log(2n/s); the proportionality constant is not
    // pinned anywhere, so it is reported rather than asserted.
    if let Some((n, s)) = match config.set {
        WidthSet::Ball { .. } => None,
        WidthSet::SparseHull { n, s } => Some((n, s)),
        WidthSet::ExactSparse { n, s } => Some((n, s as f64)),
    } {
        let proxy = s * (2.0 * n as f64 / s).ln();
        payload["width_sq_over_s_log_ratio"] =
            serde_json::json!(est.w_hat * est.w_hat / proxy);
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&payload)
            .map_err(|e| Error::Format(format!("estimate serialize: {e}")))?
    );
    Ok(())
}

fn run_tessellate(args: TessellateArgs) -> Result<()> {
    let base: Option<TessellateConfig> = args.config.as_ref().map(load_config).transpose()?;
    let config = TessellateConfig {
        n: require(args.n.or(base.as_ref().map(|c| c.n)), "n")?,
        s: require(args.s.or(base.as_ref().map(|c| c.s)), "s")?,
        m: require(args.m.or(base.as_ref().map(|c| c.m)), "m")?,
        pairs: require(args.pairs.or(base.as_ref().map(|c| c.pairs)), "pairs")?,
        embedding_samples: require(
            args.embedding_samples
                .or(base.as_ref().map(|c| c.embedding_samples)),
            "embedding_samples",
        )?,
        delta_target: args
            .delta
            .or(base.as_ref().map(|c| c.delta_target))
            .unwrap_or(0.05),
        seed: require(args.seed.or(base.as_ref().map(|c| c.seed)), "seed")?,
    };
    config.validate()?;
    echo_config(&config)?;

    let rng = RngSpec::new(config.seed);
    let (n, s) = (config.n, config.s);
    let point_sampler =
        move |spec: RngSpec| Ok(sample_signal(spec, n, s, SignalKind::ExactSparse)?.into_values());
    let audit = tessellation_audit(
        point_sampler,
        config.n,
        config.m,
        config.pairs,
        config.delta_target,
        rng.derive(1),
    )?;
    let diff_sampler = move |spec: RngSpec| {
        let a = sample_signal(spec.derive(0), n, s, SignalKind::ExactSparse)?.into_values();
        let b = sample_signal(spec.derive(1), n, s, SignalKind::ExactSparse)?.into_values();
        Ok(a.iter().zip(&b).map(|(x, y)| x - y).collect())
    };
    let embedding_dev = l1_embedding_audit(
        diff_sampler,
        config.n,
        config.m,
        config.embedding_samples,
        rng.derive(2),
    )?;
    println!(
        "{}",
        serde_json::json!({
            "tessellation": audit,
            "l1_embedding_max_deviation": embedding_dev,
        })
    );
    Ok(())
}

fn run_lambda(args: LambdaArgs) -> Result<()> {
    let base: Option<LambdaConfig> = args.config.as_ref().map(load_config).transpose()?;
    let config = LambdaConfig {
        model: require(args.model.build()?.or(base.as_ref().map(|c| c.model)), "model")?,
        empirical_m: args.empirical_m.or(base.as_ref().and_then(|c| c.empirical_m)),
        seed: args.seed.or(base.as_ref().and_then(|c| c.seed)),
    };
    config.validate()?;
    echo_config(&config)?;

    println!("{:.10}", lambda_analytic(config.model));
    if let Some(m) = config.empirical_m {
        let signal = Signal::from_values(vec![1.0], 1.0, SignalKind::ExactSparse)?;
        let est = lambda_empirical(&signal, config.model, m, RngSpec::new(config.seed.unwrap_or(0)))?;
        println!(
            "empirical {:.10} std_err {:.2e} m {}",
            est.value, est.std_err, est.samples
        );
    }
    Ok(())
}
