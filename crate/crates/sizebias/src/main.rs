use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use sizebias::harness::{self, McConfig};
use sizebias::modelspec::Model;
use sizebias::patterns::{count, pattern_mean, pattern_variance, pattern_variance_exact, relative_order_indicator, Permutation};
use sizebias::rational;
use sizebias::{bounds, oracle, Error};

/// Size-biased couplings: tail-bound evaluation, exact enumeration
/// oracles, and seeded Monte Carlo verification.
#[derive(Parser)]
#[command(name = "sizebias", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the tail bounds and their constants.
    Bounds(BoundsArgs),
    /// Exactly enumerate a small model: law, moments, coupling audits,
    /// and exact tail probabilities.
    Oracle(OracleArgs),
    /// Monte Carlo verification of the size-bias identity, coupling
    /// radius, and tail bounds. Exit code 0 on PASS, 1 on FAIL.
    Verify(VerifyArgs),
    /// Exact statistics of one pattern: mean, variance, overlap
    /// indicators, and occurrence counts.
    Patterns(PatternsArgs),
}

#[derive(Args)]
struct BoundsArgs {
    /// Mean vector, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    mu: Option<Vec<f64>>,
    /// Standard-deviation vector, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    sigma: Option<Vec<f64>>,
    /// Coupling radius K.
    #[arg(long = "K", allow_hyphen_values = true)]
    coupling_radius: Option<f64>,
    /// Standardized threshold vector t, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    t: Option<Vec<f64>>,
    /// Report the pattern-statistic constants instead (requires --n, --m, --k).
    #[arg(long)]
    pattern: bool,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// Model spec (JSON file).
    #[arg(long)]
    model: PathBuf,
    /// Grid of threshold norms for the exact tail table.
    #[arg(long = "t-grid", value_delimiter = ',', default_value = "0,0.5,1,2,4")]
    t_grid: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Model spec (JSON file).
    #[arg(long)]
    model: PathBuf,
    /// Direction i to size-bias (1-based).
    #[arg(long, default_value_t = 1)]
    direction: usize,
    /// Monte Carlo sample count N.
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// RNG seed (required: runs are reproducible by construction).
    #[arg(long)]
    seed: u64,
    /// Worker threads.
    #[arg(long, env = "SIZEBIAS_WORKERS", default_value_t = 1)]
    workers: usize,
    /// Standard-error multiplier for pass/fail flags.
    #[arg(long = "z-tol", default_value_t = 3.0)]
    z_tol: f64,
    /// Grid of threshold norms for the tail table.
    #[arg(long = "t-grid", value_delimiter = ',', default_value = "0,0.5,1,2,4")]
    t_grid: Vec<f64>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PatternsArgs {
    /// Permutation length n of the host permutation.
    #[arg(long)]
    n: usize,
    /// The target pattern, comma separated one-line notation.
    #[arg(long, value_delimiter = ',')]
    tau: Vec<usize>,
    /// Optional host permutation to count occurrences in.
    #[arg(long, value_delimiter = ',')]
    pi: Option<Vec<usize>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

enum RunError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Lib(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(RunError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(RunError::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, RunError> {
    match cli.command {
        Command::Bounds(args) => cmd_bounds(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Patterns(args) => cmd_patterns(args),
    }
}

fn cmd_bounds(args: BoundsArgs) -> Result<ExitCode, RunError> {
    let value = if args.pattern {
        let (n, m, k) = match (args.n, args.m, args.k) {
            (Some(n), Some(m), Some(k)) => (n, m, k),
            _ => {
                return Err(RunError::Usage(
                    "--pattern requires --n, --m, and --k".into(),
                ))
            }
        };
        let c = bounds::pattern_bound_params(n, m, k)?;
        json!({
            "K1": c.k1,
            "K2": c.k2,
            "K1_conservative": c.k1_conservative,
            "note": "K1 uses the printed denominator m!-2m+2; the variance lower bound yields m!-2m+1 (K1_conservative >= K1)",
        })
    } else {
        let (mu, sigma, radius, t) = match (args.mu, args.sigma, args.coupling_radius, args.t) {
            (Some(mu), Some(sigma), Some(radius), Some(t)) => (mu, sigma, radius, t),
            _ => {
                return Err(RunError::Usage(
                    "need --mu, --sigma, --K, and --t (or --pattern with --n/--m/--k)".into(),
                ))
            }
        };
        let params = bounds::bound_params(&mu, &sigma, radius)?;
        let lower = bounds::lower_tail_bound(&params, &t)?;
        let upper = bounds::upper_tail_bound(&params, &t)?;
        json!({
            "K1": params.k1,
            "K2": params.k2,
            "lower": lower,
            "upper": upper,
            "t": t,
        })
    };
    emit(&args.out, &serde_json::to_string_pretty(&value).expect("json"))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(args: OracleArgs) -> Result<ExitCode, RunError> {
    let model = Model::from_path(&args.model)?;
    check_grid(&args.t_grid)?;
    let enumerable = model.to_enumerable();
    let law = oracle::enumerate_law(&enumerable)?;
    let moments = law.moments()?;
    let k = law.dimension();

    let mut audits = Vec::with_capacity(k);
    for direction in 1..=k {
        let audit = oracle::exact_coupling_audit(&enumerable, direction)?;
        audits.push(json!({
            "direction": direction,
            "biased_law": audit.biased_law.to_json(),
            "max_radius_sq": rational::to_string(&audit.max_radius_sq),
            "max_radius": audit.max_radius(),
            "per_coordinate_max_gap": audit
                .per_coordinate_max_gap
                .iter()
                .map(rational::to_string)
                .collect::<Vec<_>>(),
        }));
    }

    let grid = harness::equal_coordinate_grid(&args.t_grid, k);
    let tails = oracle::exact_tails(&law, &grid)?;
    let tail_rows: Vec<serde_json::Value> = tails
        .rows
        .iter()
        .map(|row| {
            json!({
                "t": row.t,
                "lower": rational::to_string(&row.lower),
                "lower_float": rational::to_f64(&row.lower),
                "upper": rational::to_string(&row.upper),
                "upper_float": rational::to_f64(&row.upper),
            })
        })
        .collect();

    let mut out = json!({
        "model": model.description(),
        "dimension": k,
        "coupling_radius": harness::Coupling::coupling_radius(&model),
        "law": law.to_json(),
        "moments": {
            "mu": moments.mu.iter().map(rational::to_string).collect::<Vec<_>>(),
            "sigma2": moments.sigma2.iter().map(rational::to_string).collect::<Vec<_>>(),
            "sigma_min2": rational::to_string(&moments.sigma_min2),
        },
        "audits": audits,
        "exact_tails": tail_rows,
    });
    if let Model::Local(local) = &model {
        out["overlap_degree"] = json!(local.overlap_degree());
        let max_w: Result<Vec<String>, Error> = (1..=k)
            .map(|i| Ok(rational::to_string(local.statistic_max(i)?)))
            .collect();
        out["statistic_max"] = json!(max_w?);
        out["bound_m"] = json!(rational::to_string(local.bound_m()));
    }
    emit(&args.out, &serde_json::to_string_pretty(&out).expect("json"))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, RunError> {
    let model = Model::from_path(&args.model)?;
    check_grid(&args.t_grid)?;
    let (mu, sigma) = model.exact_moments()?;
    let cfg = McConfig::new(args.samples, args.seed)?
        .with_workers(args.workers)?
        .with_z_tol(args.z_tol)?;
    let report = harness::verify(
        &model,
        &model.description(),
        &mu,
        &sigma,
        args.direction,
        &args.t_grid,
        &cfg,
    )?;
    let rendered = match args.format {
        OutputFormat::Json => report.to_json(),
        OutputFormat::Csv => report.tail_csv(),
    };
    emit(&args.out, &rendered)?;
    if report.passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn cmd_patterns(args: PatternsArgs) -> Result<ExitCode, RunError> {
    let tau = Permutation::from_one_line(args.tau)?;
    let m = tau.len();
    let mean = pattern_mean(args.n, m)?;
    let variance = pattern_variance(args.n, &tau)?;
    let variance_exact = pattern_variance_exact(args.n, &tau).ok();
    let indicators: Result<Vec<u8>, Error> =
        (1..m).map(|j| relative_order_indicator(&tau, j)).collect();

    let mut out = json!({
        "n": args.n,
        "m": m,
        "tau": tau.one_line(),
        "mean": rational::to_string(&mean),
        "mean_float": rational::to_f64(&mean),
        "variance_closed_form": rational::to_string(&variance),
        "overlap_indicators": indicators?,
    });
    if let Some(exact) = &variance_exact {
        out["variance_exact"] = json!(rational::to_string(exact));
        out["variance_exact_float"] = json!(rational::to_f64(exact));
    }
    if let Some(pi_raw) = args.pi {
        let pi = Permutation::from_one_line(pi_raw)?;
        if pi.len() != args.n {
            return Err(RunError::Usage(format!(
                "--pi has length {}, but --n is {}",
                pi.len(),
                args.n
            )));
        }
        out["count"] = json!(count(&pi, &tau));
    }
    emit(&args.out, &serde_json::to_string_pretty(&out).expect("json"))?;
    Ok(ExitCode::SUCCESS)
}

fn check_grid(grid: &[f64]) -> Result<(), RunError> {
    if grid.iter().any(|&g| g < 0.0 || !g.is_finite()) {
        return Err(RunError::Usage(
            "--t-grid entries must be finite and nonnegative".into(),
        ));
    }
    Ok(())
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), RunError> {
    match out {
        Some(path) => std::fs::write(path, format!("{text}\n")).map_err(|e| {
            RunError::Lib(Error::InvalidModel {
                reason: format!("cannot write {}: {e}", path.display()),
            })
        }),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}
