use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use censdens::bench::{
    emit_normality, emit_report, emit_summary, ordering_holds, run_normality, run_table1, trend_violations,
    write_atomic, NormalityConfig, ReportFormat, TableConfig,
};
use censdens::dataset::{read_dataset, write_dataset};
use censdens::inference::{confidence_interval, plugin_variance};
use censdens::kernel::KernelFamily;
use censdens::simulate::{generate, SimConfig};
use censdens::{Bandwidths, Error, FittedSample, Kernel, Method};

#[derive(Parser)]
#[command(name = "censdens", version, about = "Conditional density estimation for right-censored dependent data")]
struct Cli {
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a censored AR(1)/lognormal dataset.
    Simulate(SimulateArgs),
    /// Estimate f(y|x) over a grid of y at a fixed x.
    Fit(FitArgs),
    /// Plug-in normal confidence intervals for f(y|x).
    Ci(CiArgs),
    /// Monte Carlo GMSE over a bandwidth grid.
    Bench(BenchArgs),
    /// Sampling distribution, bias and interval coverage at one point.
    Normality(NormalityArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    cp: f64,
    #[arg(long, default_value_t = 0.3)]
    rho: f64,
    #[arg(long, env = "CENSDENS_SEED", default_value_t = 0)]
    seed: u64,
    /// Censoring location override; bypasses the cp calibration.
    #[arg(long)]
    mu_c: Option<f64>,
    /// Also write the latent response and censoring times.
    #[arg(long)]
    latent: bool,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long)]
    x: f64,
    /// `lo:hi:count` or a comma-separated list.
    #[arg(long)]
    y_grid: String,
    #[arg(long)]
    h: f64,
    #[arg(long)]
    b: f64,
    #[arg(long, default_value = "ll")]
    method: String,
    /// Kernel used in both directions.
    #[arg(long, default_value = "epanechnikov")]
    kernel: String,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    est: EstimateArgs,
}

#[derive(Args)]
struct CiArgs {
    #[command(flatten)]
    est: EstimateArgs,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
}

#[derive(Args)]
struct BenchArgs {
    /// Only `table1` is defined; it is also the default configuration.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long = "M")]
    trials: Option<usize>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    cp: Option<String>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    h_grid: Option<String>,
    #[arg(long)]
    b_grid: Option<String>,
    #[arg(long, env = "CENSDENS_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "csv")]
    format: String,
    /// Exit with status 3 unless LL < NW < K holds in at least 8/9 of cells.
    #[arg(long)]
    assert_ordering: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct NormalityArgs {
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 0.3)]
    cp: f64,
    #[arg(long, default_value_t = 0.3)]
    rho: f64,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, default_value_t = 1.0)]
    x: f64,
    /// Defaults to e^x.
    #[arg(long)]
    y: Option<f64>,
    /// Defaults to n^-0.3.
    #[arg(long)]
    h: Option<f64>,
    /// Defaults to n^-0.3.
    #[arg(long)]
    b: Option<f64>,
    #[arg(long, default_value = "nw")]
    method: String,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, env = "CENSDENS_SEED", default_value_t = 0)]
    seed: u64,
    /// Skip the n h^5 b < 0.1, n h b^5 < 0.1 bandwidth check.
    #[arg(long)]
    allow_bias: bool,
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(short, long)]
    output: PathBuf,
}

enum Failure {
    Usage(String),
    Io(String),
    Assertion(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::Domain(_) => Failure::Usage(e.to_string()),
            _ => Failure::Io(e.to_string()),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn parse_list(spec: &str, what: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| usage(format!("{what}: cannot parse '{s}' as a number")))
    };
    let values = if parts.len() == 3 {
        let (lo, hi) = (num(parts[0])?, num(parts[1])?);
        let count: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| usage(format!("{what}: count '{}' is not a positive integer", parts[2])))?;
        match count {
            0 => return Err(usage(format!("{what}: count must be positive"))),
            1 => vec![lo],
            _ => (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect(),
        }
    } else if parts.len() == 1 {
        spec.split(',').map(num).collect::<Result<_, _>>()?
    } else {
        return Err(usage(format!("{what}: expected lo:hi:count or a comma-separated list")));
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(usage(format!("{what}: values must be finite")));
    }
    Ok(values)
}

fn kernel_named(name: &str) -> Result<Kernel, Failure> {
    Ok(Kernel::from_family(name.parse::<KernelFamily>()?)?)
}

struct Prepared {
    fitted: FittedSample,
    grid: Vec<f64>,
    bw: Bandwidths,
    method: Method,
    kernel: Kernel,
}

fn prepare(est: &EstimateArgs) -> Result<Prepared, Failure> {
    let bw = Bandwidths::new(est.h, est.b)?;
    let method: Method = est.method.parse()?;
    let kernel = kernel_named(&est.kernel)?;
    let grid = parse_list(&est.y_grid, "--y-grid")?;
    if !est.x.is_finite() {
        return Err(usage("--x must be finite"));
    }
    let sample = read_dataset(&est.input)?;
    Ok(Prepared {
        fitted: FittedSample::new(sample)?,
        grid,
        bw,
        method,
        kernel,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let cfg = SimConfig {
        n: args.n,
        rho: args.rho,
        cp: args.cp,
        seed: args.seed,
        mu_c: args.mu_c,
    };
    cfg.validate()?;
    let ds = generate(&cfg)?;
    write_dataset(&ds, args.latent, &args.output)?;
    eprintln!("realized censoring fraction: {}", ds.realized_cp);
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> Result<(), Failure> {
    let p = prepare(&args.est)?;
    let fits = p.fitted.curve(p.method, args.est.x, &p.grid, p.bw, &p.kernel, &p.kernel)?;
    let mut out = String::from("y,f_hat,df_dx,flag\n");
    for (y, fit) in p.grid.iter().zip(&fits) {
        let flag = if fit.is_missing() {
            "missing"
        } else if fit.diagnostics.fallback_used {
            "fallback"
        } else {
            "ok"
        };
        out.push_str(&format!("{y},{},{},{flag}\n", opt(fit.f), opt(fit.df_dx)));
    }
    write_atomic(&args.est.output, out.as_bytes())?;
    Ok(())
}

fn cmd_ci(args: &CiArgs) -> Result<(), Failure> {
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(usage(format!("--level must lie in (0, 1), got {}", args.level)));
    }
    let p = prepare(&args.est)?;
    let x = args.est.x;
    let fits = p.fitted.curve(p.method, x, &p.grid, p.bw, &p.kernel, &p.kernel)?;
    let mut out = String::from("y,f_hat,lo,hi,level,flag\n");
    for (&y, fit) in p.grid.iter().zip(&fits) {
        let row = match (fit.f, plugin_variance(&p.fitted, x, y, p.bw, &p.kernel, &p.kernel)) {
            (Some(f), Ok(av)) => {
                let (lo, hi) = confidence_interval(f, &av, args.level)?;
                format!("{y},{f},{lo},{hi},{},ok\n", args.level)
            }
            (f, Err(Error::Domain(_))) | (f @ None, Ok(_)) => {
                format!("{y},{},,,{},unsupported\n", opt(f), args.level)
            }
            (_, Err(e)) => return Err(e.into()),
        };
        out.push_str(&row);
    }
    write_atomic(&args.est.output, out.as_bytes())?;
    Ok(())
}

fn default_path(name: &str, format: ReportFormat) -> PathBuf {
    let ext = match format {
        ReportFormat::Csv => "csv",
        ReportFormat::Json => "json",
    };
    PathBuf::from(format!("{name}.{ext}"))
}

fn cmd_bench(args: &BenchArgs) -> Result<(), Failure> {
    if let Some(p) = &args.preset {
        if p != "table1" {
            return Err(usage(format!("unknown preset '{p}' (expected table1)")));
        }
    }
    let format: ReportFormat = args.format.parse()?;
    let mut cfg = TableConfig::table1(args.seed);
    if let Some(m) = args.trials {
        cfg.trials = m;
    }
    if let Some(r) = args.rho {
        cfg.rho = r;
    }
    if let Some(spec) = &args.n {
        cfg.n_list = spec
            .split(',')
            .map(|s| s.trim().parse::<usize>().map_err(|_| usage(format!("--n: bad sample size '{s}'"))))
            .collect::<Result<_, _>>()?;
    }
    if let Some(spec) = &args.cp {
        cfg.cp_list = parse_list(spec, "--cp")?;
    }
    if let Some(spec) = &args.h_grid {
        cfg.h_grid = parse_list(spec, "--h-grid")?;
    }
    if let Some(spec) = &args.b_grid {
        cfg.b_grid = parse_list(spec, "--b-grid")?;
    }
    cfg.validate()?;

    let grids = run_table1(&cfg)?;
    let grid_path = args.output.clone().unwrap_or_else(|| default_path("gmse_grid", format));
    let summary_path = args.summary.clone().unwrap_or_else(|| default_path("gmse_summary", format));
    emit_report(&grids, format, &grid_path)?;
    emit_summary(&grids, format, &summary_path)?;

    for g in &grids {
        let shown = g.min_gmse.map(|v| format!("{v:.5}")).unwrap_or_else(|| "invalid".into());
        let at = g.argmin.map(|(h, b)| format!(" (h={h:.2}, b={b:.2})")).unwrap_or_default();
        println!("cp={:<4} n={:<4} {:<2} min GMSE {shown}{at}", g.cp, g.n, g.estimator);
    }
    let (ok, total) = ordering_holds(&grids);
    println!("ordering LL < NW < K: {ok}/{total} cells; trend violations: {}", trend_violations(&grids));
    if args.assert_ordering && (total == 0 || ok * 9 < total * 8) {
        return Err(Failure::Assertion(format!(
            "ordering LL < NW < K held in only {ok} of {total} cells"
        )));
    }
    Ok(())
}

fn cmd_normality(args: &NormalityArgs) -> Result<(), Failure> {
    let format: ReportFormat = args.format.parse()?;
    let default_bw = (args.n as f64).powf(-0.3);
    let cfg = NormalityConfig {
        n: args.n,
        cp: args.cp,
        rho: args.rho,
        trials: args.trials,
        x: args.x,
        y: args.y.unwrap_or_else(|| args.x.exp()),
        h: args.h.unwrap_or(default_bw),
        b: args.b.unwrap_or(default_bw),
        method: args.method.parse()?,
        seed: args.seed,
        level: args.level,
        enforce_undersmoothing: !args.allow_bias,
    };
    cfg.validate()?;
    let report = run_normality(&cfg)?;
    emit_normality(std::slice::from_ref(&report), format, &args.output)?;
    println!(
        "{} at (x={}, y={:.4}): KS D={:.4} p={:.4}; bias {:.5} (NW pred {:.5}, LL pred {:.5}); coverage {:.3}",
        report.method,
        report.x,
        report.y,
        report.ks_stat,
        report.ks_p,
        report.empirical_bias,
        report.predicted_bias_nw,
        report.predicted_bias_ll,
        report.coverage
    );
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Ci(a) => cmd_ci(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Normality(a) => cmd_normality(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Assertion(m)) => {
            eprintln!("assertion failed: {m}");
            ExitCode::from(3)
        }
    }
}

