//! Thin command-line front end over the vmsine library: fitting, simulation,
//! Monte Carlo benchmarking, bandwidth monitoring, and density-grid export.
//!
//! Exit codes: 0 success, 1 usage, 2 I/O or parse failure, 3 estimation
//! failure. Every command honors --seed; its fixed default keeps runs
//! reproducible without any flags.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use vmsine::io::{read_angle_table, read_scenario, write_angle_csv};
use vmsine::{
    contaminate, derive_seed, log_norm_const, log_unnormalized_density, mle_fit, monitor,
    run_trials, sample_sine_model, summarize, wle_fit, write_trial_csv, Angle, ContaminationMode,
    ContaminationSpec, Error, FitReport, FitResult, GibbsConfig, MonitorResult,
    NormalizationStrategy, RafSpec, SineModelParams, WleConfig, DEFAULT_SEED,
};

#[derive(Parser)]
#[command(name = "vmsine", version, about = "Robust fitting of the multivariate von Mises sine model on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for all randomness; the fixed default makes every run reproducible.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the sine model to an angle table by MLE or WLE.
    Fit(FitArgs),
    /// Simulate from the sine model, optionally planting clustered outliers.
    Simulate(SimulateArgs),
    /// Monte Carlo benchmark of MLE, MLE0, and WLE on a scenario file.
    Mc(McArgs),
    /// Sweep the concentration bandwidth and report the fit at each value.
    Monitor(MonitorArgs),
    /// Export a bivariate density grid for plotting.
    DensityGrid(DensityGridArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Mle,
    Wle,
}

#[derive(Clone, Copy, ValueEnum)]
enum RafArg {
    Schi,
    Gkl,
    Pwd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Append,
    Replace,
}

/// Weighted-likelihood settings shared by fit, mc, and monitor.
#[derive(Args, Clone)]
struct WleFlags {
    /// Concentration bandwidth of the kernel estimate.
    #[arg(long, default_value_t = 10.0)]
    kstar: f64,
    #[arg(long, value_enum, default_value_t = RafArg::Schi)]
    raf: RafArg,
    /// GKL tuning constant in (0, 1].
    #[arg(long, default_value_t = RafSpec::DEFAULT_GKL_TAU)]
    tau: f64,
    /// Power-divergence exponent.
    #[arg(long, default_value_t = RafSpec::DEFAULT_PWD_EXPONENT)]
    pwd_exponent: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Number of subsample starting points.
    #[arg(long, default_value_t = 100)]
    starts: usize,
    #[arg(long, default_value_t = 10)]
    subsample_size: usize,
    /// Residuals at or below this count against a root.
    #[arg(long, default_value_t = -0.9, allow_hyphen_values = true)]
    root_threshold: f64,
    /// Initialize off-diagonals with the uncorrected product form.
    #[arg(long)]
    literal_init: bool,
}

impl WleFlags {
    fn raf_spec(&self) -> Result<RafSpec, Failure> {
        match self.raf {
            RafArg::Schi => RafSpec::schi(),
            RafArg::Gkl => RafSpec::gkl(self.tau),
            RafArg::Pwd => RafSpec::pwd(self.pwd_exponent),
        }
        .map_err(|e| usage(&e.to_string()))
    }

    fn config(&self, seed: u64) -> Result<WleConfig, Failure> {
        Ok(WleConfig {
            kstar: self.kstar,
            raf: self.raf_spec()?,
            max_iter: self.max_iter,
            tol: self.tol,
            n_starts: self.starts,
            subsample_size: self.subsample_size,
            root_threshold: self.root_threshold,
            seed,
            literal_init_offdiag: self.literal_init,
        })
    }

    fn raf_label(&self) -> String {
        match self.raf {
            RafArg::Schi => "schi".into(),
            RafArg::Gkl => format!("gkl(tau={})", self.tau),
            RafArg::Pwd => format!("pwd(lambda={})", self.pwd_exponent),
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// Input angle table (CSV, radians).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Wle)]
    method: Method,
    #[command(flatten)]
    wle: WleFlags,
    /// Interpret the input as degrees.
    #[arg(long)]
    degrees: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Number of genuine observations.
    #[arg(long)]
    n: usize,
    /// Concentrations, comma separated; sets the dimension.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    kappa: Vec<f64>,
    /// Strict upper triangle of Lambda, row-major (default all zero).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lambda: Option<Vec<f64>>,
    /// Locations in radians (default all zero).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    mu: Option<Vec<f64>>,
    /// Number of planted outliers.
    #[arg(long, default_value_t = 0)]
    outliers: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Append)]
    outlier_mode: ModeArg,
    /// Contaminated dimensions (default: all).
    #[arg(long, value_delimiter = ',')]
    outlier_dims: Option<Vec<usize>>,
    /// Location shift per contaminated dimension (default pi).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    outlier_shift: Option<Vec<f64>>,
    /// Outlier concentration per contaminated dimension (default 20).
    #[arg(long, value_delimiter = ',')]
    outlier_concentration: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1000)]
    burn_in: usize,
    #[arg(long, default_value_t = 10)]
    thinning: usize,
    /// Write angles in degrees.
    #[arg(long)]
    degrees: bool,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct McArgs {
    /// Scenario description (TOML).
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    trials: usize,
    #[command(flatten)]
    wle: WleFlags,
    /// Trial table destination (CSV).
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct MonitorArgs {
    /// Input angle table (CSV, radians).
    #[arg(long)]
    input: PathBuf,
    /// Bandwidth grid as start:stop:step (inclusive) or a single value.
    #[arg(long)]
    grid: String,
    #[command(flatten)]
    wle: WleFlags,
    #[arg(long)]
    degrees: bool,
    /// Write the table here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DensityGridArgs {
    /// Take parameters from a fit report.
    #[arg(long, conflicts_with_all = ["kappa", "lambda", "mu"])]
    report: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    kappa: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lambda: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    mu: Option<Vec<f64>>,
    /// Dimension pair to export, e.g. 0,1.
    #[arg(long, default_value = "0,1")]
    pair: String,
    /// Grid points per axis (at least 16).
    #[arg(long, default_value_t = 128)]
    resolution: usize,
    #[arg(long)]
    output: PathBuf,
}

struct Failure {
    code: i32,
    message: String,
}

fn usage(message: &str) -> Failure {
    Failure {
        code: 1,
        message: message.to_string(),
    }
}

fn io_failure(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: 2,
        message: e.to_string(),
    }
}

/// Exit class of a library error: data problems are 2, configuration 1,
/// estimation 3.
fn classify(e: Error) -> Failure {
    let code = match &e {
        Error::Io(_) | Error::Parse(_) | Error::NonFiniteAngle(_) | Error::EmptySample => 2,
        Error::InvalidConfig(_) => 1,
        _ => 3,
    };
    Failure {
        code,
        message: e.to_string(),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let seed = cli.seed;
    let result = match cli.command {
        Command::Fit(args) => cmd_fit(args, seed),
        Command::Simulate(args) => cmd_simulate(args, seed),
        Command::Mc(args) => cmd_mc(args, seed),
        Command::Monitor(args) => cmd_monitor(args, seed),
        Command::DensityGrid(args) => cmd_density_grid(args),
    };
    if let Err(f) = result {
        eprintln!("error: {}", f.message);
        std::process::exit(f.code);
    }
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), Failure> {
    match output {
        Some(path) => fs::write(path, text).map_err(io_failure),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn human_params_summary(fit: &FitResult) -> String {
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.2}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mu: Vec<f64> = fit.params.mu().iter().map(|a| a.radians()).collect();
    format!(
        "mu: {}  kappa: {}  lambda: {}  down-weighting: {:.2}\n",
        fmt(&mu),
        fmt(fit.params.kappa()),
        fmt(&fit.params.lambda_upper_triangle()),
        fit.downweighting_level()
    )
}

fn cmd_fit(args: FitArgs, seed: u64) -> Result<(), Failure> {
    let sample = read_angle_table(&args.input, args.degrees).map_err(io_failure)?;
    let (fit, kstar, raf) = match args.method {
        Method::Mle => (mle_fit(&sample).map_err(classify)?, None, None),
        Method::Wle => {
            let config = args.wle.config(seed)?;
            (
                wle_fit(&sample, &config).map_err(classify)?,
                Some(args.wle.kstar),
                Some(args.wle.raf_label()),
            )
        }
    };
    let method = match args.method {
        Method::Mle => "mle",
        Method::Wle => "wle",
    };
    let report = FitReport::from_fit(method, &fit, seed, kstar, raf);
    emit(&report.to_text(), args.output.as_deref())?;
    if args.output.is_some() {
        print!("{}", human_params_summary(&fit));
    }
    Ok(())
}

fn build_params(
    kappa: Vec<f64>,
    lambda: Option<Vec<f64>>,
    mu: Option<Vec<f64>>,
) -> Result<SineModelParams, Failure> {
    let p = kappa.len();
    let mu_vals = mu.unwrap_or_else(|| vec![0.0; p]);
    if mu_vals.len() != p {
        return Err(usage(&format!(
            "mu has {} entries, expected {p}",
            mu_vals.len()
        )));
    }
    let mu: Vec<Angle> = mu_vals
        .into_iter()
        .map(Angle::wrap)
        .collect::<vmsine::Result<Vec<_>>>()
        .map_err(|e| usage(&e.to_string()))?;
    let tri = lambda.unwrap_or_else(|| vec![0.0; p * (p - 1) / 2]);
    SineModelParams::from_upper_triangle(mu, kappa, &tri).map_err(|e| usage(&e.to_string()))
}

fn cmd_simulate(args: SimulateArgs, seed: u64) -> Result<(), Failure> {
    let params = build_params(args.kappa.clone(), args.lambda.clone(), args.mu.clone())?;
    let p = params.dim();
    if args.n == 0 {
        if args.outliers > 0 {
            return Err(usage("cannot plant outliers in an empty sample"));
        }
        let mut buf = Vec::new();
        write_angle_csv(&mut buf, p, &[], Some(&[]), args.degrees).map_err(io_failure)?;
        fs::write(&args.output, buf).map_err(io_failure)?;
        return Ok(());
    }
    let gibbs = GibbsConfig {
        burn_in: args.burn_in,
        thinning: args.thinning,
        seed: derive_seed(seed, 0),
    };
    let genuine = sample_sine_model(&params, args.n, &gibbs).map_err(classify)?;
    let (sample, mask) = if args.outliers > 0 {
        let dims = args.outlier_dims.clone().unwrap_or_else(|| (0..p).collect());
        let k = dims.len();
        let expand = |v: Option<Vec<f64>>, default: f64, what: &str| -> Result<Vec<f64>, Failure> {
            match v {
                None => Ok(vec![default; k]),
                Some(v) if v.len() == 1 => Ok(vec![v[0]; k]),
                Some(v) if v.len() == k => Ok(v),
                Some(v) => Err(usage(&format!(
                    "{what} has {} entries, expected 1 or {k}",
                    v.len()
                ))),
            }
        };
        let spec = ContaminationSpec {
            n_outliers: args.outliers,
            mode: match args.outlier_mode {
                ModeArg::Append => ContaminationMode::Append,
                ModeArg::Replace => ContaminationMode::ReplaceDims,
            },
            contaminated_dims: dims,
            shift: expand(args.outlier_shift.clone(), PI, "outlier-shift")?,
            concentration: expand(args.outlier_concentration.clone(), 20.0, "outlier-concentration")?,
        };
        contaminate(&genuine, &spec, params.mu(), derive_seed(seed, 1)).map_err(classify)?
    } else {
        let n = genuine.n();
        (genuine, vec![false; n])
    };
    let rows: Vec<Vec<f64>> = sample.rows().map(|r| r.to_vec()).collect();
    let mut buf = Vec::new();
    write_angle_csv(&mut buf, p, &rows, Some(&mask), args.degrees).map_err(io_failure)?;
    fs::write(&args.output, buf).map_err(io_failure)?;
    Ok(())
}

fn cmd_mc(args: McArgs, seed: u64) -> Result<(), Failure> {
    let scenario = read_scenario(&args.scenario).map_err(io_failure)?;
    let config = args.wle.config(seed)?;
    let records = run_trials(&scenario, &config, args.trials, seed).map_err(classify)?;
    let mut buf = Vec::new();
    write_trial_csv(&mut buf, &records).map_err(io_failure)?;
    fs::write(&args.output, buf).map_err(io_failure)?;

    let mut out = String::new();
    out.push_str("estimator  metric       median        q1            q3            n    failed\n");
    for s in summarize(&records) {
        out.push_str(&format!(
            "{:<10} {:<12} {:<13.6} {:<13.6} {:<13.6} {:<4} {}\n",
            s.estimator.to_string(),
            s.metric,
            s.median,
            s.q1,
            s.q3,
            s.n_used,
            s.n_failed
        ));
    }
    print!("{out}");
    Ok(())
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let bad = |msg: &str| usage(&format!("bad grid '{spec}': {msg}"));
    if !spec.contains(':') {
        let v: f64 = spec.trim().parse().map_err(|_| bad("not a number"))?;
        if !(v.is_finite() && v > 0.0) {
            return Err(bad("value must be > 0"));
        }
        return Ok(vec![v]);
    }
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("expected start:stop:step"));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|_| bad("not numbers"))?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || !(start > 0.0) || stop < start {
        return Err(bad("need start > 0, stop >= start, step > 0"));
    }
    let mut grid = Vec::new();
    let mut k = 0usize;
    loop {
        let v = start + step * k as f64;
        if v > stop + 1e-9 {
            break;
        }
        grid.push(v);
        k += 1;
    }
    Ok(grid)
}

fn monitor_table(result: &MonitorResult, p: usize) -> String {
    let mut header: Vec<String> = vec![
        "kstar".into(),
        "failed".into(),
        "iterations".into(),
        "mean_weight".into(),
        "downweighting_level".into(),
        "root_score".into(),
    ];
    for j in 1..=p {
        header.push(format!("mu_{j}"));
    }
    for j in 1..=p {
        header.push(format!("kappa_{j}"));
    }
    for i in 1..=p {
        for j in (i + 1)..=p {
            header.push(format!("lambda_{i}_{j}"));
        }
    }
    header.push("error".into());
    let mut out = header.join(",");
    out.push('\n');
    for entry in &result.entries {
        let mut cells = vec![format!("{}", entry.kstar)];
        match &entry.outcome {
            Ok(fit) => {
                cells.push("0".into());
                cells.push(fit.iterations.to_string());
                cells.push(format!("{}", fit.mean_weight()));
                cells.push(format!("{}", fit.downweighting_level()));
                cells.push(format!("{}", fit.root_score));
                for a in fit.params.mu() {
                    cells.push(format!("{}", a.radians()));
                }
                for k in fit.params.kappa() {
                    cells.push(format!("{k}"));
                }
                for l in fit.params.lambda_upper_triangle() {
                    cells.push(format!("{l}"));
                }
                cells.push(String::new());
            }
            Err(msg) => {
                cells.push("1".into());
                let blank_cols = 4 + 2 * p + p * (p - 1) / 2;
                cells.extend(std::iter::repeat_n(String::new(), blank_cols));
                cells.push(msg.replace(',', ";"));
            }
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn cmd_monitor(args: MonitorArgs, seed: u64) -> Result<(), Failure> {
    let sample = read_angle_table(&args.input, args.degrees).map_err(io_failure)?;
    let grid = parse_grid(&args.grid)?;
    let config = args.wle.config(seed)?;
    let result = monitor(&sample, &grid, &config).map_err(classify)?;
    emit(&monitor_table(&result, sample.dim()), args.output.as_deref())
}

fn cmd_density_grid(args: DensityGridArgs) -> Result<(), Failure> {
    if args.resolution < 16 {
        return Err(usage("resolution must be at least 16"));
    }
    let params = match (&args.report, &args.kappa) {
        (Some(path), None) => {
            let text = fs::read_to_string(path).map_err(io_failure)?;
            let report = FitReport::parse(&text).map_err(io_failure)?;
            report.params().map_err(io_failure)?
        }
        (None, Some(kappa)) => build_params(kappa.clone(), args.lambda.clone(), args.mu.clone())?,
        _ => return Err(usage("give either --report or --kappa/--lambda/--mu")),
    };
    let p = params.dim();
    if p < 2 {
        return Err(usage("density grids need a model with p >= 2"));
    }
    let pair: Vec<usize> = args
        .pair
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<Vec<usize>, _>>()
        .map_err(|_| usage(&format!("bad pair '{}'", args.pair)))?;
    if pair.len() != 2 || pair[0] == pair[1] || pair.iter().any(|&i| i >= p) {
        return Err(usage(&format!(
            "pair must name two distinct dimensions below {p}"
        )));
    }
    let (i, j) = (pair[0], pair[1]);
    // Bivariate sub-model carrying the pair's own parameters; for p > 2 this
    // is the plotting convention, not the exact marginal.
    let sub = SineModelParams::bivariate(
        [params.mu()[i], params.mu()[j]],
        [params.kappa()[i], params.kappa()[j]],
        params.lambda()[(i, j)],
    )
    .map_err(|e| usage(&e.to_string()))?;
    let strategy = NormalizationStrategy::quadrature();
    let log_c = log_norm_const(&sub, &strategy).map_err(classify)?;

    let r = args.resolution;
    let step = 2.0 * PI / r as f64;
    let mut out = String::with_capacity(r * r * 24);
    out.push_str("theta1,theta2,density\n");
    for a in 0..r {
        let t1 = -PI + step * a as f64;
        for b in 0..r {
            let t2 = -PI + step * b as f64;
            let e = log_unnormalized_density(&[t1, t2], &sub).expect("dimensions match");
            out.push_str(&format!("{t1},{t2},{}\n", (e - log_c).exp()));
        }
    }
    fs::write(&args.output, out).map_err(io_failure)?;
    Ok(())
}
