//! Command-line interface: subcommand dispatch, file I/O, deterministic
//! seeding.
//!
//! Exit codes: 0 on success, 1 on a domain error (a precondition or
//! numerical failure inside a module), 2 on a usage error (bad flags or an
//! unreadable input file). Every run logs its fully-resolved configuration
//! to stderr, and all file outputs are written atomically (temp file plus
//! rename) so a crashed run never leaves a truncated artifact.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::approximation::{approx_hellinger_laplace, approx_lq};
use crate::distances::{
    hellinger, kl_divergences, lq_distance, report, wasserstein_1d, DistanceReport,
};
use crate::entropy::{mixture_net, sample_probes, simplex_net, verify_cover, wasserstein_net, NetMetric};
use crate::kernels::{Kernel, MixtureDensity};
use crate::measures::DiscreteMeasure;
use crate::posterior::{posterior_chain, BaseDensity, DpConfig};
use crate::rates::{run_contraction_experiment, ExperimentConfig};
use crate::{Error, Result};

/// Entry point for the binary: parses `std::env::args` and returns the
/// process exit code.
pub fn run() -> i32 {
    run_cli(std::env::args().collect())
}

/// Parses and dispatches an argument vector (`argv[0]` is the program
/// name). Returns the exit code instead of exiting, so tests can drive it.
pub fn run_cli(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            // Help and version requests are successful terminations.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };

    let threads = cli.threads.or_else(env_threads);
    if let Some(t) = threads {
        if t == 0 {
            eprintln!("usage error: --threads must be positive");
            return 2;
        }
        // Only effective once per process; later calls keep the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }

    match dispatch(&cli, threads) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            2
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// `LAPLACE_DECONV_THREADS` fallback for `--threads`.
fn env_threads() -> Option<usize> {
    std::env::var("LAPLACE_DECONV_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

type CliResult = std::result::Result<(), Failure>;

#[derive(Parser, Debug)]
#[command(
    name = "laplace-deconv",
    version,
    about = "Mixing-measure deconvolution toolkit: distances, finite \
             approximations, covering nets, posterior sampling, and \
             contraction-rate experiments"
)]
struct Cli {
    /// Worker threads for parallel sections (fallback: the
    /// LAPLACE_DECONV_THREADS environment variable, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Reduce a mixing measure to few atoms by moment matching.
    Approx(ApproxArgs),
    /// Distance between two mixing measures or their noise mixtures.
    Distance(DistanceArgs),
    /// Build a covering net, report its size, and verify coverage.
    Entropy(EntropyArgs),
    /// Posterior MCMC draws of the mixing measure given observations.
    Posterior(PosteriorArgs),
    /// Contraction-rate experiment over a ladder of sample sizes.
    Rates(RatesArgs),
    /// Simulate observations from a known mixture.
    Simulate(SimulateArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum KernelArg {
    Laplace,
    Gaussian,
}

impl KernelArg {
    fn build(self, sigma: f64) -> Kernel {
        match self {
            KernelArg::Laplace => Kernel::Laplace,
            KernelArg::Gaussian => Kernel::Gaussian { sigma },
        }
    }
}

#[derive(Args, Debug)]
struct ApproxArgs {
    /// Input mixing measure (JSON).
    #[arg(long)]
    g: PathBuf,
    /// Target metric: `hellinger` or `l<q>` (e.g. `l2`).
    #[arg(long, default_value = "hellinger")]
    metric: String,
    /// Approximation accuracy target.
    #[arg(long)]
    eps: f64,
    #[arg(long, value_enum, default_value = "laplace")]
    kernel: KernelArg,
    /// Gaussian kernel standard deviation (ignored for laplace).
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Output path for the result JSON (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DistanceArgs {
    /// First mixing measure (JSON).
    #[arg(long)]
    g: PathBuf,
    /// Second mixing measure (JSON).
    #[arg(long)]
    gp: PathBuf,
    /// Metric: `w<k>` on mixing measures; `hellinger`, `l<q>`, or `kl` on
    /// the noise mixtures.
    #[arg(long)]
    metric: String,
    #[arg(long, value_enum, default_value = "laplace")]
    kernel: KernelArg,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Output path for the report JSON (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EntropyArgs {
    /// Net family: `simplex`, `w<k>`, `hellinger`, or `l<q>`.
    #[arg(long)]
    metric: String,
    /// Comma-separated radii, e.g. `0.4,0.2`.
    #[arg(long = "eps-ladder")]
    eps_ladder: String,
    /// Fresh random probes per radius.
    #[arg(long, default_value_t = 200)]
    probes: usize,
    /// Support halfwidth (ignored for simplex nets).
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Weight-vector dimension (simplex nets only).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum, default_value = "laplace")]
    kernel: KernelArg,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for the CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PosteriorArgs {
    /// Observations: CSV with one real per line (an optional single
    /// non-numeric header line is skipped).
    #[arg(long)]
    data: PathBuf,
    /// Dirichlet-process total mass.
    #[arg(long, default_value_t = 1.0)]
    mass: f64,
    /// Support halfwidth of the mixing measure.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = 2000)]
    iters: usize,
    #[arg(long = "burn-in", default_value_t = 1000)]
    burn_in: usize,
    #[arg(long, default_value_t = 5)]
    thin: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "laplace")]
    kernel: KernelArg,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Output path for the retained draws (JSON array; stdout when
    /// omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RatesArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output path for the per-cell CSV.
    #[arg(long)]
    out: PathBuf,
    /// Output path for the fitted-summary JSON (defaults to the CSV path
    /// with extension `fit.json`).
    #[arg(long = "fit-out")]
    fit_out: Option<PathBuf>,
    /// Optional gnuplot script consuming the CSV.
    #[arg(long = "plot-script")]
    plot_script: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// True mixing measure (JSON).
    #[arg(long)]
    g0: PathBuf,
    /// Number of observations.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "laplace")]
    kernel: KernelArg,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Output path for the CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn dispatch(cli: &Cli, threads: Option<usize>) -> CliResult {
    match &cli.cmd {
        Cmd::Approx(a) => cmd_approx(a, threads),
        Cmd::Distance(a) => cmd_distance(a, threads),
        Cmd::Entropy(a) => cmd_entropy(a, threads),
        Cmd::Posterior(a) => cmd_posterior(a, threads),
        Cmd::Rates(a) => cmd_rates(a, threads),
        Cmd::Simulate(a) => cmd_simulate(a, threads),
    }
}

// ---------------------------------------------------------------------------
// Subcommands

fn cmd_approx(args: &ApproxArgs, threads: Option<usize>) -> CliResult {
    let kernel = args.kernel.build(args.sigma);
    log_config(json!({
        "subcommand": "approx",
        "g": args.g,
        "metric": args.metric,
        "eps": args.eps,
        "kernel": kernel,
        "out": args.out,
        "threads": threads,
    }));
    let g = load_measure(&args.g)?;
    let result = match parse_metric(&args.metric)? {
        Metric::Hellinger => {
            if !matches!(kernel, Kernel::Laplace) {
                return Err(Failure::Domain(Error::invalid(
                    "hellinger approximation targets the laplace kernel only",
                )));
            }
            approx_hellinger_laplace(&g, args.eps)?
        }
        Metric::Lq(q) => approx_lq(&g, kernel, q, args.eps)?,
        other => {
            return Err(Failure::Usage(format!(
                "approx supports hellinger or l<q> targets, got {}",
                other.tag()
            )))
        }
    };
    emit(args.out.as_deref(), &to_json(&result)?)
}

fn cmd_distance(args: &DistanceArgs, threads: Option<usize>) -> CliResult {
    let kernel = args.kernel.build(args.sigma);
    log_config(json!({
        "subcommand": "distance",
        "g": args.g,
        "gp": args.gp,
        "metric": args.metric,
        "kernel": kernel,
        "out": args.out,
        "threads": threads,
    }));
    let g = load_measure(&args.g)?;
    let gp = load_measure(&args.gp)?;
    let rep: DistanceReport = match parse_metric(&args.metric)? {
        Metric::Wasserstein(k) => {
            let v = wasserstein_1d(&g, &gp, k)?;
            report(&args.metric, v, "quantile", 0.0)
        }
        Metric::Hellinger => {
            let (p, q) = mixtures(kernel, g, gp);
            report("hellinger", hellinger(&p, &q)?, "quadrature", 1e-8)
        }
        Metric::Lq(order) => {
            let (p, q) = mixtures(kernel, g, gp);
            report(&args.metric, lq_distance(&p, &q, order)?, "quadrature", 1e-8)
        }
        Metric::Kl => {
            let (p, q) = mixtures(kernel, g, gp);
            let (k1, k2) = kl_divergences(&p, &q)?;
            report("kl", k1.max(k2), "quadrature", 1e-8)
        }
        Metric::Simplex => {
            return Err(Failure::Usage("metric `simplex` is a net family, not a distance".into()))
        }
    };
    emit(args.out.as_deref(), &to_json(&rep)?)
}

fn cmd_entropy(args: &EntropyArgs, threads: Option<usize>) -> CliResult {
    let kernel = args.kernel.build(args.sigma);
    log_config(json!({
        "subcommand": "entropy",
        "metric": args.metric,
        "eps_ladder": args.eps_ladder,
        "probes": args.probes,
        "a": args.a,
        "n": args.n,
        "kernel": kernel,
        "seed": args.seed,
        "out": args.out,
        "threads": threads,
    }));
    let ladder = parse_ladder(&args.eps_ladder)?;
    let metric = parse_metric(&args.metric)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);

    let mut csv = String::from("eps,log_size,max_probe_distance,pass\n");
    for &eps in &ladder {
        let net = match metric {
            Metric::Simplex => {
                let n = args.n.ok_or_else(|| {
                    Failure::Usage("simplex nets need --n (weight dimension)".into())
                })?;
                simplex_net(n, eps)?
            }
            Metric::Wasserstein(k) => wasserstein_net(args.a, k, eps)?,
            Metric::Hellinger => {
                mixture_net(args.a, kernel.clone(), NetMetric::Hellinger, eps)?
            }
            Metric::Lq(q) => mixture_net(args.a, kernel.clone(), NetMetric::Lq { q }, eps)?,
            Metric::Kl => {
                return Err(Failure::Usage("no net family is defined for `kl`".into()))
            }
        };
        let probes = sample_probes(&net, args.probes, &mut rng);
        let cover = verify_cover(&net, &probes)?;
        csv.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{}\n",
            eps,
            net.ln_size(),
            cover.max_distance,
            cover.pass
        ));
    }
    emit(args.out.as_deref(), &csv)
}

fn cmd_posterior(args: &PosteriorArgs, threads: Option<usize>) -> CliResult {
    let kernel = args.kernel.build(args.sigma);
    log_config(json!({
        "subcommand": "posterior",
        "data": args.data,
        "mass": args.mass,
        "a": args.a,
        "iters": args.iters,
        "burn_in": args.burn_in,
        "thin": args.thin,
        "seed": args.seed,
        "kernel": kernel,
        "out": args.out,
        "threads": threads,
    }));
    let data = load_observations(&args.data)?;
    let cfg = DpConfig::new(args.mass, args.a, BaseDensity::Uniform, 200)?;
    let draws = posterior_chain(
        &data,
        &cfg,
        &kernel,
        args.iters,
        args.burn_in,
        args.thin,
        args.seed,
    )?;
    emit(args.out.as_deref(), &to_json(&draws)?)
}

fn cmd_rates(args: &RatesArgs, threads: Option<usize>) -> CliResult {
    log_config(json!({
        "subcommand": "rates",
        "config": args.config,
        "out": args.out,
        "fit_out": args.fit_out,
        "plot_script": args.plot_script,
        "threads": threads,
    }));
    let text = read_input(&args.config)?;
    let cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| Failure::Domain(Error::Json(e)))?;
    let table = run_contraction_experiment(&cfg)?;

    write_atomic(&args.out, &table.to_csv())?;
    let fit_path = args
        .fit_out
        .clone()
        .unwrap_or_else(|| args.out.with_extension("fit.json"));
    let summary = json!({
        "fitted": table.fitted,
        "theory": table.theory,
        "failed": table.failed,
    });
    write_atomic(&fit_path, &format!("{:#}\n", summary))?;

    if let Some(script) = &args.plot_script {
        write_atomic(script, &plot_script_text(&args.out, &cfg))?;
    }
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs, threads: Option<usize>) -> CliResult {
    let kernel = args.kernel.build(args.sigma);
    log_config(json!({
        "subcommand": "simulate",
        "g0": args.g0,
        "n": args.n,
        "seed": args.seed,
        "kernel": kernel,
        "out": args.out,
        "threads": threads,
    }));
    let g0 = load_measure(&args.g0)?;
    let p = MixtureDensity::new(kernel, g0);
    let xs = p.sample(args.n, args.seed);
    let mut csv = String::from("x\n");
    for x in xs {
        csv.push_str(&format!("{x:.16e}\n"));
    }
    emit(args.out.as_deref(), &csv)
}

// ---------------------------------------------------------------------------
// Shared plumbing

/// Metric names accepted across subcommands.
enum Metric {
    Simplex,
    Wasserstein(f64),
    Hellinger,
    Lq(f64),
    Kl,
}

impl Metric {
    fn tag(&self) -> String {
        match self {
            Metric::Simplex => "simplex".into(),
            Metric::Wasserstein(k) => format!("w{k}"),
            Metric::Hellinger => "hellinger".into(),
            Metric::Lq(q) => format!("l{q}"),
            Metric::Kl => "kl".into(),
        }
    }
}

fn parse_metric(s: &str) -> std::result::Result<Metric, Failure> {
    match s {
        "simplex" => return Ok(Metric::Simplex),
        "hellinger" => return Ok(Metric::Hellinger),
        "kl" => return Ok(Metric::Kl),
        _ => {}
    }
    if let Some(rest) = s.strip_prefix('w') {
        if let Ok(k) = rest.parse::<f64>() {
            return Ok(Metric::Wasserstein(k));
        }
    }
    if let Some(rest) = s.strip_prefix('l') {
        if let Ok(q) = rest.parse::<f64>() {
            return Ok(Metric::Lq(q));
        }
    }
    Err(Failure::Usage(format!(
        "unknown metric `{s}`; expected simplex, w<k>, hellinger, l<q>, or kl"
    )))
}

fn parse_ladder(s: &str) -> std::result::Result<Vec<f64>, Failure> {
    let ladder: std::result::Result<Vec<f64>, _> =
        s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match ladder {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(Failure::Usage(format!("bad eps ladder `{s}`; expected e.g. 0.4,0.2"))),
    }
}

fn mixtures(kernel: Kernel, g: DiscreteMeasure, gp: DiscreteMeasure) -> (MixtureDensity, MixtureDensity) {
    (
        MixtureDensity::new(kernel.clone(), g),
        MixtureDensity::new(kernel, gp),
    )
}

/// Reads an input file; a missing or unreadable path is a usage error that
/// names the path.
fn read_input(path: &Path) -> std::result::Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_measure(path: &Path) -> std::result::Result<DiscreteMeasure, Failure> {
    let text = read_input(path)?;
    DiscreteMeasure::from_json(&text).map_err(Failure::Domain)
}

/// Parses one observation per line; a single leading non-numeric line is
/// treated as a header and skipped.
fn load_observations(path: &Path) -> std::result::Result<Vec<f64>, Failure> {
    let text = read_input(path)?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        match t.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if idx == 0 => continue,
            Err(_) => {
                return Err(Failure::Domain(Error::invalid(format!(
                    "line {} of {} is not a number: {t}",
                    idx + 1,
                    path.display()
                ))))
            }
        }
    }
    Ok(out)
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(format!("{}\n", serde_json::to_string_pretty(value)?))
}

/// Prints to stdout or writes atomically to a file.
fn emit(out: Option<&Path>, contents: &str) -> CliResult {
    match out {
        None => {
            print!("{contents}");
            Ok(())
        }
        Some(path) => write_atomic(path, contents),
    }
}

/// Write-then-rename so concurrent readers never observe a partial file.
fn write_atomic(path: &Path, contents: &str) -> CliResult {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let stem = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{stem}.{}.tmp", std::process::id()));
    std::fs::write(&tmp, contents).map_err(|e| Failure::Domain(Error::Io(e)))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Failure::Domain(Error::Io(e))
    })?;
    Ok(())
}

fn log_config(cfg: serde_json::Value) {
    eprintln!("config: {cfg}");
}

fn plot_script_text(csv: &Path, cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    s.push_str("# gnuplot script: posterior contraction medians vs sample size\n");
    s.push_str("set logscale xy\nset xlabel 'n'\nset ylabel 'posterior q50'\n");
    s.push_str("set datafile separator ','\nset key outside\n");
    s.push_str("plot \\\n");
    let metrics = cfg.metrics();
    for (i, m) in metrics.iter().enumerate() {
        let sep = if i + 1 == metrics.len() { "\n" } else { ", \\\n" };
        s.push_str(&format!(
            "  '{}' using 1:($3 eq '{m}' ? $4 : 1/0) title '{m}'{sep}",
            csv.display()
        ));
    }
    s
}
