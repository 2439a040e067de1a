//! Command-line front end for the spectral-sum estimators: load a Matrix
//! Market operand, run an estimator / planner / generator, and emit a
//! machine-readable report (JSON by default, CSV on request).
//!
//! Exit codes: 0 success (and PD), 1 usage error, 2 input/format error,
//! 3 NOT_PD from `test-pd`, 4 numerical precondition violation.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use spectrace::funcs::{
    estrada, logdet_general, logdet_pd, plan_parameters, schatten_norm, test_pd, trace_inverse,
    FuncsError, PlanParameters, SpectralFunctionKind, Verdict,
};
use spectrace::hutchinson::ProbeConfig;
use spectrace::linop::{SparseMatrix, SpectralInterval};
use spectrace::market::{load_matrix_market, write_matrix_market, MarketError};
use spectrace::synth::{regular_graph, sparse_general, spd_recipe};
use spectrace::EstimateResult;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "spectrace", version, about = "Stochastic Chebyshev spectral-sum estimators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Log-determinant of a symmetric positive definite matrix
    Logdet(SpdArgs),
    /// log |det C| of a general non-singular square matrix
    LogdetGeneral(GeneralArgs),
    /// Trace of the inverse of a symmetric positive definite matrix
    TraceInv(SpdArgs),
    /// Estrada index of a graph adjacency matrix
    Estrada(EstradaArgs),
    /// Schatten p-norm of a (possibly rectangular) matrix
    Schatten(SchattenArgs),
    /// Property-testing positive definiteness
    TestPd(TestPdArgs),
    /// Theorem-driven (m, n) planner
    Plan(PlanArgs),
    /// Synthetic matrix generators
    Gen(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProbeKind {
    Rademacher,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct CommonArgs {
    /// Probe seed; a number, or `entropy` for a random seed
    #[arg(long, default_value = "0")]
    seed: String,
    /// Number of probe vectors
    #[arg(long, default_value_t = 50)]
    m: usize,
    /// Chebyshev degree
    #[arg(long, default_value_t = 25)]
    n: usize,
    #[arg(long, value_enum, default_value_t = ProbeKind::Rademacher)]
    probes: ProbeKind,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Probe worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct SpdArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// `a,b`, `a,auto` (infinity-norm upper bound), or `auto` (Gershgorin)
    #[arg(long, default_value = "auto")]
    interval: String,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct GeneralArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    sigma_min: f64,
    /// Upper singular-value bound, or `auto` for sqrt(norm1 * norminf)
    #[arg(long, default_value = "auto")]
    sigma_max: String,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct EstradaArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Defaults to [-max_degree, max_degree]
    #[arg(long)]
    interval: Option<String>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SchattenArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long)]
    sigma_min: f64,
    #[arg(long, default_value = "auto")]
    sigma_max: String,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct TestPdArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Active-region width of the property test
    #[arg(long)]
    epsilon: f64,
    /// Spectrum already lies in [-1, 1]; skip the norm-estimation reduction
    #[arg(long, default_value_t = false)]
    assume_normalized: bool,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlanFunction {
    Logdet,
    TraceInv,
    Estrada,
    Schatten,
    TestPd,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long, value_enum)]
    function: PlanFunction,
    /// Eigenvalue interval `a,b`; singular-value bounds for schatten;
    /// defaults to `-1,1` for test-pd
    #[arg(long)]
    interval: Option<String>,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    zeta: f64,
    /// Matrix dimension (required for test-pd)
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Recipe {
    /// Diagonally dominant SPD: normal off-diagonals, diagonal = |row sum| + margin
    Spd,
    /// Random regular graph adjacency
    Regular,
    /// General sparse with normal entries
    General,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    recipe: Recipe,
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 10)]
    row_nnz: usize,
    #[arg(long, default_value_t = 0.1)]
    margin: f64,
    #[arg(long, default_value_t = 10)]
    degree: usize,
    #[arg(long, default_value = "0")]
    seed: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

// ---------------------------------------------------------------------------

enum Failure {
    Usage(String),
    Input(String),
    Precondition(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Input(_) => 2,
            Failure::Precondition(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Input(m) | Failure::Precondition(m) => m,
        }
    }
}

impl From<MarketError> for Failure {
    fn from(e: MarketError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<FuncsError> for Failure {
    fn from(e: FuncsError) -> Self {
        Failure::Precondition(e.to_string())
    }
}

#[derive(Serialize)]
struct MatrixMeta {
    path: String,
    dim: usize,
    nnz: usize,
}

#[derive(Serialize)]
struct PlanEcho {
    rho: f64,
    #[serde(rename = "U")]
    upper: f64,
    #[serde(rename = "L")]
    lower: f64,
}

/// The single-object report every subcommand prints.
#[derive(Serialize)]
struct Report {
    function: String,
    estimate: Option<f64>,
    m: Option<usize>,
    n: Option<usize>,
    interval: Option<[f64; 2]>,
    seed: u64,
    sample_std: Option<f64>,
    wall_time_ms: f64,
    matrix: Option<MatrixMeta>,
    plan: Option<PlanEcho>,
    verdict: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
}

impl Report {
    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => serde_json::to_string_pretty(self).expect("report serializes"),
            Format::Csv => {
                let header = "function,estimate,m,n,interval.0,interval.1,seed,sample_std,\
                              wall_time_ms,matrix.path,matrix.dim,matrix.nnz,plan.rho,plan.U,\
                              plan.L,verdict,threshold";
                let opt_num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                let opt_int = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
                let row = [
                    self.function.clone(),
                    opt_num(self.estimate),
                    opt_int(self.m),
                    opt_int(self.n),
                    opt_num(self.interval.map(|iv| iv[0])),
                    opt_num(self.interval.map(|iv| iv[1])),
                    self.seed.to_string(),
                    opt_num(self.sample_std),
                    self.wall_time_ms.to_string(),
                    self.matrix.as_ref().map(|m| m.path.clone()).unwrap_or_default(),
                    opt_int(self.matrix.as_ref().map(|m| m.dim)),
                    opt_int(self.matrix.as_ref().map(|m| m.nnz)),
                    opt_num(self.plan.as_ref().map(|p| p.rho)),
                    opt_num(self.plan.as_ref().map(|p| p.upper)),
                    opt_num(self.plan.as_ref().map(|p| p.lower)),
                    self.verdict.clone().unwrap_or_default(),
                    opt_num(self.threshold),
                ]
                .join(",");
                format!("{header}\n{row}")
            }
        }
    }
}

fn parse_seed(text: &str) -> Result<u64, Failure> {
    if text == "entropy" {
        return Ok(rand::random::<u64>());
    }
    text.parse::<u64>().map_err(|_| {
        Failure::Usage(format!("--seed must be an unsigned integer or `entropy`, got {text:?}"))
    })
}

fn parse_pair(text: &str, flag: &str) -> Result<(f64, Option<f64>), Failure> {
    let parts: Vec<&str> = text.split(',').collect();
    let bad = || Failure::Usage(format!("{flag} expects `a,b`, `a,auto`, or `auto`, got {text:?}"));
    match parts.as_slice() {
        [a, b] => {
            let lo: f64 = a.trim().parse().map_err(|_| bad())?;
            if b.trim() == "auto" {
                Ok((lo, None))
            } else {
                let hi: f64 = b.trim().parse().map_err(|_| bad())?;
                Ok((lo, Some(hi)))
            }
        }
        _ => Err(bad()),
    }
}

/// Resolves `--interval` against the operand: full `auto` uses Gershgorin,
/// `a,auto` fills the upper bound with the infinity norm.
fn resolve_interval(
    spec: &str,
    matrix: &SparseMatrix,
) -> Result<SpectralInterval, Failure> {
    if spec.trim() == "auto" {
        return matrix
            .gershgorin_interval()
            .map_err(|e| Failure::Precondition(e.to_string()));
    }
    let (lo, hi) = parse_pair(spec, "--interval")?;
    let hi = hi.unwrap_or_else(|| matrix.infinity_norm());
    SpectralInterval::new(lo, hi).map_err(|e| Failure::Precondition(e.to_string()))
}

fn load_square(path: &Path) -> Result<SparseMatrix, Failure> {
    let m = load_matrix_market(path)?;
    if !m.is_square() {
        return Err(Failure::Precondition(format!(
            "operator must be square, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(m)
}

fn meta(path: &Path, m: &SparseMatrix) -> MatrixMeta {
    MatrixMeta { path: path.display().to_string(), dim: m.rows(), nnz: m.nnz() }
}

fn init_threads(threads: usize) {
    if threads > 0 {
        // ignore the error when a pool already exists (tests call run() twice)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
}

fn probe_config(common: &CommonArgs, seed: u64) -> ProbeConfig {
    match common.probes {
        ProbeKind::Rademacher => ProbeConfig::rademacher(common.m, seed),
        ProbeKind::Gaussian => ProbeConfig::gaussian(common.m, seed),
    }
}

fn estimate_report(
    function: &str,
    r: &EstimateResult,
    estimate: f64,
    matrix: Option<MatrixMeta>,
) -> Report {
    Report {
        function: function.to_string(),
        estimate: Some(estimate),
        m: Some(r.m),
        n: Some(r.n),
        interval: r.interval.map(|iv| [iv.lower, iv.upper]),
        seed: r.seed,
        sample_std: Some(r.sample_std),
        wall_time_ms: r.wall_time.as_secs_f64() * 1e3,
        matrix,
        plan: None,
        verdict: None,
        threshold: None,
    }
}

fn run(cli: Cli) -> Result<(String, u8), Failure> {
    match cli.command {
        Command::Logdet(args) => {
            init_threads(args.common.threads);
            let m = load_square(&args.matrix)?;
            let interval = resolve_interval(&args.interval, &m)?;
            let seed = parse_seed(&args.common.seed)?;
            let cfg = probe_config(&args.common, seed);
            let r = logdet_pd(&m, interval, args.common.n, &cfg)?;
            let report = estimate_report("logdet", &r, r.estimate, Some(meta(&args.matrix, &m)));
            Ok((report.render(args.common.format), 0))
        }
        Command::TraceInv(args) => {
            init_threads(args.common.threads);
            let m = load_square(&args.matrix)?;
            let interval = resolve_interval(&args.interval, &m)?;
            let seed = parse_seed(&args.common.seed)?;
            let cfg = probe_config(&args.common, seed);
            let r = trace_inverse(&m, interval, args.common.n, &cfg)?;
            let report =
                estimate_report("trace-inv", &r, r.estimate, Some(meta(&args.matrix, &m)));
            Ok((report.render(args.common.format), 0))
        }
        Command::LogdetGeneral(args) => {
            init_threads(args.common.threads);
            let m = load_square(&args.matrix)?;
            let sigma_max = if args.sigma_max.trim() == "auto" {
                (m.one_norm() * m.infinity_norm()).sqrt()
            } else {
                args.sigma_max.trim().parse().map_err(|_| {
                    Failure::Usage("--sigma-max expects a number or `auto`".into())
                })?
            };
            let seed = parse_seed(&args.common.seed)?;
            let cfg = probe_config(&args.common, seed);
            let r = logdet_general(&m, args.sigma_min, sigma_max, args.common.n, &cfg)?;
            let report =
                estimate_report("logdet-general", &r, r.estimate, Some(meta(&args.matrix, &m)));
            Ok((report.render(args.common.format), 0))
        }
        Command::Estrada(args) => {
            init_threads(args.common.threads);
            let m = load_square(&args.matrix)?;
            let interval = match &args.interval {
                Some(spec) => Some(resolve_interval(spec, &m)?),
                None => None,
            };
            let seed = parse_seed(&args.common.seed)?;
            let cfg = probe_config(&args.common, seed);
            let r = estrada(&m, interval, args.common.n, &cfg)?;
            let report = estimate_report("estrada", &r, r.estimate, Some(meta(&args.matrix, &m)));
            Ok((report.render(args.common.format), 0))
        }
        Command::Schatten(args) => {
            init_threads(args.common.threads);
            let m = load_matrix_market(&args.matrix)?;
            let sigma_max = if args.sigma_max.trim() == "auto" {
                (m.one_norm() * m.infinity_norm()).sqrt()
            } else {
                args.sigma_max.trim().parse().map_err(|_| {
                    Failure::Usage("--sigma-max expects a number or `auto`".into())
                })?
            };
            let seed = parse_seed(&args.common.seed)?;
            let cfg = probe_config(&args.common, seed);
            let est = schatten_norm(&m, args.p, args.sigma_min, sigma_max, args.common.n, &cfg)?;
            let report =
                estimate_report("schatten", &est.raw, est.norm, Some(meta(&args.matrix, &m)));
            Ok((report.render(args.common.format), 0))
        }
        Command::TestPd(args) => {
            init_threads(args.common.threads);
            let m = load_square(&args.matrix)?;
            let seed = parse_seed(&args.common.seed)?;
            let cfg = probe_config(&args.common, seed);
            let v = test_pd(&m, args.epsilon, args.common.n, &cfg, args.assume_normalized)?;
            let mut report =
                estimate_report("test-pd", &v.raw, v.gamma, Some(meta(&args.matrix, &m)));
            report.verdict = Some(v.verdict.to_string());
            report.threshold = Some(v.threshold);
            let code = match v.verdict {
                Verdict::Pd => 0,
                Verdict::NotPd => 3,
            };
            Ok((report.render(args.common.format), code))
        }
        Command::Plan(args) => {
            let spec = args.interval.clone().unwrap_or_else(|| {
                if matches!(args.function, PlanFunction::TestPd) {
                    "-1,1".to_string()
                } else {
                    String::new()
                }
            });
            if spec.is_empty() {
                return Err(Failure::Usage("--interval is required for this plan".into()));
            }
            let (lo, hi) = parse_pair(&spec, "--interval")?;
            let hi = hi.ok_or_else(|| {
                Failure::Usage("plan needs explicit interval bounds, not `auto`".into())
            })?;
            let interval = SpectralInterval::new(lo, hi)
                .map_err(|e| Failure::Precondition(e.to_string()))?;
            let (kind, name) = match args.function {
                PlanFunction::Logdet => (SpectralFunctionKind::LogDet, "logdet"),
                PlanFunction::TraceInv => (SpectralFunctionKind::TraceInverse, "trace-inv"),
                PlanFunction::Estrada => (SpectralFunctionKind::Estrada, "estrada"),
                PlanFunction::Schatten => (SpectralFunctionKind::Schatten { p: args.p }, "schatten"),
                PlanFunction::TestPd => (SpectralFunctionKind::PdTest, "test-pd"),
            };
            if matches!(args.function, PlanFunction::TestPd) && args.dim.is_none() {
                return Err(Failure::Usage("plan --function test-pd requires --dim".into()));
            }
            let started = std::time::Instant::now();
            let plan: PlanParameters =
                plan_parameters(kind, interval, args.eps, args.zeta, args.dim.unwrap_or(1))?;
            let report = Report {
                function: format!("plan:{name}"),
                estimate: None,
                m: Some(plan.m),
                n: Some(plan.n),
                interval: Some([interval.lower, interval.upper]),
                seed: 0,
                sample_std: None,
                wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
                matrix: None,
                plan: Some(PlanEcho {
                    rho: plan.bound.rho,
                    upper: plan.bound.sup_abs,
                    lower: plan.bound.inf_abs.unwrap_or(0.0),
                }),
                verdict: None,
                threshold: None,
            };
            Ok((report.render(args.format), 0))
        }
        Command::Gen(args) => {
            let seed = parse_seed(&args.seed)?;
            let started = std::time::Instant::now();
            if args.dim == 0 {
                return Err(Failure::Precondition("--dim must be positive".into()));
            }
            let matrix = match args.recipe {
                Recipe::Spd => spd_recipe(args.dim, args.row_nnz, args.margin, seed),
                Recipe::Regular => regular_graph(args.dim, args.degree, seed),
                Recipe::General => sparse_general(args.dim, args.row_nnz, seed),
            };
            write_matrix_market(&args.out, &matrix)?;
            let report = Report {
                function: "gen".to_string(),
                estimate: None,
                m: None,
                n: None,
                interval: None,
                seed,
                sample_std: None,
                wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
                matrix: Some(meta(&args.out, &matrix)),
                plan: None,
                verdict: None,
                threshold: None,
            };
            Ok((report.render(args.format), 0))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok((output, code)) => {
            println!("{output}");
            ExitCode::from(code)
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
