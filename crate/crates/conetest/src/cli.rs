//! Argument parsing and subcommand dispatch.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use conetest_core::chibar::{self, ChiBarDist, McConfig};
use conetest_core::cones::{builtin_cone, BuiltinCone, ConeKind, ConeSpec, LinearSpace};
use conetest_core::model::ParamPartition;
use conetest_core::power::{self, DEFAULT_MARGINS};
use conetest_core::scenario::{Scenario, ScenarioKind};
use conetest_core::testing::{self, Hypothesis, TestConfig};
use conetest_core::{Matrix, Vector};

use crate::config::{self, pick, pick_opt, ConfigFile};
use crate::error::{AppError, Result};
use crate::harness::{self, HarnessConfig};
use crate::io;
use crate::report::{self, Manifest};

#[derive(Debug, Parser)]
#[command(name = "conetest", version, about = "Cone-constrained Wald, likelihood-ratio and score tests")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// `key = value` file; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for result files and the run manifest.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Master seed (default: $CONETEST_SEED, else a fixed built-in seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo sample size for orthant probabilities and power curves.
    #[arg(long, global = true)]
    pub mc_samples: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test a constraint on selected coefficients of a linear model.
    Test(TestArgs),
    /// Chi-bar-squared weights for an orthant or a linear constraint.
    Weights(WeightsArgs),
    /// Critical value of a chi-bar-squared mixture.
    Critical(CriticalArgs),
    /// Replicated synthetic experiments.
    Simulate(SimulateArgs),
    /// Power of the constrained and the two-sided test.
    PowerCurve(PowerArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConeArg {
    Nonnegative,
    Monotone,
    Sum,
    Custom,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Design matrix CSV (n rows, p columns, optional header).
    #[arg(long)]
    pub x: Option<PathBuf>,
    /// Response CSV (n rows, one column).
    #[arg(long)]
    pub y: Option<PathBuf>,
    /// Known noise standard deviation.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Zero-based indices of the tested coefficients, e.g. `0,1`.
    #[arg(long)]
    pub interest: Option<String>,
    #[arg(long, value_enum)]
    pub cone: Option<ConeArg>,
    /// Constraint matrix for `--cone custom` (CSV path or inline `1,-1;0,1`).
    #[arg(long = "R", allow_hyphen_values = true)]
    pub r_mat: Option<String>,
    /// Constraint offsets for `--cone custom` (CSV path or inline list; default 0).
    #[arg(long, allow_hyphen_values = true)]
    pub r_vec: Option<String>,
    /// Bound `b` of the sum cone `Σα ≤ b`.
    #[arg(long, allow_hyphen_values = true)]
    pub sum_bound: Option<f64>,
    /// Test against the unrestricted alternative instead.
    #[arg(long)]
    pub two_sided: bool,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[command(flatten)]
    pub tuning: TuningArgs,
}

#[derive(Debug, Args, Clone)]
pub struct TuningArgs {
    /// LASSO penalty (default: lambda-scale·sqrt(log p / n), scale 1).
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub lambda_scale: Option<f64>,
    /// Dantzig bound (default: lambda-prime-scale·sqrt(log p / n), scale 0.5).
    #[arg(long)]
    pub lambda_prime: Option<f64>,
    #[arg(long)]
    pub lambda_prime_scale: Option<f64>,
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    /// Dimension `d` of the tested block.
    #[arg(long)]
    pub dim: Option<usize>,
    /// `identity` or a CSV path holding V.
    #[arg(long)]
    pub cov: Option<String>,
    /// Constraint matrix R (CSV path or inline); omitted means the orthant.
    #[arg(long = "R", allow_hyphen_values = true)]
    pub r_mat: Option<String>,
    /// Use the subset formula even for diagonal V.
    #[arg(long)]
    pub general: bool,
}

#[derive(Debug, Args)]
pub struct CriticalArgs {
    /// Weights `w_0,…,w_m` (inline list or CSV path).
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Margins for a power run, e.g. `0,0.2,0.5,1`; omitted means a type-I run.
    #[arg(long)]
    pub margins: Option<String>,
    /// Count failed replicates instead of aborting.
    #[arg(long)]
    pub lenient: bool,
    #[command(flatten)]
    pub tuning: TuningArgs,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Grid of true values, e.g. `0,0.5,1`.
    #[arg(long)]
    pub alphas: Option<String>,
    /// Dimension; above 1 (or with --monte-carlo) the curve is simulated.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub monte_carlo: bool,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit status: 0 on success, 2 for usage errors, 1 otherwise.
/// Errors print as `error[category]: message`.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("error[usage]: {}", first.trim_start_matches("error: "));
            return 2;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.category());
            if e.category() == "usage" {
                2
            } else {
                1
            }
        }
    }
}

struct Ctx {
    cfg: ConfigFile,
    out_dir: PathBuf,
    threads: Option<usize>,
    seed: u64,
    mc_samples: usize,
}

impl Ctx {
    fn new(g: &GlobalArgs) -> Result<Self> {
        let cfg = match &g.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let out_dir = match (&g.out_dir, cfg.raw("out_dir")) {
            (Some(p), _) => p.clone(),
            (None, Some(p)) => PathBuf::from(p),
            (None, None) => PathBuf::from("."),
        };
        Ok(Self {
            threads: pick_opt(g.threads, &cfg, "threads")?,
            seed: pick(g.seed, &cfg, "seed", config::default_seed()?)?,
            mc_samples: pick(g.mc_samples, &cfg, "mc_samples", McConfig::default().samples)?,
            out_dir,
            cfg,
        })
    }

    fn mc(&self) -> McConfig {
        McConfig::new(self.mc_samples, self.seed)
    }

    fn manifest(&self, command: &str) -> Manifest {
        let mut m = Manifest::new(command);
        m.set("seed", self.seed).set("mc_samples", self.mc_samples);
        if let Some(t) = self.threads {
            m.set("threads", t);
        }
        m
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Writes the result files, then the manifest listing them.
    fn finish(&self, mut manifest: Manifest, files: &[(&str, Vec<u8>)]) -> Result<()> {
        let names: Vec<&str> = files.iter().map(|(n, _)| *n).collect();
        manifest.set("outputs", names.join(","));
        for (name, bytes) in files {
            io::write_atomic(&self.path(name), bytes)?;
        }
        let command = manifest.get("command").unwrap_or("run").replace('-', "_");
        io::write_atomic(&self.path(&format!("{command}.manifest")), manifest.render().as_bytes())
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let ctx = Ctx::new(&cli.global)?;
    harness::with_threads(ctx.threads, || match &cli.command {
        Command::Test(a) => cmd_test(&ctx, a),
        Command::Weights(a) => cmd_weights(&ctx, a),
        Command::Critical(a) => cmd_critical(&ctx, a),
        Command::Simulate(a) => cmd_simulate(&ctx, a),
        Command::PowerCurve(a) => cmd_power(&ctx, a),
    })?
}

fn require<T>(v: Option<T>, flag: &str, command: &str) -> Result<T> {
    v.ok_or_else(|| AppError::usage(format!("`{command}` requires --{flag}")))
}

fn parse_indices(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| AppError::usage(format!("--interest: '{}' is not an index", t.trim())))
        })
        .collect()
}

fn parse_margins(s: &str) -> Result<Vec<f64>> {
    io::parse_list(s).map_err(|e| AppError::usage(format!("margin list: {e}")))
}

fn tuning(t: &TuningArgs, cfg: &ConfigFile, ctx: &Ctx) -> Result<TestConfig> {
    let d = TestConfig::default();
    Ok(TestConfig {
        lambda: pick_opt(t.lambda, cfg, "lambda")?,
        lambda_scale: pick(t.lambda_scale, cfg, "lambda_scale", d.lambda_scale)?,
        lambda_prime: pick_opt(t.lambda_prime, cfg, "lambda_prime")?,
        lambda_prime_scale: pick(t.lambda_prime_scale, cfg, "lambda_prime_scale", d.lambda_prime_scale)?,
        mc: ctx.mc(),
        ..d
    })
}

fn record_tuning(m: &mut Manifest, t: &TestConfig) {
    match t.lambda {
        Some(l) => m.set("lambda", io::full(l)),
        None => m.set("lambda_scale", io::full(t.lambda_scale)),
    };
    match t.lambda_prime {
        Some(l) => m.set("lambda_prime", io::full(l)),
        None => m.set("lambda_prime_scale", io::full(t.lambda_prime_scale)),
    };
}

fn cone_of(a: &TestArgs, cfg: &ConfigFile, d: usize) -> Result<(ConeSpec, LinearSpace, Manifest)> {
    let mut m = Manifest::default();
    let kind = match a.cone {
        Some(c) => c,
        None => match cfg.raw("cone") {
            Some(s) => ConeArg::from_str(s, true).map_err(|_| AppError::usage(format!("unknown cone '{s}'")))?,
            None => return Err(AppError::usage("`test` requires --cone")),
        },
    };
    let shape = match kind {
        ConeArg::Nonnegative => Some(BuiltinCone::Nonnegative),
        ConeArg::Monotone => Some(BuiltinCone::Monotone),
        ConeArg::Sum => {
            let bound = require(pick_opt(a.sum_bound, cfg, "sum_bound")?, "sum-bound", "test --cone sum")?;
            m.set("sum_bound", io::full(bound));
            Some(BuiltinCone::Sum { bound })
        }
        ConeArg::Custom => None,
    };
    m.set("cone", format!("{kind:?}").to_lowercase());
    if let Some(shape) = shape {
        let (c, f) = builtin_cone(shape, d)?;
        return Ok((c, f, m));
    }
    let r_src = require(
        a.r_mat.clone().or_else(|| cfg.raw("R").map(str::to_string)),
        "R",
        "test --cone custom",
    )?;
    let r = io::matrix_arg(&r_src)?;
    let off = match a.r_vec.clone().or_else(|| cfg.raw("r_vec").map(str::to_string)) {
        Some(s) => {
            m.set("r_vec", &s);
            io::vector_arg(&s)?
        }
        None => Vector::zeros(r.nrows()),
    };
    m.set("R", &r_src);
    if r.ncols() != d {
        return Err(AppError::usage(format!(
            "R has {} columns but {d} coefficients are tested",
            r.ncols()
        )));
    }
    let cone = ConeSpec::new(r, off, ConeKind::Custom)?;
    let face = cone.face();
    Ok((cone, face, m))
}

fn cmd_test(ctx: &Ctx, a: &TestArgs) -> Result<()> {
    let cfg = &ctx.cfg;
    // Validate every required flag before reading data.
    let x = require(a.x.clone().or_else(|| cfg.raw("x").map(PathBuf::from)), "x", "test")?;
    let y = require(a.y.clone().or_else(|| cfg.raw("y").map(PathBuf::from)), "y", "test")?;
    let sigma = require(pick_opt(a.sigma, cfg, "sigma")?, "sigma", "test")?;
    let interest_src = require(a.interest.clone().or_else(|| cfg.raw("interest").map(str::to_string)), "interest", "test")?;
    let interest = parse_indices(&interest_src)?;
    let gamma = pick(a.gamma, cfg, "gamma", 0.05)?;
    let two_sided = a.two_sided || cfg.get::<bool>("two_sided")?.unwrap_or(false);
    let d = interest.len();
    let (cone, face, cone_manifest) = cone_of(a, cfg, d)?;
    let tcfg = tuning(&a.tuning, cfg, ctx)?;

    let data = io::load_dataset(&x, &y, sigma)?;
    let part = ParamPartition::new(interest, data.p())?;
    let hyp = if two_sided {
        Hypothesis::two_sided(face)
    } else {
        Hypothesis::one_sided(cone)
    };
    let rep = testing::run_test(&data, &part, &hyp, gamma, &tcfg)?;
    print!("{}", report::test_report_text(&rep));

    let mut m = ctx.manifest("test");
    m.set("x", x.display())
        .set("y", y.display())
        .set("sigma", io::full(sigma))
        .set("interest", &interest_src)
        .set("gamma", io::full(gamma))
        .set("two_sided", two_sided);
    for key in ["cone", "sum_bound", "R", "r_vec"] {
        if let Some(v) = cone_manifest.get(key) {
            m.set(key, v);
        }
    }
    record_tuning(&mut m, &tcfg);
    ctx.finish(m, &[("test_report.csv", report::test_report_csv(&rep))])
}

fn cmd_weights(ctx: &Ctx, a: &WeightsArgs) -> Result<()> {
    let cfg = &ctx.cfg;
    let cov_src = pick(a.cov.clone(), cfg, "cov", "identity".to_string())?;
    let general = a.general || cfg.get::<bool>("general")?.unwrap_or(false);
    let r_src = a.r_mat.clone().or_else(|| cfg.raw("R").map(str::to_string));
    let v = if cov_src.eq_ignore_ascii_case("identity") {
        let d = require(pick_opt(a.dim, cfg, "dim")?, "dim", "weights --cov identity")?;
        if d == 0 {
            return Err(AppError::usage("--dim must be at least 1"));
        }
        Matrix::identity(d, d)
    } else {
        let v = io::read_matrix(Path::new(&cov_src))?;
        if let Some(d) = pick_opt(a.dim, cfg, "dim")? {
            if v.nrows() != d {
                return Err(AppError::usage(format!("--dim {d} but V is {}x{}", v.nrows(), v.ncols())));
            }
        }
        v
    };
    let mc = ctx.mc();
    let dist: ChiBarDist = match &r_src {
        Some(r) => chibar::weights_linear_constraint(&io::matrix_arg(r)?, &v, &mc)?,
        None if general => chibar::weights_orthant_general(&v, &mc)?,
        None => chibar::weights_orthant(&v, &mc)?,
    };
    let bytes = report::weights_csv(dist.weights());
    print!("{}", String::from_utf8_lossy(&bytes));

    let mut m = ctx.manifest("weights");
    m.set("dim", v.nrows()).set("cov", &cov_src).set("general", general);
    if let Some(r) = &r_src {
        m.set("R", r);
    }
    m.set("description", &dist.meta.description);
    ctx.finish(m, &[("weights.csv", bytes)])
}

fn cmd_critical(ctx: &Ctx, a: &CriticalArgs) -> Result<()> {
    let cfg = &ctx.cfg;
    let src = require(a.weights.clone().or_else(|| cfg.raw("weights").map(str::to_string)), "weights", "critical")?;
    let gamma = require(pick_opt(a.gamma, cfg, "gamma")?, "gamma", "critical")?;
    let w = io::vector_arg(&src)?;
    let dist = ChiBarDist::new(w.as_slice().to_vec(), "user-supplied weights")?;
    let c = chibar::critical_value(&dist, gamma)?;
    println!("{}", io::full(c));

    let mut m = ctx.manifest("critical");
    m.set("weights", &src).set("gamma", io::full(gamma));
    let bytes = io::csv_bytes(&["gamma", "critical"], &[vec![io::full(gamma), io::full(c)]]);
    ctx.finish(m, &[("critical.csv", bytes)])
}

fn cmd_simulate(ctx: &Ctx, a: &SimulateArgs) -> Result<()> {
    let cfg = &ctx.cfg;
    let kind_src = require(a.scenario.clone().or_else(|| cfg.raw("scenario").map(str::to_string)), "scenario", "simulate")?;
    let kind: ScenarioKind = kind_src.parse()?;
    let p = require(pick_opt(a.p, cfg, "p")?, "p", "simulate")?;
    let n = pick(a.n, cfg, "n", 200)?;
    let rho = require(pick_opt(a.rho, cfg, "rho")?, "rho", "simulate")?;
    let replicates = pick(a.replicates, cfg, "replicates", 500)?;
    let gamma = pick(a.gamma, cfg, "gamma", 0.05)?;
    let sigma = pick(a.sigma, cfg, "sigma", 1.0)?;
    let margins_src = a.margins.clone().or_else(|| cfg.raw("margins").map(str::to_string));
    let margins = margins_src.as_deref().map(parse_margins).transpose()?;
    let lenient = a.lenient || cfg.get::<bool>("lenient")?.unwrap_or(false);

    let scenario = Scenario::new(kind, n, p, rho, 0.0)?.with_sigma(sigma)?;
    let mut hc = HarnessConfig::new(replicates, gamma, ctx.seed);
    hc.test = tuning(&a.tuning, cfg, ctx)?;
    hc.strict = !lenient;

    let mut m = ctx.manifest("simulate");
    m.set("scenario", kind)
        .set("p", p)
        .set("n", n)
        .set("rho", io::full(rho))
        .set("sigma", io::full(sigma))
        .set("replicates", replicates)
        .set("gamma", io::full(gamma))
        .set("lenient", lenient)
        .set("replicate_seeds", "derive_seed(seed, replicate)");
    record_tuning(&mut m, &hc.test);

    let mut files = Vec::new();
    let results = match &margins {
        None => vec![harness::run_type1(&scenario, &hc)?],
        Some(ms) => {
            m.set("margins", margins_src.as_deref().unwrap_or_default());
            let r = harness::run_power(&scenario, ms, &hc)?;
            files.push(("simulate_power.csv", report::power_table_csv(&r)));
            r
        }
    };
    print!("{}", report::simulation_text(&results));
    let failures: usize = results.iter().map(|r| r.failures).sum();
    m.set("failures", failures);
    files.insert(0, ("simulate.csv", report::simulation_csv(&results)));
    ctx.finish(m, &files)
}

fn cmd_power(ctx: &Ctx, a: &PowerArgs) -> Result<()> {
    let cfg = &ctx.cfg;
    let gamma = pick(a.gamma, cfg, "gamma", 0.05)?;
    let dim = pick(a.dim, cfg, "dim", 1)?;
    let mc = a.monte_carlo || cfg.get::<bool>("monte_carlo")?.unwrap_or(false) || dim > 1;
    let alphas_src = a.alphas.clone().or_else(|| cfg.raw("alphas").map(str::to_string));
    let alphas = match &alphas_src {
        Some(s) => parse_margins(s)?,
        None => DEFAULT_MARGINS.to_vec(),
    };
    let curve = if mc {
        power::power_vector_mc(dim, &alphas, gamma, ctx.mc_samples, ctx.seed)?
    } else {
        if alphas.iter().any(|&x| x < 0.0) {
            return Err(AppError::usage("analytic power needs alpha >= 0"));
        }
        power::power_curve_scalar(&alphas, gamma)?
    };
    let bytes = report::power_curve_csv(&curve);
    print!("{}", String::from_utf8_lossy(&bytes));

    let mut m = ctx.manifest("power-curve");
    m.set("gamma", io::full(gamma))
        .set("dim", dim)
        .set("monte_carlo", mc)
        .set("alphas", alphas.iter().map(|x| io::full(*x)).collect::<Vec<_>>().join(","));
    ctx.finish(m, &[("power_curve.csv", bytes)])
}
