//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage or configuration errors, 3 numeric or
//! engine failures.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analysis::{mse_study, roughness_study, KernelFamily, Scheme};
use crate::covariance::{CovarianceBlock, EvaluationPolicy, PointMode, DEFAULT_CROSS_TOL};
use crate::error::Error;
use crate::fields::{
    hybrid_simulate, riemann_simulate, CirculantEmbedding, FieldGrid, SchemeParams, VolatilityModel,
};
use crate::kernels::{matern_correlation, KernelSpec, KernelVariant};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

const DEFAULT_KERNEL: &str = "matern:nu=0.5,lambda=1";
const DEFAULT_ALPHAS: [f64; 8] = [-0.8, -0.7, -0.6, -0.5, -0.4, -0.3, -0.2, -0.1];
const DEFAULT_SCHEMES: [&str; 5] = ["hybrid:0", "hybrid:1", "hybrid:2", "hybrid:3", "riemann"];

#[derive(Parser, Debug)]
#[command(name = "vmma", version, about = "Simulation and analysis of volatility modulated moving average fields")]
struct Cli {
    /// JSON file with default settings; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Echo the effective configuration to standard error.
    #[arg(long, global = true)]
    verbose: bool,
    /// Worker threads (falls back to VMMA_THREADS); results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one field and write it to disk.
    Simulate(SimulateArgs),
    /// Monte Carlo roughness study.
    Roughness(RoughnessArgs),
    /// Exact mean-square error of the hybrid scheme over resolutions.
    Mse(MseArgs),
    /// Dump the covariance block of the correlated noise family.
    Covariance(CovarianceArgs),
}

#[derive(Args, Debug)]
struct EngineArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    kappa: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Evaluation points outside the central cells: midpoint or optimal.
    #[arg(long)]
    policy: Option<String>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Kernel, e.g. `matern:nu=0.4,lambda=1`, `expdecay:alpha=-0.3`, `power:alpha=-0.5,R=1`.
    #[arg(long)]
    kernel: Option<String>,
    /// hybrid, hybrid:<kappa>, riemann or circulant.
    #[arg(long)]
    scheme: Option<String>,
    /// `const:<c>` or `expvmma:<kernel>`.
    #[arg(long)]
    vol: Option<String>,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format (repeatable): vmg, csv or pgm.
    #[arg(long = "format")]
    formats: Vec<String>,
}

#[derive(Args, Debug)]
struct RoughnessArgs {
    /// Comma-separated roughness exponents.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    alphas: Option<Vec<f64>>,
    /// Comma-separated schemes.
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<String>>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Kernel family indexed by alpha: matern or expdecay.
    #[arg(long)]
    family: Option<String>,
    /// Matern scale parameter.
    #[arg(long)]
    lambda: Option<f64>,
    #[command(flatten)]
    engine: EngineArgs,
    /// Report CSV (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// `scheme,alpha,mean_dim` rows for plotting.
    #[arg(long)]
    plot_data: Option<PathBuf>,
    /// Wall-time CSV.
    #[arg(long)]
    timing: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MseArgs {
    #[arg(long)]
    kernel: Option<String>,
    /// Comma-separated resolutions.
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    #[arg(long)]
    kappa: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    policy: Option<String>,
    /// Absolute quadrature tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CovarianceArgs {
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long)]
    kappa: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Settings that may come from a `--config` JSON file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schemes: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vol: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formats: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot_data: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl StudyConfig {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks that every grammar string and list parses.
    pub fn validate(&self) -> Result<(), Error> {
        if let Some(k) = &self.kernel {
            k.parse::<KernelSpec>()?;
        }
        if let Some(s) = &self.scheme {
            s.parse::<Scheme>()?;
        }
        for s in self.schemes.iter().flatten() {
            s.parse::<Scheme>()?;
        }
        if let Some(p) = &self.policy {
            p.parse::<PointMode>()?;
        }
        if let Some(v) = &self.vol {
            parse_vol(v, 0)?;
        }
        for f in self.formats.iter().flatten() {
            OutputFormat::parse(f)?;
        }
        if let Some(f) = &self.family {
            parse_family(f, 1.0)?;
        }
        Ok(())
    }
}

/// Volatility grammar: `const:<c>` or `expvmma:<kernel>`.
pub fn parse_vol(text: &str, seed: u64) -> Result<VolatilityModel, Error> {
    if let Some(c) = text.strip_prefix("const:") {
        let c: f64 = c
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("invalid constant volatility '{c}'")))?;
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Parse(format!("constant volatility {c} must be positive")));
        }
        return Ok(VolatilityModel::Constant(c));
    }
    if let Some(k) = text.strip_prefix("expvmma:") {
        return Ok(VolatilityModel::ExpVmma {
            kernel: k.parse()?,
            seed,
        });
    }
    Err(Error::Parse(format!("unknown volatility '{text}' (const:<c> | expvmma:<kernel>)")))
}

fn parse_family(text: &str, lambda: f64) -> Result<KernelFamily, Error> {
    match text {
        "matern" => Ok(KernelFamily::Matern { lambda }),
        "expdecay" => Ok(KernelFamily::ExpDecay),
        other => Err(Error::Parse(format!("unknown kernel family '{other}' (matern | expdecay)"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OutputFormat {
    Vmg,
    Csv,
    Pgm,
}

impl OutputFormat {
    fn parse(s: &str) -> Result<Self, Error> {
        match s {
            "vmg" => Ok(OutputFormat::Vmg),
            "csv" => Ok(OutputFormat::Csv),
            "pgm" => Ok(OutputFormat::Pgm),
            other => Err(Error::Parse(format!("unknown format '{other}' (vmg | csv | pgm)"))),
        }
    }

    fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Vmg => "vmg",
            OutputFormat::Csv => "csv",
            OutputFormat::Pgm => "pgm",
        }
    }
}

/// Failure of a command with its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Validation(_) | Error::Parse(_) => EXIT_USAGE,
            _ => EXIT_NUMERIC,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure {
        code: EXIT_USAGE,
        message: format!("cannot create {}: {e}", path.display()),
    })
}

fn finish<W: Write>(mut w: W) -> Result<(), Failure> {
    w.flush().map_err(|e| Failure {
        code: EXIT_NUMERIC,
        message: format!("write failed: {e}"),
    })
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<StudyConfig, Failure> {
    let Some(path) = path else {
        return Ok(StudyConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let cfg = StudyConfig::from_json(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

fn configure_threads(flag: Option<usize>, cfg: Option<usize>) -> Result<(), Failure> {
    let env = std::env::var("VMMA_THREADS").ok();
    let threads = match (flag.or(cfg), env) {
        (Some(t), _) => Some(t),
        (None, Some(v)) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("VMMA_THREADS = '{v}' is not a thread count")))?,
        ),
        (None, None) => None,
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(usage("thread count must be positive"));
        }
        // A pool may already exist when the library is driven repeatedly in-process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(cli.config.as_deref())?;
    configure_threads(cli.threads, cfg.threads)?;
    match cli.command {
        Command::Simulate(a) => cmd_simulate(a, cfg, cli.verbose),
        Command::Roughness(a) => cmd_roughness(a, cfg, cli.verbose),
        Command::Mse(a) => cmd_mse(a, cfg, cli.verbose),
        Command::Covariance(a) => cmd_covariance(a, cfg, cli.verbose),
    }
}

fn echo(verbose: bool, effective: &StudyConfig) {
    if verbose {
        eprintln!("effective configuration:\n{}", effective.to_json());
    }
}

fn scheme_params(e: &EngineArgs, cfg: &StudyConfig, defaults: (usize, f64, usize)) -> Result<SchemeParams, Failure> {
    let mode: PointMode = e.policy.clone().or(cfg.policy.clone()).unwrap_or_else(|| "midpoint".into()).parse()?;
    let params = SchemeParams::new(
        e.n.or(cfg.n).unwrap_or(defaults.0),
        e.gamma.or(cfg.gamma).unwrap_or(defaults.1),
        e.kappa.or(cfg.kappa).unwrap_or(defaults.2),
        e.seed.or(cfg.seed).unwrap_or(0),
    )?;
    Ok(params.with_policy(EvaluationPolicy {
        mode,
        ..EvaluationPolicy::default()
    }))
}

fn cmd_simulate(a: SimulateArgs, cfg: StudyConfig, verbose: bool) -> Result<(), Failure> {
    let kernel_text = a.kernel.or(cfg.kernel.clone()).unwrap_or_else(|| DEFAULT_KERNEL.into());
    let kernel: KernelSpec = kernel_text.parse()?;
    let scheme_text = a.scheme.or(cfg.scheme.clone()).unwrap_or_else(|| "hybrid".into());
    let mut scheme: Scheme = scheme_text.parse()?;
    let mut params = scheme_params(&a.engine, &cfg, (100, 0.3, 1))?;
    match scheme {
        Scheme::Hybrid { kappa } if scheme_text.contains(':') => params.kappa = kappa,
        Scheme::Hybrid { .. } => scheme = Scheme::Hybrid { kappa: params.kappa },
        _ => {}
    }
    params.validate()?;
    let vol_text = a.vol.or(cfg.vol.clone()).unwrap_or_else(|| "const:1".into());
    let vol = parse_vol(&vol_text, params.seed)?;
    let out = a.out.or(cfg.out.clone()).ok_or_else(|| usage("--out is required"))?;
    let format_texts = if a.formats.is_empty() {
        cfg.formats.clone().unwrap_or_else(|| vec!["vmg".into()])
    } else {
        a.formats
    };
    let formats = format_texts
        .iter()
        .map(|f| OutputFormat::parse(f))
        .collect::<Result<Vec<_>, _>>()?;
    echo(
        verbose,
        &StudyConfig {
            kernel: Some(kernel.to_string()),
            scheme: Some(scheme.to_string()),
            n: Some(params.n),
            gamma: Some(params.gamma),
            kappa: Some(params.kappa),
            seed: Some(params.seed),
            policy: Some(params.policy.mode.to_string()),
            vol: Some(vol_text.clone()),
            out: Some(out.clone()),
            formats: Some(format_texts.clone()),
            ..StudyConfig::default()
        },
    );
    if let Some(w) = params.gamma_warning(&kernel) {
        eprintln!("warning: {w}");
    }
    let start = Instant::now();
    let grid = match scheme {
        Scheme::Hybrid { .. } => hybrid_simulate(&kernel, &params, &vol)?,
        Scheme::Riemann => riemann_simulate(&kernel, &params, &vol)?,
        Scheme::Circulant => {
            let VolatilityModel::Constant(c) = vol else {
                return Err(usage("the circulant baseline supports constant volatility only"));
            };
            let KernelVariant::Matern { nu, lambda } = kernel.variant() else {
                return Err(usage("the circulant baseline needs a Matern kernel"));
            };
            let variance = c * c * kernel.g_squared_integral(1e-10)?;
            CirculantEmbedding::new(|r| matern_correlation(nu, lambda, r).unwrap_or(f64::NAN), variance, params.n)?
                .sample(params.seed, params.replicate)?
        }
    };
    let seconds = start.elapsed().as_secs_f64();
    for f in &formats {
        let path = if formats.len() == 1 {
            out.clone()
        } else {
            out.with_extension(f.extension())
        };
        write_grid(&grid, *f, &path)?;
    }
    println!(
        "scheme={} n={} N={} seconds={seconds:.3}",
        scheme,
        params.n,
        params.truncation()
    );
    Ok(())
}

fn write_grid(grid: &FieldGrid, format: OutputFormat, path: &Path) -> Result<(), Failure> {
    let mut w = create(path)?;
    match format {
        OutputFormat::Vmg => grid.write_vmg(&mut w)?,
        OutputFormat::Csv => grid.write_csv(&mut w)?,
        OutputFormat::Pgm => grid.write_pgm(&mut w)?,
    }
    finish(w)
}

fn cmd_roughness(a: RoughnessArgs, cfg: StudyConfig, verbose: bool) -> Result<(), Failure> {
    let alphas = a.alphas.or(cfg.alphas.clone()).unwrap_or_else(|| DEFAULT_ALPHAS.to_vec());
    let scheme_texts = a
        .schemes
        .or(cfg.schemes.clone())
        .unwrap_or_else(|| DEFAULT_SCHEMES.iter().map(|s| s.to_string()).collect());
    let schemes = scheme_texts
        .iter()
        .map(|s| s.parse::<Scheme>())
        .collect::<Result<Vec<_>, _>>()?;
    let replicates = a.replicates.or(cfg.replicates).unwrap_or(100);
    let lambda = a.lambda.or(cfg.lambda).unwrap_or(1.0);
    let family_text = a.family.or(cfg.family.clone()).unwrap_or_else(|| "matern".into());
    let family = parse_family(&family_text, lambda)?;
    let max_kappa = schemes.iter().map(|s| s.kappa()).max().unwrap_or(0);
    let mut params = scheme_params(&a.engine, &cfg, (100, 0.3, 1))?;
    params.kappa = params.kappa.max(max_kappa).min(params.n);
    params.validate()?;
    let out = a.out.or(cfg.out.clone());
    let plot = a.plot_data.or(cfg.plot_data.clone());
    let timing = a.timing.or(cfg.timing.clone());
    echo(
        verbose,
        &StudyConfig {
            schemes: Some(schemes.iter().map(|s| s.to_string()).collect()),
            n: Some(params.n),
            gamma: Some(params.gamma),
            seed: Some(params.seed),
            policy: Some(params.policy.mode.to_string()),
            replicates: Some(replicates),
            alphas: Some(alphas.clone()),
            family: Some(family_text),
            lambda: Some(lambda),
            out: out.clone(),
            plot_data: plot.clone(),
            timing: timing.clone(),
            ..StudyConfig::default()
        },
    );
    let report = roughness_study(family, &alphas, &schemes, &params, replicates)?;
    match out {
        Some(path) => {
            let mut w = create(&path)?;
            report.write_csv(&mut w)?;
            finish(w)?;
        }
        None => {
            let stdout = io::stdout();
            report.write_csv(stdout.lock())?;
        }
    }
    if let Some(path) = plot {
        let mut w = create(&path)?;
        report.write_plot_data(&mut w)?;
        finish(w)?;
    }
    if let Some(path) = timing {
        let mut w = create(&path)?;
        report.write_timing_csv(&mut w)?;
        finish(w)?;
    }
    Ok(())
}

fn cmd_mse(a: MseArgs, cfg: StudyConfig, verbose: bool) -> Result<(), Failure> {
    let kernel_text = a.kernel.or(cfg.kernel.clone()).unwrap_or_else(|| DEFAULT_KERNEL.into());
    let kernel: KernelSpec = kernel_text.parse()?;
    let ns = a.n_list.or(cfg.n_list.clone()).unwrap_or_else(|| vec![20, 40, 80]);
    if ns.is_empty() {
        return Err(usage("--n-list must not be empty"));
    }
    let kappa = a.kappa.or(cfg.kappa).unwrap_or(1);
    let gamma = a.gamma.or(cfg.gamma).unwrap_or(0.5);
    let mode: PointMode = a.policy.or(cfg.policy.clone()).unwrap_or_else(|| "midpoint".into()).parse()?;
    let tol = a.tol.or(cfg.tol).unwrap_or(1e-10);
    if !(tol > 0.0) {
        return Err(usage("--tol must be positive"));
    }
    let min_n = *ns.iter().min().expect("non-empty");
    let base = SchemeParams::new(min_n, gamma, kappa, 0)?.with_policy(EvaluationPolicy {
        mode,
        ..EvaluationPolicy::default()
    });
    let out = a.out.or(cfg.out.clone());
    echo(
        verbose,
        &StudyConfig {
            kernel: Some(kernel.to_string()),
            n_list: Some(ns.clone()),
            kappa: Some(kappa),
            gamma: Some(gamma),
            policy: Some(mode.to_string()),
            tol: Some(tol),
            out: out.clone(),
            ..StudyConfig::default()
        },
    );
    if let Some(w) = base.gamma_warning(&kernel) {
        eprintln!("warning: {w}");
    }
    let sigma2 = 1.0;
    let report = mse_study(&kernel, &ns, &base, tol, sigma2)?;
    let mut text = Vec::new();
    report.write_csv(&mut text)?;
    if let Some((slope, intercept)) = report.rate {
        writeln!(text, "# rate_fit slope={slope:.6} intercept={intercept:.6}").expect("in-memory write");
        println!("rate_fit slope={slope:.6} intercept={intercept:.6} J_ref={:.10}", report.j_ref);
    }
    match out {
        Some(path) => {
            let mut w = create(&path)?;
            w.write_all(&text).map_err(Error::from)?;
            finish(w)?;
        }
        None => {
            io::stdout().write_all(&text).map_err(Error::from)?;
        }
    }
    Ok(())
}

fn cmd_covariance(a: CovarianceArgs, cfg: StudyConfig, verbose: bool) -> Result<(), Failure> {
    let alpha = a.alpha.or(cfg.alpha).unwrap_or(-0.5);
    let kappa = a.kappa.or(cfg.kappa).unwrap_or(1);
    let n = a.n.or(cfg.n).unwrap_or(100);
    let out = a.out.or(cfg.out.clone());
    echo(
        verbose,
        &StudyConfig {
            alpha: Some(alpha),
            kappa: Some(kappa),
            n: Some(n),
            out: out.clone(),
            ..StudyConfig::default()
        },
    );
    let block = CovarianceBlock::build(alpha, kappa, n, DEFAULT_CROSS_TOL)?;
    match out {
        Some(path) => {
            let mut w = create(&path)?;
            block.write_csv(&mut w)?;
            finish(w)?;
        }
        None => block.write_csv(io::stdout().lock())?,
    }
    Ok(())
}
