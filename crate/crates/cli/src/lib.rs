//! The `mob` command-line tool.
//!
//! Everything lives behind [`run`], which parses arguments, writes reports to
//! the given sinks and returns the process exit code:
//!
//! | code | meaning                                  |
//! |------|------------------------------------------|
//! | 0    | success                                  |
//! | 2    | usage or configuration error             |
//! | 3    | file could not be read, parsed or written |

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mob_core::bounds::cost_model;
use mob_core::covering::{BudgetTable, CouplingClass, Tier};
use mob_core::hausdorff::{calibrate_tau, CalibrationConfig, Coupling};
use mob_core::io::{format_real, read_embeddings, write_mobe, write_selection, Dtype};
use mob_core::oracle::{default_window, fit_effective_dimension};
use mob_core::synth::{generate, GenSpec, Manifold};
use mob_core::{coupling, mob_prune, Metric, MobError, PruneConfig};

pub mod bench;
pub mod sweep;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<MobError> for CliError {
    fn from(e: MobError) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

fn out_err(e: std::io::Error) -> CliError {
    CliError::Io(format!("cannot write output: {e}"))
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "mob",
    version,
    about = "Balanced covering selection over embedding sets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select K visual rows with the balanced covering selector.
    Prune(PruneArgs),
    /// Measure prompt-visual coupling (directed and symmetric Hausdorff).
    Coupling(CouplingArgs),
    /// Fit the strong/weak threshold tau from a sample of couplings.
    Calibrate(CalibrateArgs),
    /// Run the selector over a grid of budgets and write a CSV.
    Sweep(sweep::SweepArgs),
    /// Generate a synthetic visual/prompt pair.
    Gen(GenArgs),
    /// Estimate the effective dimension of an embedding set.
    FitDim(FitDimArgs),
    /// Cost model and runtime scaling.
    Bench(bench::BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Raw,
    Normalized,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Raw => Metric::RawEuclidean,
            MetricArg::Normalized => Metric::NormalizedEuclidean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassArg {
    Strong,
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TierArg {
    High,
    Mid,
    Low,
}

#[derive(Debug, Args)]
pub struct PruneArgs {
    /// Visual embeddings (.mobe or CSV).
    #[arg(long)]
    pub visual: PathBuf,
    /// Prompt embeddings (.mobe or CSV).
    #[arg(long)]
    pub prompt: PathBuf,
    /// Total number of retained rows K.
    #[arg(long)]
    pub budget: usize,
    /// Prompt-center budget K_p.
    #[arg(long, requires = "fold", conflicts_with_all = ["eta_prior", "table"])]
    pub kp: Option<usize>,
    /// Covering fold k: nearest visual rows nominated per prompt row.
    #[arg(long, requires = "kp")]
    pub fold: Option<usize>,
    /// Choose K_p and k from a coupling prior.
    #[arg(long, value_enum, requires = "tier", conflicts_with = "table")]
    pub eta_prior: Option<ClassArg>,
    /// Reduction tier for --eta-prior.
    #[arg(long, value_enum, requires = "eta_prior")]
    pub tier: Option<TierArg>,
    /// JSON table of {budget_k, budget_kp, fold_k} entries to look K up in.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Where to write the selection document.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CouplingArgs {
    #[arg(long)]
    pub visual: PathBuf,
    #[arg(long)]
    pub prompt: PathBuf,
    #[arg(long, value_enum, default_value = "normalized")]
    pub metric: MetricArg,
    /// Threshold for the strong/weak label; omitted means unclassified.
    #[arg(long)]
    pub tau: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Text file with one coupling value per line (blank lines and lines
    /// starting with '#' are skipped).
    #[arg(long)]
    pub etas: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DtypeArg {
    F32,
    F64,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// grid2d, circle, or clusters:C
    #[arg(long, value_parser = parse_manifold)]
    pub manifold: Manifold,
    #[arg(long)]
    pub n_v: usize,
    #[arg(long)]
    pub n_p: usize,
    /// Ambient dimension.
    #[arg(long)]
    pub dim: usize,
    /// Target symmetric Hausdorff distance.
    #[arg(long)]
    pub eta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_visual: PathBuf,
    #[arg(long)]
    pub out_prompt: PathBuf,
    #[arg(long, value_enum, default_value = "f64")]
    pub dtype: DtypeArg,
}

#[derive(Debug, Args)]
pub struct FitDimArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Radius window as `MIN,MAX`; defaults to 5% and 50% of the diameter.
    #[arg(long, value_parser = parse_window)]
    pub window: Option<(f64, f64)>,
    /// Number of log-spaced radii.
    #[arg(long, default_value_t = 12)]
    pub radii: usize,
    /// Normalize rows before fitting.
    #[arg(long)]
    pub normalize: bool,
}

pub fn parse_manifold(s: &str) -> std::result::Result<Manifold, String> {
    match s {
        "grid2d" => Ok(Manifold::Grid2D),
        "circle" => Ok(Manifold::Circle),
        _ => match s.strip_prefix("clusters:") {
            Some(c) => c
                .parse()
                .map(Manifold::GaussianClusters)
                .map_err(|e| format!("bad cluster count {c:?}: {e}")),
            None => Err(format!(
                "unknown manifold {s:?}; use grid2d, circle or clusters:C"
            )),
        },
    }
}

fn parse_window(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected MIN,MAX, got {s:?}"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{lo:?}: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{hi:?}: {e}"))?;
    Ok((lo, hi))
}

/// Parses `args` (including the program name) and executes the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command, out: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Prune(a) => cmd_prune(&a, out),
        Command::Coupling(a) => cmd_coupling(&a, out),
        Command::Calibrate(a) => cmd_calibrate(&a, out),
        Command::Sweep(a) => sweep::cmd_sweep(&a, out),
        Command::Gen(a) => cmd_gen(&a, out),
        Command::FitDim(a) => cmd_fit_dim(&a, out),
        Command::Bench(a) => bench::cmd_bench(&a, out),
    }
}

fn prune_config(a: &PruneArgs) -> CliResult<PruneConfig> {
    if let (Some(kp), Some(fold)) = (a.kp, a.fold) {
        return Ok(PruneConfig::manual(a.budget, kp, fold)?);
    }
    if let (Some(class), Some(tier)) = (a.eta_prior, a.tier) {
        let class = match class {
            ClassArg::Strong => CouplingClass::Strong,
            ClassArg::Weak => CouplingClass::Weak,
        };
        let tier = match tier {
            TierArg::High => Tier::High,
            TierArg::Mid => Tier::Mid,
            TierArg::Low => Tier::Low,
        };
        return Ok(PruneConfig::from_eta_prior(a.budget, class, tier)?);
    }
    if let Some(path) = &a.table {
        let text = read_text(path)?;
        let table = BudgetTable::from_json(&text)
            .map_err(|e| CliError::Io(format!("cannot parse {}: {e}", path.display())))?;
        let cfg = table.lookup(a.budget).ok_or_else(|| {
            CliError::Usage(format!(
                "budget {} has no entry in {}",
                a.budget,
                path.display()
            ))
        })?;
        cfg.validate()?;
        return Ok(cfg);
    }
    Err(CliError::Usage(
        "choose the split with --kp/--fold, --eta-prior/--tier, or --table".into(),
    ))
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn cmd_prune(a: &PruneArgs, out: &mut dyn Write) -> CliResult<()> {
    let cfg = prune_config(a)?;
    let v = read_embeddings(&a.visual)?;
    let p = read_embeddings(&a.prompt)?;
    let res = mob_prune(&v, &p, &cfg)?;
    write_selection(&res, &a.out)?;
    let lines = [
        ("K", cfg.budget_k.to_string()),
        ("K_p", cfg.budget_kp.to_string()),
        ("k", cfg.fold_k.to_string()),
        ("prompt_centers", res.prompt_centers.len().to_string()),
        ("visual_centers", res.visual_centers.len().to_string()),
        ("shortfall_reassigned", res.shortfall_reassigned.to_string()),
        ("eta", format_real(res.eta)),
        ("eps_p_directed", format_real(res.eps_p_directed)),
        ("eps_p_symmetric", format_real(res.eps_p_symmetric)),
        ("eps_v", format_real(res.eps_v)),
    ];
    for (k, v) in lines {
        writeln!(out, "{k}: {v}").map_err(out_err)?;
    }
    Ok(())
}

fn cmd_coupling(a: &CouplingArgs, out: &mut dyn Write) -> CliResult<()> {
    let v = read_embeddings(&a.visual)?;
    let p = read_embeddings(&a.prompt)?;
    let calib = a.tau.map(CalibrationConfig::user).transpose()?;
    let r = coupling(&v, &p, a.metric.into(), calib.as_ref())?;
    let class = match r.classification {
        Coupling::Strong => "strong",
        Coupling::Weak => "weak",
        Coupling::Unclassified => "unclassified",
    };
    writeln!(out, "h_v_to_p: {}", format_real(r.h_v_to_p)).map_err(out_err)?;
    writeln!(out, "h_p_to_v: {}", format_real(r.h_p_to_v)).map_err(out_err)?;
    writeln!(out, "eta: {}", format_real(r.eta)).map_err(out_err)?;
    writeln!(out, "classification: {class}").map_err(out_err)?;
    Ok(())
}

fn cmd_calibrate(a: &CalibrateArgs, out: &mut dyn Write) -> CliResult<()> {
    let text = read_text(&a.etas)?;
    let mut etas = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let x: f64 = line
            .parse()
            .map_err(|e| CliError::Io(format!("{}:{}: {line:?}: {e}", a.etas.display(), no + 1)))?;
        etas.push(x);
    }
    let cfg = calibrate_tau(&etas)?;
    writeln!(out, "samples: {}", etas.len()).map_err(out_err)?;
    writeln!(out, "tau: {}", format_real(cfg.tau)).map_err(out_err)?;
    Ok(())
}

fn cmd_gen(a: &GenArgs, out: &mut dyn Write) -> CliResult<()> {
    let spec = GenSpec {
        n_v: a.n_v,
        n_p: a.n_p,
        ambient_d: a.dim,
        manifold: a.manifold,
        eta_target: a.eta,
        seed: a.seed,
    };
    let g = generate(&spec)?;
    let dtype = match a.dtype {
        DtypeArg::F32 => Dtype::F32,
        DtypeArg::F64 => Dtype::F64,
    };
    write_mobe(&g.visual, dtype, &a.out_visual)?;
    write_mobe(&g.prompt, dtype, &a.out_prompt)?;
    writeln!(out, "measured_eta: {}", format_real(g.measured_eta)).map_err(out_err)?;
    Ok(())
}

fn cmd_fit_dim(a: &FitDimArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut x = read_embeddings(&a.input)?;
    if a.normalize {
        x = x.normalize()?;
    }
    let window = a.window.unwrap_or_else(|| default_window(&x));
    let fit = fit_effective_dimension(&x, window, a.radii)?;
    writeln!(out, "d_eff: {}", format_real(fit.d_eff_hat)).map_err(out_err)?;
    writeln!(out, "log_const: {}", format_real(fit.log_const)).map_err(out_err)?;
    writeln!(out, "r2: {}", format_real(fit.r2)).map_err(out_err)?;
    writeln!(
        out,
        "window: {} {}",
        format_real(fit.radius_window.0),
        format_real(fit.radius_window.1)
    )
    .map_err(out_err)?;
    writeln!(out, "lower_const: {}", format_real(fit.lower_const)).map_err(out_err)?;
    writeln!(out, "upper_const: {}", format_real(fit.upper_const)).map_err(out_err)?;
    writeln!(out, "radius,count").map_err(out_err)?;
    for (r, c) in fit.radii.iter().zip(&fit.counts) {
        writeln!(out, "{},{c}", format_real(*r)).map_err(out_err)?;
    }
    Ok(())
}

/// Cost report lines shared by `bench --cost-model`.
pub fn cost_lines(n: u64, l: u64, k: u64, d: u64) -> CliResult<Vec<String>> {
    let r = cost_model(n, l, k, d)?;
    Ok(vec![
        format!("flops_hausdorff: {}", r.flops_hausdorff),
        format!("flops_mob: {}", r.flops_mob),
        format!("tflops_hausdorff: {:.2e}", r.tflops_hausdorff()),
        format!("tflops_mob: {:.2e}", r.tflops_mob()),
    ])
}
