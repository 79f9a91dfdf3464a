//! Budget sweeps: one selector run per grid cell, emitted as CSV in a fixed
//! order regardless of how many worker threads computed the cells.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use mob_core::bounds::{theorem1_floor, theorem2_bound, BoundParams};
use mob_core::hausdorff::hausdorff;
use mob_core::io::{format_real, read_embeddings};
use mob_core::oracle::{choose_z, fit_bound_params};
use mob_core::synth::{generate, GenSpec, Manifold};
use mob_core::{mob_prune, EmbeddingSet, Metric, PruneConfig};
use rayon::prelude::*;

use crate::{parse_manifold, CliError, CliResult};

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Dataset as `VISUAL,PROMPT` paths. Repeatable.
    #[arg(long = "input")]
    pub inputs: Vec<String>,
    /// Generated dataset as `MANIFOLD:N_V:N_P:DIM:ETA`, instantiated once per
    /// seed. Repeatable.
    #[arg(long = "gen")]
    pub gens: Vec<String>,
    /// Comma-separated budgets K.
    #[arg(long, value_delimiter = ',', required = true)]
    pub budgets: Vec<usize>,
    /// Comma-separated prompt budgets: integers are counts, values with a
    /// decimal point are fractions of K (floored).
    #[arg(long, value_delimiter = ',', required = true)]
    pub kp: Vec<String>,
    /// Comma-separated covering folds k.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub folds: Vec<usize>,
    /// Comma-separated seeds for generated inputs.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    /// Bound constants as a JSON object with the BoundParams fields.
    #[arg(long, conflicts_with = "fit_constants")]
    pub constants: Option<PathBuf>,
    /// Fit a, b, a', b', d_eff per input and choose z per budget.
    #[arg(long)]
    pub fit_constants: bool,
    /// Worker threads for grid cells.
    #[arg(long, env = "MOB_THREADS", default_value_t = 1)]
    pub threads: usize,
    /// Leave wall_ms empty so output is byte-reproducible.
    #[arg(long)]
    pub no_timing: bool,
    /// CSV destination.
    #[arg(long)]
    pub out: PathBuf,
    /// Slope summary destination; defaults to OUT with `.summary.csv`.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KpSpec {
    Count(usize),
    Fraction(f64),
}

impl KpSpec {
    pub fn parse(s: &str) -> CliResult<Self> {
        let s = s.trim();
        let bad = |e: &dyn std::fmt::Display| CliError::Usage(format!("bad K_p value {s:?}: {e}"));
        if s.contains('.') {
            let f: f64 = s.parse().map_err(|e| bad(&e))?;
            if !(0.0..=1.0).contains(&f) {
                return Err(bad(&"fractions must lie in [0, 1]"));
            }
            Ok(KpSpec::Fraction(f))
        } else {
            s.parse().map(KpSpec::Count).map_err(|e| bad(&e))
        }
    }

    pub fn resolve(self, budget_k: usize) -> usize {
        match self {
            KpSpec::Count(c) => c,
            KpSpec::Fraction(f) => (f * budget_k as f64).floor() as usize,
        }
    }
}

/// One `(V, P)` pair of the sweep with its label and seed column.
pub struct Instance {
    pub label: String,
    pub seed: u64,
    pub visual: EmbeddingSet,
    pub prompt: EmbeddingSet,
    pub eta: f64,
    pub params: Option<BoundParams>,
}

pub struct Cell {
    pub instance: usize,
    pub budget_k: usize,
    pub budget_kp: usize,
    pub fold_k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub input: String,
    pub budget_k: usize,
    pub budget_kp: usize,
    pub fold_k: usize,
    pub seed: u64,
    pub prompt_centers: usize,
    pub visual_centers: usize,
    pub shortfall: usize,
    pub eta: f64,
    pub eps_p_directed: f64,
    pub eps_p_symmetric: f64,
    pub eps_v: f64,
    pub eps_v_centers: f64,
    pub product: f64,
    pub floor: Option<f64>,
    pub upper_bound: Option<f64>,
    pub wall_ms: Option<f64>,
}

pub const COLUMNS: [&str; 17] = [
    "input",
    "K",
    "K_p",
    "k",
    "seed",
    "prompt_centers",
    "visual_centers",
    "shortfall",
    "eta",
    "eps_p_directed",
    "eps_p_symmetric",
    "eps_v",
    "eps_v_centers",
    "product",
    "theorem1_floor",
    "theorem2_bound",
    "wall_ms",
];

fn parse_gen(s: &str) -> CliResult<(Manifold, usize, usize, usize, f64)> {
    let usage = || CliError::Usage(format!("--gen expects MANIFOLD:N_V:N_P:DIM:ETA, got {s:?}"));
    // the manifold itself may contain a colon (clusters:C)
    let parts: Vec<&str> = s.rsplitn(5, ':').collect();
    if parts.len() != 5 {
        return Err(usage());
    }
    let manifold = parse_manifold(parts[4]).map_err(CliError::Usage)?;
    let n_v = parts[3].parse().map_err(|_| usage())?;
    let n_p = parts[2].parse().map_err(|_| usage())?;
    let dim = parts[1].parse().map_err(|_| usage())?;
    let eta = parts[0].parse().map_err(|_| usage())?;
    Ok((manifold, n_v, n_p, dim, eta))
}

fn load_instances(args: &SweepArgs) -> CliResult<Vec<Instance>> {
    let mut out = Vec::new();
    for spec in &args.inputs {
        let (vp, pp) = spec.split_once(',').ok_or_else(|| {
            CliError::Usage(format!("--input expects VISUAL,PROMPT, got {spec:?}"))
        })?;
        let visual = read_embeddings(vp)?;
        let prompt = read_embeddings(pp)?;
        let eta = mob_core::coupling(&visual, &prompt, Metric::NormalizedEuclidean, None)?.eta;
        out.push(Instance {
            label: spec.clone(),
            seed: 0,
            visual,
            prompt,
            eta,
            params: None,
        });
    }
    for spec in &args.gens {
        let (manifold, n_v, n_p, ambient_d, eta_target) = parse_gen(spec)?;
        for &seed in &args.seeds {
            let g = generate(&GenSpec {
                n_v,
                n_p,
                ambient_d,
                manifold,
                eta_target,
                seed,
            })?;
            out.push(Instance {
                label: spec.clone(),
                seed,
                visual: g.visual,
                prompt: g.prompt,
                eta: g.measured_eta,
                params: None,
            });
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage(
            "sweep needs at least one --input or --gen".into(),
        ));
    }
    Ok(out)
}

fn grid(args: &SweepArgs, instances: &[Instance]) -> CliResult<Vec<Cell>> {
    if args.folds.is_empty() || args.seeds.is_empty() {
        return Err(CliError::Usage("grid lists must be non-empty".into()));
    }
    let kp_specs: Vec<KpSpec> = args
        .kp
        .iter()
        .map(|s| KpSpec::parse(s))
        .collect::<CliResult<_>>()?;
    let mut budgets = args.budgets.clone();
    budgets.sort_unstable();
    budgets.dedup();
    let mut folds = args.folds.clone();
    folds.sort_unstable();
    folds.dedup();

    let mut cells = Vec::new();
    for (i, _) in instances.iter().enumerate() {
        for &k in &budgets {
            let mut kps: Vec<usize> = kp_specs.iter().map(|s| s.resolve(k)).collect();
            kps.sort_unstable();
            kps.dedup();
            for &kp in &kps {
                if kp > k {
                    return Err(CliError::Usage(format!("K_p={kp} exceeds K={k}")));
                }
                for &fold in &folds {
                    PruneConfig::manual(k, kp, fold)?;
                    cells.push(Cell {
                        instance: i,
                        budget_k: k,
                        budget_kp: kp,
                        fold_k: fold,
                    });
                }
            }
        }
    }
    Ok(cells)
}

fn run_cell(inst: &Instance, cell: &Cell, fit: bool, timing: bool) -> CliResult<Row> {
    let cfg = PruneConfig::manual(cell.budget_k, cell.budget_kp, cell.fold_k)?;
    let start = Instant::now();
    let r = mob_prune(&inst.visual, &inst.prompt, &cfg)?;
    let wall_ms = timing.then(|| start.elapsed().as_secs_f64() * 1e3);

    let eps_v_centers = if r.visual_centers.is_empty() {
        f64::NAN
    } else {
        let v = inst.visual.normalize()?;
        let sv = v.select(r.visual_centers.as_slice())?;
        hausdorff(&sv, &v, Metric::NormalizedEuclidean)?
    };

    let (floor, upper_bound) = match inst.params {
        Some(mut params) => {
            let floor = if fit {
                choose_z(&inst.visual, &inst.prompt, params.eta, cell.budget_k).map(|z| {
                    params.z = z;
                    theorem1_floor(cell.budget_k, &params).product_floor
                })
            } else {
                Some(theorem1_floor(cell.budget_k, &params).product_floor)
            };
            let upper = theorem2_bound(
                &params,
                cell.fold_k,
                inst.prompt.n(),
                r.prompt_centers.len(),
                r.visual_centers.len(),
            )
            .ok();
            (floor, upper)
        }
        None => (None, None),
    };

    Ok(Row {
        input: inst.label.clone(),
        budget_k: cell.budget_k,
        budget_kp: cell.budget_kp,
        fold_k: cell.fold_k,
        seed: inst.seed,
        prompt_centers: r.prompt_centers.len(),
        visual_centers: r.visual_centers.len(),
        shortfall: r.shortfall_reassigned,
        eta: r.eta,
        eps_p_directed: r.eps_p_directed,
        eps_p_symmetric: r.eps_p_symmetric,
        eps_v: r.eps_v,
        eps_v_centers,
        product: r.eps_p_symmetric * eps_v_centers,
        floor,
        upper_bound,
        wall_ms,
    })
}

/// Loads the inputs, runs every cell and returns the rows in output order.
pub fn run_sweep(args: &SweepArgs) -> CliResult<Vec<Row>> {
    let mut instances = load_instances(args)?;
    if let Some(path) = &args.constants {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        let params: BoundParams = serde_json::from_str(&text)
            .map_err(|e| CliError::Io(format!("cannot parse {}: {e}", path.display())))?;
        instances.iter_mut().for_each(|i| i.params = Some(params));
    } else if args.fit_constants {
        for inst in &mut instances {
            let (params, _, _) = fit_bound_params(&inst.visual, &inst.prompt, inst.eta, 12)?;
            inst.params = Some(params);
        }
    }
    let cells = grid(args, &instances)?;
    let threads = args.threads.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} threads: {e}")))?;
    let rows: Vec<CliResult<Row>> = pool.install(|| {
        cells
            .par_iter()
            .map(|c| {
                run_cell(
                    &instances[c.instance],
                    c,
                    args.fit_constants,
                    !args.no_timing,
                )
            })
            .collect()
    });
    let mut rows: Vec<Row> = rows.into_iter().collect::<CliResult<_>>()?;
    // inputs keep command-line order; cells within an input are lexicographic
    rows.sort_by_key(|r| {
        let idx = instances
            .iter()
            .position(|i| i.label == r.input)
            .unwrap_or(usize::MAX);
        (idx, r.budget_k, r.budget_kp, r.fold_k, r.seed)
    });
    Ok(rows)
}

/// `(100 / (x_n − x_1)) · Σ (y_{i+1} − y_i) / y_i`. `None` for fewer than
/// two points, a zero-width axis, or a zero denominator.
pub fn mean_relative_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let span = xs[xs.len() - 1] - xs[0];
    if span == 0.0 {
        return None;
    }
    let mut sum = 0.0;
    for w in ys.windows(2) {
        if w[0] == 0.0 || !w[0].is_finite() || !w[1].is_finite() {
            return None;
        }
        sum += (w[1] - w[0]) / w[0];
    }
    Some(100.0 / span * sum)
}

fn opt(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format_real(v),
        _ => String::new(),
    }
}

fn real_or_empty(x: f64) -> String {
    opt(Some(x))
}

pub fn write_rows<W: Write>(rows: &[Row], w: W) -> csv::Result<()> {
    let mut wr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wr.write_record(COLUMNS)?;
    for r in rows {
        wr.write_record([
            r.input.clone(),
            r.budget_k.to_string(),
            r.budget_kp.to_string(),
            r.fold_k.to_string(),
            r.seed.to_string(),
            r.prompt_centers.to_string(),
            r.visual_centers.to_string(),
            r.shortfall.to_string(),
            real_or_empty(r.eta),
            real_or_empty(r.eps_p_directed),
            real_or_empty(r.eps_p_symmetric),
            real_or_empty(r.eps_v),
            real_or_empty(r.eps_v_centers),
            real_or_empty(r.product),
            opt(r.floor),
            opt(r.upper_bound),
            r.wall_ms.map(|t| format!("{t:.3}")).unwrap_or_default(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Slopes over the K_p axis for each `(input, K, k, seed)` group.
pub fn write_summary<W: Write>(rows: &[Row], w: W) -> csv::Result<()> {
    let mut wr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wr.write_record([
        "input",
        "K",
        "k",
        "seed",
        "points",
        "slope_eps_p",
        "slope_eps_v",
        "slope_product",
    ])?;
    let mut groups: Vec<Vec<&Row>> = Vec::new();
    for r in rows {
        match groups.iter_mut().find(|g| {
            let h = g[0];
            h.input == r.input
                && h.budget_k == r.budget_k
                && h.fold_k == r.fold_k
                && h.seed == r.seed
        }) {
            Some(g) => g.push(r),
            None => groups.push(vec![r]),
        }
    }
    for g in groups {
        let mut g = g;
        g.sort_by_key(|r| r.budget_kp);
        let xs: Vec<f64> = g.iter().map(|r| r.budget_kp as f64).collect();
        let slope = |f: fn(&Row) -> f64| {
            opt(mean_relative_slope(
                &xs,
                &g.iter().map(|r| f(r)).collect::<Vec<_>>(),
            ))
        };
        wr.write_record([
            g[0].input.clone(),
            g[0].budget_k.to_string(),
            g[0].fold_k.to_string(),
            g[0].seed.to_string(),
            g.len().to_string(),
            slope(|r| r.eps_p_symmetric),
            slope(|r| r.eps_v),
            slope(|r| r.product),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn summary_path(args: &SweepArgs) -> PathBuf {
    args.summary.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".summary.csv");
        PathBuf::from(p)
    })
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> CliResult<()> {
    let rows = run_sweep(args)?;
    let io_err = |p: &PathBuf, e: &dyn std::fmt::Display| {
        CliError::Io(format!("cannot write {}: {e}", p.display()))
    };
    let file = std::fs::File::create(&args.out).map_err(|e| io_err(&args.out, &e))?;
    write_rows(&rows, std::io::BufWriter::new(file)).map_err(|e| io_err(&args.out, &e))?;
    let sp = summary_path(args);
    let file = std::fs::File::create(&sp).map_err(|e| io_err(&sp, &e))?;
    write_summary(&rows, std::io::BufWriter::new(file)).map_err(|e| io_err(&sp, &e))?;
    writeln!(out, "rows: {}", rows.len()).map_err(crate::out_err)?;
    writeln!(out, "csv: {}", args.out.display()).map_err(crate::out_err)?;
    writeln!(out, "summary: {}", sp.display()).map_err(crate::out_err)?;
    Ok(())
}
