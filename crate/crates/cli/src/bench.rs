//! `bench`: the FLOP cost model and a wall-clock scaling check of the
//! selector.

use std::io::Write;
use std::time::Instant;

use clap::Args;
use mob_core::{mob_prune, EmbeddingSet, PruneConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{cost_lines, out_err, CliError, CliResult};

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Print FLOP counts for N L K d.
    #[arg(long, num_args = 4, value_names = ["N", "L", "K", "D"], conflicts_with = "scaling")]
    pub cost_model: Option<Vec<u64>>,
    /// Time the selector at N = 4096, 8192, 16384 (L=16, K=128, d=256).
    #[arg(long)]
    pub scaling: bool,
    /// Timed runs per size; the fastest is reported.
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
}

pub const SCALING_SIZES: [usize; 3] = [4096, 8192, 16384];
pub const SCALING_L: usize = 16;
pub const SCALING_K: usize = 128;
pub const SCALING_D: usize = 256;

fn random_set(rng: &mut ChaCha8Rng, n: usize, d: usize) -> EmbeddingSet {
    let data = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    EmbeddingSet::new(data, n, d).expect("finite non-empty data")
}

/// Fastest-of-`repeats` wall time in seconds for each size in
/// [`SCALING_SIZES`], with `K_p = K/4` and `k = 2`.
pub fn scaling_times(repeats: usize) -> Vec<(usize, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5ca1e);
    let prompt = random_set(&mut rng, SCALING_L, SCALING_D);
    let cfg = PruneConfig::manual(SCALING_K, SCALING_K / 4, 2).expect("valid config");
    SCALING_SIZES
        .iter()
        .map(|&n| {
            let visual = random_set(&mut rng, n, SCALING_D);
            // warm caches and the allocator once before timing
            let _ = mob_prune(&visual, &prompt, &cfg);
            let best = (0..repeats.max(1))
                .map(|_| {
                    let t = Instant::now();
                    let r = mob_prune(&visual, &prompt, &cfg).expect("selector runs");
                    std::hint::black_box(r);
                    t.elapsed().as_secs_f64()
                })
                .fold(f64::INFINITY, f64::min);
            (n, best)
        })
        .collect()
}

pub fn ratios(times: &[(usize, f64)]) -> Vec<f64> {
    times.windows(2).map(|w| w[1].1 / w[0].1).collect()
}

pub fn cmd_bench(a: &BenchArgs, out: &mut dyn Write) -> CliResult<()> {
    if let Some(v) = &a.cost_model {
        for line in cost_lines(v[0], v[1], v[2], v[3])? {
            writeln!(out, "{line}").map_err(out_err)?;
        }
        return Ok(());
    }
    if a.scaling {
        let times = scaling_times(a.repeats);
        for (n, t) in &times {
            writeln!(out, "N={n}: {:.3} ms", t * 1e3).map_err(out_err)?;
        }
        for (i, r) in ratios(&times).iter().enumerate() {
            writeln!(out, "ratio {}->{}: {r:.3}", times[i].0, times[i + 1].0).map_err(out_err)?;
        }
        return Ok(());
    }
    Err(CliError::Usage(
        "bench needs --cost-model N L K D or --scaling".into(),
    ))
}
