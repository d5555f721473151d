//! Timing of the linear explainer against the `O(L D^2)` per-rule reference
//! on synthetic trees of increasing depth.

use std::io::Write;
use std::time::Instant;

use crate::error::Result;
use crate::interp_poly::InterpolationBasis;
use crate::linear_shap::{explain_with, Mode, Workspace};
use crate::oracle::shapley_per_rule_all;
use crate::synth::{bench_tree, random_instance, rng};
use crate::tree_model::Instance;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub depths: Vec<usize>,
    /// Leaf target; a depth-`d` tree gets `min(leaves, 2^d)`.
    pub leaves: usize,
    pub reps: usize,
    /// Instances explained per repetition.
    pub samples: usize,
    pub num_features: usize,
    pub weight_range: (f64, f64),
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            depths: vec![4, 8, 12, 16],
            leaves: 64,
            reps: 5,
            samples: 50,
            num_features: 32,
            weight_range: (0.2, 0.8),
            seed: 0,
        }
    }
}

/// Timings for one depth; times are seconds per explained instance.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub depth: usize,
    pub leaves: usize,
    /// Mean over repetitions of the largest distinct-feature count on a path.
    pub mean_degree: f64,
    pub reps: usize,
    pub samples: usize,
    pub linear_mean: f64,
    pub linear_stderr: f64,
    pub quadratic_mean: f64,
    pub quadratic_stderr: f64,
}

impl BenchRow {
    pub fn speedup(&self) -> f64 {
        self.quadratic_mean / self.linear_mean
    }
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs every depth. Each repetition draws a fresh tree and instance set;
/// both methods explain the same instances one at a time on this thread.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    assert!(cfg.reps >= 1 && cfg.samples >= 1);
    let mut rows = Vec::with_capacity(cfg.depths.len());
    for &depth in &cfg.depths {
        let mut linear = Vec::with_capacity(cfg.reps);
        let mut quadratic = Vec::with_capacity(cfg.reps);
        let mut degrees = 0.0;
        let mut leaves = 0;
        for rep in 0..cfg.reps {
            let mut r = rng(cfg.seed ^ ((depth as u64) << 32) ^ rep as u64);
            let tree = bench_tree(depth, cfg.leaves, cfg.num_features, cfg.weight_range, &mut r);
            leaves = tree.num_leaves();
            degrees += tree.max_degree() as f64;
            let basis = InterpolationBasis::new(tree.max_degree())?;
            let xs: Vec<Instance> = (0..cfg.samples)
                .map(|_| random_instance(cfg.num_features, &mut r))
                .collect();

            let mut ws = Workspace::new();
            let mut sink = 0.0;
            // warm-up: caches and workspace buffers
            sink += explain_with(&tree, &xs[0], &basis, Mode::Fused, &mut ws)?.phi[0];
            sink += shapley_per_rule_all(&tree, &xs[0])?[0];
            let start = Instant::now();
            for x in &xs {
                sink += explain_with(&tree, x, &basis, Mode::Fused, &mut ws)?.phi[0];
            }
            linear.push(start.elapsed().as_secs_f64() / cfg.samples as f64);

            let start = Instant::now();
            for x in &xs {
                sink += shapley_per_rule_all(&tree, x)?[0];
            }
            quadratic.push(start.elapsed().as_secs_f64() / cfg.samples as f64);
            std::hint::black_box(sink);
        }
        let (linear_mean, linear_stderr) = mean_stderr(&linear);
        let (quadratic_mean, quadratic_stderr) = mean_stderr(&quadratic);
        rows.push(BenchRow {
            depth,
            leaves,
            mean_degree: degrees / cfg.reps as f64,
            reps: cfg.reps,
            samples: cfg.samples,
            linear_mean,
            linear_stderr,
            quadratic_mean,
            quadratic_stderr,
        });
    }
    Ok(rows)
}

/// True when the speedup never drops as depth grows.
pub fn speedup_nondecreasing(rows: &[BenchRow]) -> bool {
    rows.windows(2).all(|w| w[1].speedup() >= w[0].speedup())
}

pub const CSV_HEADER: &str = "depth,leaves,mean_degree,reps,samples,linear_mean_s,linear_stderr_s,quadratic_mean_s,quadratic_stderr_s,speedup";

pub fn write_csv(rows: &[BenchRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{:e},{:e},{:e},{:e},{}",
            r.depth,
            r.leaves,
            r.mean_degree,
            r.reps,
            r.samples,
            r.linear_mean,
            r.linear_stderr,
            r.quadratic_mean,
            r.quadratic_stderr,
            r.speedup()
        )?;
    }
    Ok(())
}

/// One human-readable line per depth.
pub fn summary_line(r: &BenchRow) -> String {
    format!(
        "depth {:>2}  leaves {:>4}  D {:>5.1}  linear {:.3e} ± {:.1e} s  quadratic {:.3e} ± {:.1e} s  speedup {:.2}x",
        r.depth,
        r.leaves,
        r.mean_degree,
        r.linear_mean,
        r.linear_stderr,
        r.quadratic_mean,
        r.quadratic_stderr,
        r.speedup()
    )
}
