use std::fs::File;
use std::io::{BufWriter, Write};

use linear_treeshap::scaling::{run_bench, speedup_nondecreasing, summary_line, write_csv, BenchConfig, BenchRow};

use crate::{io_failure, BenchArgs, Failure};

/// Linear-mode time from depth 8 to 16 relative to the growth in mean
/// distinct-feature depth; about 1 when time scales with `D`.
fn growth_vs_linear(rows: &[BenchRow]) -> Option<f64> {
    let at = |d| rows.iter().find(|r| r.depth == d);
    let (a, b) = (at(8)?, at(16)?);
    Some((b.linear_mean / a.linear_mean) / (b.mean_degree / a.mean_degree))
}

pub fn run(args: &BenchArgs) -> Result<(), Failure> {
    if args.depths.is_empty() || args.depths.contains(&0) {
        return Err(Failure::Usage("--depths needs positive depths".into()));
    }
    if args.leaves == 0 {
        return Err(Failure::Usage("--leaves must be at least 1".into()));
    }
    let cfg = BenchConfig {
        depths: args.depths.clone(),
        leaves: args.leaves,
        reps: args.reps as usize,
        samples: args.samples as usize,
        num_features: args.num_features as usize,
        seed: args.seed,
        ..Default::default()
    };
    let file = File::create(&args.output).map_err(|e| io_failure(&args.output, e))?;
    let rows = run_bench(&cfg)?;
    for row in &rows {
        println!("{}", summary_line(row));
    }
    println!(
        "speedup nondecreasing in depth: {}",
        if speedup_nondecreasing(&rows) { "yes" } else { "no" }
    );
    if let Some(g) = growth_vs_linear(&rows) {
        println!("linear time growth 8 -> 16 relative to D growth: {g:.2}");
    }
    let mut out = BufWriter::new(file);
    write_csv(&rows, &mut out)
        .and_then(|()| out.flush())
        .map_err(|e| io_failure(&args.output, e))?;
    Ok(())
}
