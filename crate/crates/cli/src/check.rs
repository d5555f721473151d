use linear_treeshap::conformance::{check_model, check_random, model_instances, CheckReport, IMPLEMENTATIONS};
use linear_treeshap::synth::rng;

use crate::explain::load_model;
use crate::{CheckArgs, Failure};

pub fn run(args: &CheckArgs) -> Result<(), Failure> {
    if !(args.tolerance > 0.0 && args.tolerance.is_finite()) {
        return Err(Failure::Usage(format!(
            "--tolerance must be a positive number, got {}",
            args.tolerance
        )));
    }
    if args.instances == 0 {
        return Err(Failure::Usage("--instances must be at least 1".into()));
    }
    let report = match (&args.model, args.random_trees) {
        (Some(path), _) => {
            let ensemble = load_model(path, args.lenient_weights)?;
            let xs = model_instances(&ensemble, args.instances, &mut rng(args.seed));
            check_model(&ensemble, &xs)?
        }
        (None, Some(trees)) => {
            let depth = args.max_depth.expect("clap requires --max-depth");
            if args.max_features == 0 {
                return Err(Failure::Usage("--max-features must be at least 1".into()));
            }
            check_random(trees, depth, args.max_features, args.instances, args.seed)?
        }
        (None, None) => unreachable!("clap requires a source"),
    };
    print_report(&report, args.tolerance);
    if report.passes(args.tolerance) {
        Ok(())
    } else {
        Err(Failure::CheckFailed)
    }
}

fn print_report(r: &CheckReport, tolerance: f64) {
    println!("implementations: {}", IMPLEMENTATIONS.join(", "));
    println!("models: {}  instances: {}", r.models, r.instances);
    println!(
        "max deviation: {:.3e} ({} vs {})",
        r.max_deviation, r.worst_pair.0, r.worst_pair.1
    );
    println!("max efficiency gap: {:.3e}", r.max_efficiency_gap);
    let verdict = if r.passes(tolerance) { "PASS" } else { "FAIL" };
    println!("{verdict} at tolerance {tolerance:e}");
}
