//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs as a plain binary so every line is always shown.

use std::time::{Duration, Instant};

use linear_treeshap::conformance::{all_phis, deviation, max_deviation, IMPLEMENTATIONS};
use linear_treeshap::fixtures::{rain_instance, rain_tree, RAIN_PHI, RAIN_PREDICTION};
use linear_treeshap::oracle::{
    predict_with_active_set, shapley_bruteforce_all, coefficient_reference, ActiveSet,
};
use linear_treeshap::scaling::{run_bench, speedup_nondecreasing, summary_line, BenchConfig};
use linear_treeshap::synth::{corpus_tree, deep_tree, random_instance, rng, SynthRng};
use linear_treeshap::{
    explain, explain_with, Ensemble, Instance, InterpolationBasis, Mode, PreprocessedTree,
    Workspace,
};
use rand::Rng;

const CORPUS_SEED: u64 = 0x5eed_0002;
const CORPUS_TREES: usize = 500;
const CORPUS_INSTANCES: usize = 5;
const CORPUS_MAX_DEPTH: usize = 8;
const CORPUS_MAX_FEATURES: usize = 10;

struct Outcome {
    pass: bool,
    detail: String,
}

fn corpus() -> Vec<(PreprocessedTree, Vec<Instance>)> {
    let mut r = rng(CORPUS_SEED);
    (0..CORPUS_TREES)
        .map(|_| {
            let t = corpus_tree(CORPUS_MAX_DEPTH, CORPUS_MAX_FEATURES, &mut r);
            let xs = (0..CORPUS_INSTANCES)
                .map(|_| random_instance(t.num_features(), &mut r))
                .collect();
            (t, xs)
        })
        .collect()
}

fn worked_example() -> Outcome {
    let t = rain_tree();
    let x = rain_instance();
    let basis = InterpolationBasis::new(t.max_degree()).unwrap();
    let a = explain(&t, &x, &basis).unwrap();
    let brute = shapley_bruteforce_all(&t, &x).unwrap();
    let cloudy_wind = predict_with_active_set(&t, x.values(), ActiveSet::from_features(&[1, 2]));

    let prediction_ok = (a.prediction - RAIN_PREDICTION).abs() <= 1e-10;
    let subset_ok = (cloudy_wind - 0.45).abs() <= 1e-10;
    let brute_ok = brute.iter().zip(RAIN_PHI).all(|(b, w)| (b - w).abs() <= 1e-10);
    let explain_ok = a.phi.iter().zip(&brute).all(|(p, b)| (p - b).abs() <= 1e-10);
    Outcome {
        pass: prediction_ok && subset_ok && brute_ok && explain_ok,
        detail: format!(
            "prediction {} f(cloudy,wind) {} phi {:?} bruteforce {:?}",
            a.prediction, cloudy_wind, a.phi, brute
        ),
    }
}

fn oracle_equivalence(corpus: &[(PreprocessedTree, Vec<Instance>)]) -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut worst_pair = (IMPLEMENTATIONS[0], IMPLEMENTATIONS[1]);
    for (t, xs) in corpus {
        let e = Ensemble::single(t.clone());
        let basis = InterpolationBasis::new(t.max_degree()).unwrap();
        for x in xs {
            let phis = all_phis(&e, x, &basis).unwrap();
            for a in 0..4 {
                for b in a + 1..4 {
                    let d = max_deviation(&phis[a], &phis[b]);
                    if d > worst {
                        worst = d;
                        worst_pair = (IMPLEMENTATIONS[a], IMPLEMENTATIONS[b]);
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: worst <= 1e-8 && elapsed < Duration::from_secs(60),
        detail: format!(
            "{} trees x {} instances, max pairwise deviation {:.2e} ({} vs {}), {:.1?}",
            corpus.len(),
            CORPUS_INSTANCES,
            worst,
            worst_pair.0,
            worst_pair.1,
            elapsed
        ),
    }
}

fn efficiency_at_depth() -> Outcome {
    let mut r = rng(0x5eed_0003);
    let basis = InterpolationBasis::new(18).unwrap();
    let mut gap = 0.0f64;
    let mut dev = 0.0f64;
    let mut nodes = 0;
    for _ in 0..20 {
        let t = deep_tree(18, 20, 22, 0.55, (0.2, 0.8), &mut r);
        assert_eq!(t.max_degree(), 18);
        nodes += t.len();
        let x = random_instance(t.num_features(), &mut r);
        let a = explain(&t, &x, &basis).unwrap();
        gap = gap.max(a.efficiency_gap());
        dev = dev.max(max_deviation(&a.phi, &coefficient_reference(&t, &x).unwrap()));
    }
    Outcome {
        pass: gap <= 1e-9 && dev <= 1e-6,
        detail: format!(
            "20 trees, distinct-feature depth 18, {nodes} nodes; efficiency gap {gap:.2e}, vs coefficient reference {dev:.2e}"
        ),
    }
}

fn random_coeffs(degree: usize, r: &mut SynthRng) -> Vec<f64> {
    (0..=degree).map(|_| r.random_range(-1.0..1.0)).collect()
}

fn psi_properties() -> Outcome {
    let mut r = rng(0x5eed_0004);
    let basis = InterpolationBasis::new(18).unwrap();
    let mut additivity = 0.0f64;
    let mut scale = 0.0f64;
    for _ in 0..1000 {
        let d = r.random_range(0..=18usize);
        let a = basis.from_coefficients(&random_coeffs(d, &mut r)).unwrap();
        let b = basis.from_coefficients(&random_coeffs(d, &mut r)).unwrap();
        let sum = basis.add_scaled(&a, &b);
        let lhs = basis.psi(&sum, d).unwrap();
        let rhs = basis.psi(&a, d).unwrap() + basis.psi(&b, d).unwrap();
        additivity = additivity.max((lhs - rhs).abs());

        let k = r.random_range(0..=18 - d);
        let lifted = a.lift(&basis, k).unwrap();
        scale = scale.max(deviation(
            basis.psi(&lifted, d + k).unwrap(),
            basis.psi(&a, d).unwrap(),
        ));
    }
    Outcome {
        pass: additivity <= 1e-12 && scale <= 1e-9,
        detail: format!(
            "1000 polynomials up to degree 18: additivity {additivity:.2e}, scale invariance {scale:.2e}"
        ),
    }
}

fn scaling_trend() -> Outcome {
    let start = Instant::now();
    let cfg = BenchConfig {
        depths: vec![4, 8, 12, 16],
        leaves: 64,
        reps: 7,
        samples: 200,
        seed: 0x5eed_0005,
        ..Default::default()
    };
    let rows = run_bench(&cfg).unwrap();
    for row in &rows {
        println!("    {}", summary_line(row));
    }
    let elapsed = start.elapsed();
    let speedups: Vec<String> = rows.iter().map(|r| format!("{:.2}", r.speedup())).collect();
    Outcome {
        pass: speedup_nondecreasing(&rows) && elapsed < Duration::from_secs(300),
        detail: format!(
            "speedup over quadratic reference by depth {:?}: [{}], {:.1?}",
            cfg.depths,
            speedups.join(", "),
            elapsed
        ),
    }
}

fn space_mode(corpus: &[(PreprocessedTree, Vec<Instance>)]) -> Outcome {
    let mut identical = 0;
    let mut runs = 0;
    let mut within_degree = 0;
    let mut within_depth = 0;
    let mut worst: Option<(usize, usize, usize)> = None;
    for (t, xs) in corpus {
        let basis = InterpolationBasis::new(t.max_degree()).unwrap();
        let mut peak = 0;
        for x in xs {
            let two = explain_with(t, x, &basis, Mode::TwoPass, &mut Workspace::new()).unwrap();
            let mut ws = Workspace::new();
            let fused = explain_with(t, x, &basis, Mode::Fused, &mut ws).unwrap();
            peak = peak.max(ws.peak_live());
            runs += 1;
            if two.phi.iter().zip(&fused.phi).all(|(a, b)| a.to_bits() == b.to_bits()) {
                identical += 1;
            }
        }
        if peak <= t.max_degree() + 1 {
            within_degree += 1;
        } else if worst.is_none_or(|(p, d, _)| peak * (d + 1) > p * (t.max_degree() + 1)) {
            worst = Some((peak, t.max_degree(), t.depth()));
        }
        if peak <= t.depth() + 1 {
            within_depth += 1;
        }
    }
    let worst = worst
        .map(|(p, d, h)| format!("; worst: {p} live with distinct-feature depth {d}, tree depth {h}"))
        .unwrap_or_default();
    Outcome {
        pass: identical == runs && within_degree == corpus.len(),
        detail: format!(
            "bit-identical {identical}/{runs}; peak <= distinct-feature depth + 1 on {within_degree}/{} trees \
             (<= tree depth + 1 on {within_depth}){worst}",
            corpus.len()
        ),
    }
}

fn main() {
    let corpus = corpus();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("worked example", Box::new(worked_example)),
        ("oracle equivalence", Box::new(|| oracle_equivalence(&corpus))),
        ("efficiency at depth 18", Box::new(efficiency_at_depth)),
        ("psi properties", Box::new(psi_properties)),
        ("scaling trend", Box::new(scaling_trend)),
        ("fused space mode", Box::new(|| space_mode(&corpus))),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        let status = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {} {name}: {status}: {}", k + 1, outcome.detail);
        if !outcome.pass {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
