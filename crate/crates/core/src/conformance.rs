//! Agreement check between the explainer and the three oracles.

use crate::error::Result;
use crate::interp_poly::InterpolationBasis;
use crate::linear_shap::explain_ensemble;
use crate::oracle::{
    ensemble_sum, shapley_bruteforce_ensemble, shapley_per_rule_all, coefficient_reference,
};
use crate::synth::{corpus_tree, random_instance, rng, SynthRng};
use rand::Rng;

use crate::tree_model::{Ensemble, Instance, NodeKind};

/// Names of the four implementations, in the order used by [`all_phis`].
pub const IMPLEMENTATIONS: [&str; 4] = [
    "linear_shap",
    "bruteforce",
    "per_rule",
    "coefficient_reference",
];

/// `|a - b| / (1 + max(|a|, |b|))`: relative for large values, absolute near 0.
pub fn deviation(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

pub fn max_deviation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| deviation(x, y))
        .fold(0.0, |m, d| if d.is_nan() { f64::INFINITY } else { m.max(d) })
}

/// Shapley values from every implementation, indexed like [`IMPLEMENTATIONS`].
pub fn all_phis(ensemble: &Ensemble, x: &Instance, basis: &InterpolationBasis) -> Result<[Vec<f64>; 4]> {
    Ok([
        explain_ensemble(ensemble, x, basis)?.phi,
        shapley_bruteforce_ensemble(ensemble, x)?,
        ensemble_sum(ensemble, x, shapley_per_rule_all)?,
        ensemble_sum(ensemble, x, coefficient_reference)?,
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub models: usize,
    pub instances: usize,
    /// Largest deviation between any two implementations on any feature.
    pub max_deviation: f64,
    /// The pair of implementations attaining it.
    pub worst_pair: (&'static str, &'static str),
    /// Largest `|sum(phi) + base - prediction|` seen from the explainer.
    pub max_efficiency_gap: f64,
}

impl CheckReport {
    fn new() -> Self {
        Self {
            models: 0,
            instances: 0,
            max_deviation: 0.0,
            worst_pair: (IMPLEMENTATIONS[0], IMPLEMENTATIONS[1]),
            max_efficiency_gap: 0.0,
        }
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_deviation <= tolerance
    }

    fn record(&mut self, phis: &[Vec<f64>; 4]) {
        for a in 0..4 {
            for b in a + 1..4 {
                let d = max_deviation(&phis[a], &phis[b]);
                if d > self.max_deviation {
                    self.max_deviation = d;
                    self.worst_pair = (IMPLEMENTATIONS[a], IMPLEMENTATIONS[b]);
                }
            }
        }
    }
}

/// Runs all four implementations on every instance.
pub fn check_model(ensemble: &Ensemble, instances: &[Instance]) -> Result<CheckReport> {
    let basis = InterpolationBasis::new(ensemble.max_degree())?;
    let mut report = CheckReport::new();
    report.models = 1;
    for x in instances {
        let phis = all_phis(ensemble, x, &basis)?;
        let a = explain_ensemble(ensemble, x, &basis)?;
        report.max_efficiency_gap = report.max_efficiency_gap.max(a.efficiency_gap());
        report.record(&phis);
        report.instances += 1;
    }
    Ok(report)
}

/// Random instances for a model with `m` features, uniform in `[0, 1)`.
pub fn random_instances(m: usize, count: usize, rng: &mut SynthRng) -> Vec<Instance> {
    (0..count).map(|_| random_instance(m, rng)).collect()
}

/// Random instances that land in every gap between a feature's thresholds
/// with equal probability, so both branches of each split are exercised
/// whatever the model's value ranges are.
pub fn model_instances(ensemble: &Ensemble, count: usize, rng: &mut SynthRng) -> Vec<Instance> {
    let mut cuts = vec![Vec::new(); ensemble.num_features];
    for tree in &ensemble.trees {
        for node in tree.nodes() {
            if let NodeKind::Split { feature, threshold, .. } = node.kind {
                cuts[feature].push(threshold);
            }
        }
    }
    for c in &mut cuts {
        c.sort_by(f64::total_cmp);
        c.dedup();
    }
    (0..count)
        .map(|_| {
            let values = cuts
                .iter()
                .map(|c| {
                    if c.is_empty() {
                        return rng.random();
                    }
                    let k = rng.random_range(0..=c.len());
                    let u: f64 = rng.random();
                    match k {
                        0 => c[0] - 1.0 - u,
                        k if k == c.len() => c[k - 1] + 1.0 + u,
                        k => c[k - 1] + (c[k] - c[k - 1]) * u,
                    }
                })
                .collect();
            Instance::new(values).expect("finite thresholds give finite values")
        })
        .collect()
}

/// Checks `trees` random single-tree models from the oracle corpus.
pub fn check_random(
    trees: usize,
    max_depth: usize,
    max_features: usize,
    instances_per_tree: usize,
    seed: u64,
) -> Result<CheckReport> {
    let mut r = rng(seed);
    let mut total = CheckReport::new();
    for _ in 0..trees {
        let tree = corpus_tree(max_depth, max_features, &mut r);
        let xs = random_instances(tree.num_features(), instances_per_tree, &mut r);
        let report = check_model(&Ensemble::single(tree), &xs)?;
        total.models += 1;
        total.instances += report.instances;
        total.max_efficiency_gap = total.max_efficiency_gap.max(report.max_efficiency_gap);
        if report.max_deviation > total.max_deviation {
            total.max_deviation = report.max_deviation;
            total.worst_pair = report.worst_pair;
        }
    }
    Ok(total)
}
