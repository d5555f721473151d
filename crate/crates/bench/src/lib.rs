//! Inputs shared by the criterion benches.

use linear_treeshap::synth::{bench_tree, random_instance, rng};
use linear_treeshap::{Instance, InterpolationBasis, PreprocessedTree};

pub const LEAVES: usize = 64;
pub const FEATURES: usize = 32;

/// A fixed-seed tree of the given depth with its basis and `samples` instances.
pub struct Case {
    pub tree: PreprocessedTree,
    pub basis: InterpolationBasis,
    pub xs: Vec<Instance>,
}

impl Case {
    pub fn new(depth: usize, samples: usize) -> Self {
        let mut r = rng(depth as u64);
        let tree = bench_tree(depth, LEAVES, FEATURES, (0.2, 0.8), &mut r);
        let basis = InterpolationBasis::new(tree.max_degree()).expect("degree within range");
        let xs = (0..samples).map(|_| random_instance(FEATURES, &mut r)).collect();
        Self { tree, basis, xs }
    }
}
