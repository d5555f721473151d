//! Seeded random trees and instances for tests, checks and benchmarks.
//!
//! Thresholds and instance values are uniform in `[0, 1)`, so roughly half of
//! all split criteria are satisfied by a random instance.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tree_model::{Instance, NodeDoc, PreprocessedTree};

pub type SynthRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SynthRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone)]
pub struct RandomTreeConfig {
    pub num_features: usize,
    pub max_depth: usize,
    /// Chance that a non-root node above `max_depth` splits.
    pub split_prob: f64,
    /// Left weights are drawn uniformly from this open range.
    pub weight_range: (f64, f64),
}

impl Default for RandomTreeConfig {
    fn default() -> Self {
        Self {
            num_features: 5,
            max_depth: 6,
            split_prob: 0.7,
            weight_range: (0.2, 0.8),
        }
    }
}

/// Incrementally builds a node list with ids equal to insertion order.
#[derive(Default)]
struct Builder {
    nodes: Vec<NodeDoc>,
}

impl Builder {
    fn reserve(&mut self) -> usize {
        self.nodes.push(NodeDoc::Leaf { id: self.nodes.len() as i64, value: 0.0 });
        self.nodes.len() - 1
    }

    fn leaf(&mut self, id: usize, rng: &mut SynthRng) {
        self.nodes[id] = NodeDoc::Leaf {
            id: id as i64,
            value: rng.random_range(-1.0..1.0),
        };
    }

    fn split(
        &mut self,
        id: usize,
        feature: usize,
        weight_range: (f64, f64),
        rng: &mut SynthRng,
    ) -> (usize, usize) {
        let left = self.reserve();
        let right = self.reserve();
        let w = draw_weight(weight_range, rng);
        self.nodes[id] = NodeDoc::Split {
            id: id as i64,
            feature,
            threshold: rng.random(),
            left: left as i64,
            right: right as i64,
            left_weight: w,
            right_weight: 1.0 - w,
        };
        (left, right)
    }

    fn finish(self, num_features: usize) -> PreprocessedTree {
        PreprocessedTree::from_nodes(num_features, 0, &self.nodes).expect("generated tree is valid")
    }
}

fn draw_weight((lo, hi): (f64, f64), rng: &mut SynthRng) -> f64 {
    loop {
        let w = rng.random_range(lo..hi);
        if w > 0.0 && w < 1.0 && 1.0 - w > 0.0 {
            return w;
        }
    }
}

/// A random tree whose root always splits (when `max_depth > 0`) and whose
/// other nodes split with probability `split_prob` until `max_depth`.
pub fn random_tree(cfg: &RandomTreeConfig, rng: &mut SynthRng) -> PreprocessedTree {
    assert!(cfg.num_features > 0);
    let mut b = Builder::default();
    let root = b.reserve();
    let mut stack = vec![(root, 0usize)];
    while let Some((id, depth)) = stack.pop() {
        let splits = depth < cfg.max_depth && (depth == 0 || rng.random_bool(cfg.split_prob));
        if splits {
            let feature = rng.random_range(0..cfg.num_features);
            let (l, r) = b.split(id, feature, cfg.weight_range, rng);
            stack.push((r, depth + 1));
            stack.push((l, depth + 1));
        } else {
            b.leaf(id, rng);
        }
    }
    b.finish(cfg.num_features)
}

/// A tree from the oracle-agreement corpus: between 1 and `max_features`
/// features, depth between 1 and `max_depth`, left weights in `(0.05, 0.95)`.
pub fn corpus_tree(max_depth: usize, max_features: usize, rng: &mut SynthRng) -> PreprocessedTree {
    let cfg = RandomTreeConfig {
        num_features: rng.random_range(1..=max_features),
        max_depth: rng.random_range(1..=max_depth.max(1)),
        split_prob: 0.7,
        weight_range: (0.05, 0.95),
    };
    random_tree(&cfg, rng)
}

pub fn random_instance(num_features: usize, rng: &mut SynthRng) -> Instance {
    Instance::new((0..num_features).map(|_| rng.random()).collect()).expect("finite")
}

/// A random tree whose largest number of distinct features on one path is
/// exactly `degree`.
///
/// A spine of `degree` splits on fresh features guarantees the target. Off
/// the spine nodes split with probability `split_prob` up to `max_depth`,
/// drawing any feature while the path has fewer than `degree` distinct ones
/// and only features already on the path afterwards.
pub fn deep_tree(
    degree: usize,
    num_features: usize,
    max_depth: usize,
    split_prob: f64,
    weight_range: (f64, f64),
    rng: &mut SynthRng,
) -> PreprocessedTree {
    assert!(degree <= num_features && degree <= max_depth);
    let mut b = Builder::default();
    let root = b.reserve();
    // (node, depth, features on the path, still on the spine)
    let mut stack = vec![(root, 0usize, Vec::<usize>::new(), true)];
    while let Some((id, depth, path, spine)) = stack.pop() {
        let distinct = {
            let mut d = path.clone();
            d.sort_unstable();
            d.dedup();
            d
        };
        let feature = if spine && distinct.len() < degree {
            let fresh: Vec<usize> = (0..num_features).filter(|f| !distinct.contains(f)).collect();
            Some(*fresh.choose(rng).expect("enough features"))
        } else if !spine && depth < max_depth && rng.random_bool(split_prob) {
            if distinct.len() < degree {
                Some(rng.random_range(0..num_features))
            } else {
                Some(*distinct.choose(rng).expect("non-empty path"))
            }
        } else {
            None
        };
        match feature {
            Some(f) => {
                let (l, r) = b.split(id, f, weight_range, rng);
                let spine_left = rng.random_bool(0.5);
                let mut child_path = path.clone();
                child_path.push(f);
                stack.push((r, depth + 1, child_path.clone(), spine && !spine_left));
                stack.push((l, depth + 1, child_path, spine && spine_left));
            }
            None => b.leaf(id, rng),
        }
    }
    b.finish(num_features)
}

/// A tree of exactly `depth` levels and `min(leaves, 2^depth)` leaves, grown
/// by repeatedly splitting a random leaf among the deepest ones that can
/// still split. Features are uniform over `num_features`.
pub fn bench_tree(
    depth: usize,
    leaves: usize,
    num_features: usize,
    weight_range: (f64, f64),
    rng: &mut SynthRng,
) -> PreprocessedTree {
    let target = if depth >= usize::BITS as usize - 1 {
        leaves
    } else {
        leaves.min(1 << depth)
    }
    .max(1);
    let mut b = Builder::default();
    let root = b.reserve();
    let mut open: Vec<(usize, usize)> = vec![(root, 0)];
    let mut closed: Vec<usize> = Vec::new();
    while open.len() + closed.len() < target {
        let deepest = open.iter().map(|&(_, d)| d).max().expect("open leaf");
        let candidates: Vec<usize> = (0..open.len()).filter(|&k| open[k].1 == deepest).collect();
        let k = *candidates.choose(rng).expect("candidate");
        let (id, d) = open.swap_remove(k);
        let (l, r) = b.split(id, rng.random_range(0..num_features), weight_range, rng);
        for c in [l, r] {
            if d + 1 < depth {
                open.push((c, d + 1));
            } else {
                closed.push(c);
            }
        }
    }
    for (id, _) in open {
        b.leaf(id, rng);
    }
    for id in closed {
        b.leaf(id, rng);
    }
    b.finish(num_features)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_tree_respects_depth() {
        let mut r = rng(1);
        for _ in 0..50 {
            let cfg = RandomTreeConfig {
                max_depth: 4,
                ..Default::default()
            };
            let t = random_tree(&cfg, &mut r);
            assert!(t.depth() <= 4 && t.depth() >= 1);
        }
    }

    #[test]
    fn seeds_are_reproducible() {
        let cfg = RandomTreeConfig::default();
        let a = random_tree(&cfg, &mut rng(7)).to_doc();
        let b = random_tree(&cfg, &mut rng(7)).to_doc();
        assert_eq!(a, b);
    }

    #[test]
    fn deep_tree_hits_target_degree() {
        let mut r = rng(3);
        for _ in 0..5 {
            let t = deep_tree(18, 20, 22, 0.55, (0.2, 0.8), &mut r);
            assert_eq!(t.max_degree(), 18);
            assert!(t.depth() <= 22);
        }
    }

    #[test]
    fn bench_tree_shape() {
        let mut r = rng(5);
        for depth in [1, 4, 8, 16] {
            let t = bench_tree(depth, 64, 32, (0.2, 0.8), &mut r);
            assert_eq!(t.depth(), depth);
            assert_eq!(t.num_leaves(), 64usize.min(1 << depth));
        }
    }
}
