//! Slow, direct implementations used to cross-check the explainer.
//!
//! Nothing here shares code with [`crate::linear_shap`] beyond the tree
//! model: subset predictions are computed by plain recursion, polynomials are
//! dense coefficient vectors, and edge quantities are recomputed from the
//! root-to-node path every time they are needed.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::tree_model::{Ensemble, Instance, NodeKind, PreprocessedTree};

mod exact;

pub use exact::coefficient_reference;

/// Brute force enumerates `2^m` subsets; beyond this it is pointless.
pub const MAX_BRUTEFORCE_FEATURES: usize = 24;

/// Largest `n` in the exact binomial table; `C(64, 32)` still fits a `u64`.
const MAX_BINOMIAL: usize = 64;

/// A set of observed features as a bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ActiveSet(u32);

impl ActiveSet {
    pub const EMPTY: ActiveSet = ActiveSet(0);

    pub fn from_bits(bits: u32) -> Self {
        Self(bits)
    }

    pub fn all(m: usize) -> Self {
        assert!(m <= MAX_BRUTEFORCE_FEATURES);
        Self(((1u64 << m) - 1) as u32)
    }

    pub fn from_features(features: &[usize]) -> Self {
        let mut s = Self::EMPTY;
        for &f in features {
            s = s.with(f);
        }
        s
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn contains(self, feature: usize) -> bool {
        feature < 32 && self.0 & (1 << feature) != 0
    }

    pub fn with(self, feature: usize) -> Self {
        assert!(feature < MAX_BRUTEFORCE_FEATURES, "feature {feature} outside bit mask");
        Self(self.0 | (1 << feature))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

/// Prediction when only the features in `s` are known: a split on a missing
/// feature returns the weighted average of both children.
pub fn predict_with_active_set(tree: &PreprocessedTree, x: &[f64], s: ActiveSet) -> f64 {
    fn go(tree: &PreprocessedTree, v: usize, x: &[f64], s: ActiveSet) -> f64 {
        match tree.node(v).kind {
            NodeKind::Leaf { value } => value,
            NodeKind::Split {
                feature,
                threshold,
                left,
                right,
                left_weight,
                right_weight,
            } => {
                if s.contains(feature) {
                    if x[feature] <= threshold {
                        go(tree, left, x, s)
                    } else {
                        go(tree, right, x, s)
                    }
                } else {
                    left_weight * go(tree, left, x, s) + right_weight * go(tree, right, x, s)
                }
            }
        }
    }
    go(tree, tree.root(), x, s)
}

fn binomial_table() -> &'static [Vec<u64>] {
    static TABLE: OnceLock<Vec<Vec<u64>>> = OnceLock::new();
    TABLE.get_or_init(build_binomial_table)
}

fn build_binomial_table() -> Vec<Vec<u64>> {
    let mut t = vec![vec![0u64; MAX_BINOMIAL + 1]; MAX_BINOMIAL + 1];
    for n in 0..=MAX_BINOMIAL {
        t[n][0] = 1;
        for k in 1..=n {
            t[n][k] = t[n - 1][k - 1] + if k < n { t[n - 1][k] } else { 0 };
        }
    }
    t
}

fn check_bruteforce_size(m: usize) -> Result<()> {
    if m > MAX_BRUTEFORCE_FEATURES {
        return Err(Error::TooManyFeatures {
            m,
            max: MAX_BRUTEFORCE_FEATURES,
        });
    }
    Ok(())
}

/// Shapley values of every feature by enumerating all subsets, for any
/// additive model given as a subset-value function.
fn shapley_from_values(m: usize, f: impl Fn(ActiveSet) -> f64) -> Vec<f64> {
    if m == 0 {
        return Vec::new();
    }
    let values: Vec<f64> = (0..1u32 << m).map(|b| f(ActiveSet(b))).collect();
    let binom = binomial_table();
    let mut phi = vec![0.0; m];
    for (i, p) in phi.iter_mut().enumerate() {
        let bit = 1u32 << i;
        let mut acc = 0.0;
        for b in 0..1u32 << m {
            if b & bit != 0 {
                continue;
            }
            let size = b.count_ones() as usize;
            let weight = 1.0 / (m as f64 * binom[m - 1][size] as f64);
            acc += weight * (values[(b | bit) as usize] - values[b as usize]);
        }
        *p = acc;
    }
    phi
}

/// Shapley value of feature `i` by direct enumeration over subsets.
pub fn shapley_bruteforce(tree: &PreprocessedTree, x: &Instance, i: usize) -> Result<f64> {
    let phi = shapley_bruteforce_all(tree, x)?;
    phi.get(i).copied().ok_or(Error::FeatureOutOfRange {
        node: -1,
        feature: i,
        num_features: tree.num_features(),
    })
}

pub fn shapley_bruteforce_all(tree: &PreprocessedTree, x: &Instance) -> Result<Vec<f64>> {
    let m = tree.num_features();
    check_bruteforce_size(m)?;
    x.check_len(m)?;
    Ok(shapley_from_values(m, |s| {
        predict_with_active_set(tree, x.values(), s)
    }))
}

pub fn shapley_bruteforce_ensemble(ensemble: &Ensemble, x: &Instance) -> Result<Vec<f64>> {
    let m = ensemble.num_features;
    check_bruteforce_size(m)?;
    x.check_len(m)?;
    Ok(shapley_from_values(m, |s| {
        ensemble.bias
            + ensemble
                .trees
                .iter()
                .map(|t| predict_with_active_set(t, x.values(), s))
                .sum::<f64>()
    }))
}

/// One root-to-leaf path of a tree seen as a model of its own.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRule {
    pub leaf: usize,
    /// Factor applied to the rule's prediction when feature `i` becomes known.
    pub q: Vec<f64>,
    /// Prediction with no known features: leaf value times the path weights.
    pub r_empty: f64,
    /// Features with at least one edge on the path, ascending.
    pub features: Vec<usize>,
}

impl DecisionRule {
    pub fn predict_with_active_set(&self, s: ActiveSet) -> f64 {
        self.features
            .iter()
            .filter(|&&i| s.contains(i))
            .fold(self.r_empty, |acc, &i| acc * self.q[i])
    }
}

/// Edge into `child` taken from `parent`, as seen from the rule's side.
struct PathEdge {
    feature: usize,
    weight: f64,
    satisfied: bool,
}

fn path_edges(tree: &PreprocessedTree, v: usize, x: &[f64]) -> Vec<PathEdge> {
    let mut edges = Vec::new();
    let mut u = v;
    while let Some(parent) = tree.info(u).parent {
        let NodeKind::Split {
            feature,
            threshold,
            left,
            left_weight,
            right_weight,
            ..
        } = tree.node(parent).kind
        else {
            unreachable!("parent is a split");
        };
        let is_left = u == left;
        edges.push(PathEdge {
            feature,
            weight: if is_left { left_weight } else { right_weight },
            satisfied: (x[feature] <= threshold) == is_left,
        });
        u = parent;
    }
    edges.reverse();
    edges
}

fn leaves(tree: &PreprocessedTree) -> Vec<usize> {
    (0..tree.len()).filter(|&v| tree.node(v).is_leaf()).collect()
}

/// Splits the tree into one decision rule per leaf.
pub fn linearize(tree: &PreprocessedTree, x: &Instance) -> Vec<DecisionRule> {
    let m = tree.num_features();
    leaves(tree)
        .into_iter()
        .map(|leaf| {
            let NodeKind::Leaf { value } = tree.node(leaf).kind else {
                unreachable!()
            };
            let mut q = vec![1.0; m];
            let mut violated = vec![false; m];
            let mut used = vec![false; m];
            let mut r_empty = value;
            for e in path_edges(tree, leaf, x.values()) {
                used[e.feature] = true;
                r_empty *= e.weight;
                q[e.feature] *= 1.0 / e.weight;
                violated[e.feature] |= !e.satisfied;
            }
            for i in 0..m {
                if violated[i] {
                    q[i] = 0.0;
                }
            }
            DecisionRule {
                leaf,
                q,
                r_empty,
                features: (0..m).filter(|&i| used[i]).collect(),
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Dense coefficient polynomials, lowest degree first.
// ---------------------------------------------------------------------------

/// `a (y + q)`.
pub fn coeff_mul_linear(a: &[f64], q: f64) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + 1];
    for (k, &c) in a.iter().enumerate() {
        out[k] += q * c;
        out[k + 1] += c;
    }
    out
}

/// Quotient of `a / (y + q)` when the division is known to be exact.
///
/// Eliminates from whichever end keeps the recurrence contracting: from the
/// top when `|q| <= 1`, from the bottom otherwise.
pub fn coeff_exact_div_linear(a: &[f64], q: f64) -> Vec<f64> {
    let n = a.len() - 1;
    let mut b = vec![0.0; n];
    if n == 0 {
        return b;
    }
    if q.abs() <= 1.0 {
        b[n - 1] = a[n];
        for k in (1..n).rev() {
            b[k - 1] = a[k] - q * b[k];
        }
    } else {
        b[0] = a[0] / q;
        for k in 1..n {
            b[k] = (a[k] - b[k - 1]) / q;
        }
    }
    b
}

/// Synthetic division by `(y + p)` from the top; returns (quotient, remainder).
pub fn coeff_floor_div_linear(a: &[f64], p: f64) -> (Vec<f64>, f64) {
    let n = a.len() - 1;
    if n == 0 {
        return (vec![0.0], a[0]);
    }
    let mut b = vec![0.0; n];
    b[n - 1] = a[n];
    for k in (1..n).rev() {
        b[k - 1] = a[k] - p * b[k];
    }
    (b.clone(), a[0] - p * b[0])
}

/// `a (1 + y)^k`.
pub fn coeff_lift(a: &[f64], k: usize) -> Vec<f64> {
    (0..k).fold(a.to_vec(), |acc, _| coeff_mul_linear(&acc, 1.0))
}

/// `psi_d(a) = sum_k a_k / C(d, k) / (d + 1)` for `deg(a) <= d`.
pub fn coeff_psi(a: &[f64], d: usize) -> f64 {
    assert!(d <= MAX_BINOMIAL, "degree {d} beyond binomial table");
    let binom = binomial_table();
    let mut acc = 0.0;
    for (k, &c) in a.iter().enumerate() {
        if k > d {
            assert!(c == 0.0, "polynomial degree exceeds {d}");
            continue;
        }
        acc += c / binom[d][k] as f64;
    }
    acc / (d + 1) as f64
}

/// `G = r_empty * prod_{j in F} (q_j + y)`.
pub fn rule_summary_polynomial(rule: &DecisionRule) -> Vec<f64> {
    rule.features
        .iter()
        .fold(vec![rule.r_empty], |acc, &j| coeff_mul_linear(&acc, rule.q[j]))
}

/// Shapley value of feature `i` for a single rule:
/// `(q_i - 1) psi_{d-1}(G / (q_i + y))` with `d = |F|`.
pub fn shapley_per_rule(rule: &DecisionRule, i: usize) -> f64 {
    if !rule.features.contains(&i) {
        return 0.0;
    }
    per_rule_term(rule, &rule_summary_polynomial(rule), i)
}

fn per_rule_term(rule: &DecisionRule, g: &[f64], i: usize) -> f64 {
    let d = rule.features.len();
    (rule.q[i] - 1.0) * coeff_psi(&coeff_exact_div_linear(g, rule.q[i]), d - 1)
}

/// Per-rule Shapley values summed over every leaf; `O(L D^2)`.
pub fn shapley_per_rule_all(tree: &PreprocessedTree, x: &Instance) -> Result<Vec<f64>> {
    x.check_len(tree.num_features())?;
    let mut phi = vec![0.0; tree.num_features()];
    for rule in linearize(tree, x) {
        let g = rule_summary_polynomial(&rule);
        for &i in &rule.features {
            phi[i] += per_rule_term(&rule, &g, i);
        }
    }
    Ok(phi)
}

/// Applies a per-tree oracle to every tree and adds the results.
pub fn ensemble_sum(
    ensemble: &Ensemble,
    x: &Instance,
    per_tree: impl Fn(&PreprocessedTree, &Instance) -> Result<Vec<f64>>,
) -> Result<Vec<f64>> {
    x.check_len(ensemble.num_features)?;
    let mut phi = vec![0.0; ensemble.num_features];
    for t in &ensemble.trees {
        for (a, b) in phi.iter_mut().zip(per_tree(t, x)?) {
            *a += b;
        }
    }
    Ok(phi)
}
