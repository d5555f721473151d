//! Decision-tree models: the JSON model schema, validation, and the per-node
//! preprocessing the explainer relies on.
//!
//! A validated tree is stored as a dense arena in preorder, so the root is
//! always node `0` and every parent precedes its children. Edges are not
//! stored separately: the edge into node `v` is described by `v`'s
//! [`NodeInfo`] (its weight, the feature its parent splits on, and whether `v`
//! is the left or right child).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `left_weight + right_weight == 1`.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Bounds applied to 0/1 weights when parsing leniently.
pub const LENIENT_WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        left_weight: f64,
        right_weight: f64,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeNode {
    pub id: usize,
    pub kind: NodeKind,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }

    pub fn children(&self) -> Option<(usize, usize)> {
        match self.kind {
            NodeKind::Split { left, right, .. } => Some((left, right)),
            NodeKind::Leaf { .. } => None,
        }
    }
}

/// Facts about a node and the edge entering it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeInfo {
    pub parent: Option<usize>,
    /// Feature tested by the parent, i.e. the label of the in-edge.
    pub in_feature: Option<usize>,
    /// Conditional probability of the in-edge; `1.0` for the root.
    pub in_weight: f64,
    pub is_left: bool,
    /// Head of the closest ancestor edge carrying the same feature.
    pub same_feature_ancestor: Option<usize>,
    /// Distinct features on the root-to-node path.
    pub degree: usize,
    /// Degree of the node's summary polynomial: the largest leaf degree below it.
    pub subtree_degree: usize,
    pub depth: usize,
}

/// A validated tree with its traversal-ready annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessedTree {
    nodes: Vec<TreeNode>,
    info: Vec<NodeInfo>,
    right_first: Vec<bool>,
    num_features: usize,
    max_degree: usize,
    depth: usize,
    expected_value: f64,
}

impl PreprocessedTree {
    pub fn root(&self) -> usize {
        0
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, v: usize) -> &TreeNode {
        &self.nodes[v]
    }

    pub fn info(&self, v: usize) -> &NodeInfo {
        &self.info[v]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    /// Largest number of distinct features on any root-to-leaf path.
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    /// Prediction with every feature missing: the sum over leaves of the
    /// leaf value times the product of edge weights on its path.
    pub fn expected_value(&self) -> f64 {
        self.expected_value
    }

    /// Children of `v` in the order the explainer visits them.
    ///
    /// The child whose subtree needs more scratch polynomials goes first,
    /// which keeps the single-traversal explainer's working set small.
    pub fn visit_order(&self, v: usize) -> Option<(usize, usize)> {
        self.nodes[v].children().map(|(l, r)| {
            if self.right_first[v] {
                (r, l)
            } else {
                (l, r)
            }
        })
    }

    /// Whether `x` satisfies the split criterion of the edge entering `v`.
    /// Left edges hold iff `x[feature] <= threshold`; right edges hold otherwise.
    pub fn edge_satisfied(&self, v: usize, x: &[f64]) -> bool {
        let info = &self.info[v];
        let parent = info.parent.expect("root has no in-edge");
        match self.nodes[parent].kind {
            NodeKind::Split {
                feature, threshold, ..
            } => (x[feature] <= threshold) == info.is_left,
            NodeKind::Leaf { .. } => unreachable!("leaf cannot be a parent"),
        }
    }

    /// Standard prediction: follow the split comparisons to a single leaf.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut v = 0;
        loop {
            match self.nodes[v].kind {
                NodeKind::Leaf { value } => return value,
                NodeKind::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => v = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Builds and validates a tree from nodes with arbitrary distinct ids.
    pub fn from_nodes(num_features: usize, root: i64, nodes: &[NodeDoc]) -> Result<Self> {
        Self::from_nodes_with(num_features, root, nodes, &ParseOptions::default())
    }

    pub fn from_nodes_with(
        num_features: usize,
        root: i64,
        nodes: &[NodeDoc],
        options: &ParseOptions,
    ) -> Result<Self> {
        let dense = validate_structure(num_features, root, nodes, options)?;
        Ok(preprocess(num_features, dense))
    }

    /// Re-expresses the tree in the model-file node schema (dense ids).
    pub fn to_doc(&self) -> TreeDoc {
        let nodes = self
            .nodes
            .iter()
            .map(|n| match n.kind {
                NodeKind::Leaf { value } => NodeDoc::Leaf {
                    id: n.id as i64,
                    value,
                },
                NodeKind::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    left_weight,
                    right_weight,
                } => NodeDoc::Split {
                    id: n.id as i64,
                    feature,
                    threshold,
                    left: left as i64,
                    right: right as i64,
                    left_weight,
                    right_weight,
                },
            })
            .collect();
        TreeDoc { root: 0, nodes }
    }
}

/// An additive ensemble: `bias + sum of tree predictions`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub trees: Vec<PreprocessedTree>,
    pub num_features: usize,
    pub feature_names: Option<Vec<String>>,
    pub bias: f64,
}

impl Ensemble {
    pub fn new(num_features: usize, trees: Vec<PreprocessedTree>) -> Result<Self> {
        if let Some(t) = trees.iter().find(|t| t.num_features != num_features) {
            return Err(Error::Schema(format!(
                "tree declares {} features, ensemble has {num_features}",
                t.num_features
            )));
        }
        Ok(Self {
            trees,
            num_features,
            feature_names: None,
            bias: 0.0,
        })
    }

    pub fn single(tree: PreprocessedTree) -> Self {
        Self {
            num_features: tree.num_features,
            trees: vec![tree],
            feature_names: None,
            bias: 0.0,
        }
    }

    pub fn with_bias(mut self, bias: f64) -> Self {
        self.bias = bias;
        self
    }

    pub fn max_degree(&self) -> usize {
        self.trees.iter().map(|t| t.max_degree).max().unwrap_or(0)
    }

    pub fn predict(&self, x: &Instance) -> Result<f64> {
        x.check_len(self.num_features)?;
        Ok(self.bias + self.trees.iter().map(|t| t.predict(x.values())).sum::<f64>())
    }

    pub fn expected_value(&self) -> f64 {
        self.bias + self.trees.iter().map(|t| t.expected_value).sum::<f64>()
    }

    pub fn to_doc(&self) -> ModelDoc {
        ModelDoc {
            num_features: self.num_features,
            bias: self.bias,
            feature_names: self.feature_names.clone(),
            trees: self.trees.iter().map(|t| t.to_doc()).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("model document serializes")
    }
}

/// A fully specified feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance(Vec<f64>);

impl Instance {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((feature, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { feature, value });
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check_len(&self, expected: usize) -> Result<()> {
        if self.0.len() == expected {
            Ok(())
        } else {
            Err(Error::InstanceLength {
                expected,
                got: self.0.len(),
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Model file schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDoc {
    pub num_features: usize,
    #[serde(default)]
    pub bias: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_names: Option<Vec<String>>,
    pub trees: Vec<TreeDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDoc {
    pub root: i64,
    pub nodes: Vec<NodeDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NodeDoc {
    Split {
        id: i64,
        feature: usize,
        threshold: f64,
        left: i64,
        right: i64,
        left_weight: f64,
        right_weight: f64,
    },
    Leaf {
        id: i64,
        value: f64,
    },
}

impl NodeDoc {
    pub fn id(&self) -> i64 {
        match *self {
            NodeDoc::Split { id, .. } | NodeDoc::Leaf { id, .. } => id,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    /// Clamp split weights of exactly 0 or 1 into `[1e-12, 1 - 1e-12]`
    /// instead of rejecting the model.
    pub lenient_weights: bool,
}

pub fn parse_model(document: &str) -> Result<Ensemble> {
    parse_model_with(document, &ParseOptions::default())
}

pub fn parse_model_with(document: &str, options: &ParseOptions) -> Result<Ensemble> {
    let doc: ModelDoc =
        serde_json::from_str(document).map_err(|e| Error::Schema(e.to_string()))?;
    ensemble_from_doc(&doc, options)
}

pub fn ensemble_from_doc(doc: &ModelDoc, options: &ParseOptions) -> Result<Ensemble> {
    if let Some(names) = &doc.feature_names {
        if names.len() != doc.num_features {
            return Err(Error::Schema(format!(
                "feature_names has {} entries, num_features is {}",
                names.len(),
                doc.num_features
            )));
        }
    }
    if !doc.bias.is_finite() {
        return Err(Error::Schema("bias must be finite".into()));
    }
    let trees = doc
        .trees
        .iter()
        .enumerate()
        .map(|(k, t)| {
            PreprocessedTree::from_nodes_with(doc.num_features, t.root, &t.nodes, options).map_err(
                |e| match e {
                    Error::Structure(msg) => Error::Structure(format!("tree {k}: {msg}")),
                    other => other,
                },
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble {
        trees,
        num_features: doc.num_features,
        feature_names: doc.feature_names.clone(),
        bias: doc.bias,
    })
}

fn check_weights(id: i64, left: f64, right: f64, options: &ParseOptions) -> Result<(f64, f64)> {
    let err = || Error::Weight {
        node: id,
        left,
        right,
    };
    if !left.is_finite() || !right.is_finite() || (left + right - 1.0).abs() > WEIGHT_SUM_TOLERANCE
    {
        return Err(err());
    }
    let open = |w: f64| w > 0.0 && w < 1.0;
    if open(left) && open(right) {
        return Ok((left, right));
    }
    let closed = |w: f64| (0.0..=1.0).contains(&w);
    if options.lenient_weights && closed(left) && closed(right) {
        let clamp = |w: f64| w.clamp(LENIENT_WEIGHT_FLOOR, 1.0 - LENIENT_WEIGHT_FLOOR);
        log::warn!("node {id}: clamping degenerate split weights ({left}, {right})");
        return Ok((clamp(left), clamp(right)));
    }
    Err(err())
}

/// Checks every node and structural invariant, then relabels nodes densely in
/// preorder starting from the root.
fn validate_structure(
    num_features: usize,
    root: i64,
    nodes: &[NodeDoc],
    options: &ParseOptions,
) -> Result<Vec<TreeNode>> {
    let mut index: HashMap<i64, usize> = HashMap::with_capacity(nodes.len());
    for (k, n) in nodes.iter().enumerate() {
        if index.insert(n.id(), k).is_some() {
            return Err(Error::Structure(format!("duplicate node id {}", n.id())));
        }
    }
    let lookup = |id: i64, from: i64| {
        index
            .get(&id)
            .copied()
            .ok_or_else(|| Error::Structure(format!("node {from} points to missing node {id}")))
    };
    let root_pos = index
        .get(&root)
        .copied()
        .ok_or_else(|| Error::Structure(format!("root id {root} not among nodes")))?;

    let mut parent_count = vec![0usize; nodes.len()];
    for n in nodes {
        if let NodeDoc::Split {
            id,
            feature,
            threshold,
            left,
            right,
            left_weight,
            right_weight,
        } = *n
        {
            if feature >= num_features {
                return Err(Error::FeatureOutOfRange {
                    node: id,
                    feature,
                    num_features,
                });
            }
            if !threshold.is_finite() {
                return Err(Error::Schema(format!("node {id}: threshold must be finite")));
            }
            check_weights(id, left_weight, right_weight, options)?;
            if left == id || right == id {
                return Err(Error::Structure(format!("node {id} is its own child")));
            }
            if left == right {
                return Err(Error::Structure(format!(
                    "node {id} has both children pointing to {left}"
                )));
            }
            parent_count[lookup(left, id)?] += 1;
            parent_count[lookup(right, id)?] += 1;
        } else if let NodeDoc::Leaf { id, value } = *n {
            if !value.is_finite() {
                return Err(Error::Schema(format!("node {id}: leaf value must be finite")));
            }
        }
    }
    if parent_count[root_pos] != 0 {
        return Err(Error::Structure(format!("root {root} has a parent (cycle)")));
    }
    if let Some(k) = (0..nodes.len()).find(|&k| parent_count[k] > 1) {
        return Err(Error::Structure(format!(
            "node {} has more than one parent",
            nodes[k].id()
        )));
    }

    // Every node now has at most one parent and the root none, so a walk from
    // the root is a tree walk; anything it misses is unreachable.
    let mut dense = Vec::with_capacity(nodes.len());
    let mut new_id = vec![usize::MAX; nodes.len()];
    let mut stack = vec![root_pos];
    while let Some(k) = stack.pop() {
        new_id[k] = dense.len();
        dense.push(k);
        if let NodeDoc::Split { left, right, .. } = nodes[k] {
            stack.push(index[&right]);
            stack.push(index[&left]);
        }
    }
    if dense.len() != nodes.len() {
        let orphan = (0..nodes.len()).find(|&k| new_id[k] == usize::MAX).unwrap();
        return Err(Error::Structure(format!(
            "node {} is unreachable from the root",
            nodes[orphan].id()
        )));
    }

    dense
        .iter()
        .enumerate()
        .map(|(new, &k)| {
            let kind = match nodes[k] {
                NodeDoc::Leaf { value, .. } => NodeKind::Leaf { value },
                NodeDoc::Split {
                    id,
                    feature,
                    threshold,
                    left,
                    right,
                    left_weight,
                    right_weight,
                } => {
                    let (left_weight, right_weight) =
                        check_weights(id, left_weight, right_weight, options)?;
                    NodeKind::Split {
                        feature,
                        threshold,
                        left: new_id[index[&left]],
                        right: new_id[index[&right]],
                        left_weight,
                        right_weight,
                    }
                }
            };
            Ok(TreeNode { id: new, kind })
        })
        .collect()
}

/// Fills parent, in-edge, same-feature-ancestor and degree annotations in one
/// root-down pass that keeps, per feature, the deepest ancestor whose in-edge
/// carries it.
fn preprocess(num_features: usize, nodes: Vec<TreeNode>) -> PreprocessedTree {
    let n = nodes.len();
    let mut info = vec![
        NodeInfo {
            parent: None,
            in_feature: None,
            in_weight: 1.0,
            is_left: false,
            same_feature_ancestor: None,
            degree: 0,
            subtree_degree: 0,
            depth: 0,
        };
        n
    ];
    let mut last_seen: Vec<Option<usize>> = vec![None; num_features];
    let mut path_weight = vec![1.0f64; n];

    // Explicit stack of (node, entering): entering pushes the feature's
    // ancestor, leaving restores it.
    let mut stack: Vec<(usize, bool)> = vec![(0, true)];
    let mut saved: Vec<Option<usize>> = vec![None; n];
    while let Some((v, entering)) = stack.pop() {
        if !entering {
            if let Some(f) = info[v].in_feature {
                last_seen[f] = saved[v];
            }
            continue;
        }
        if let Some(f) = info[v].in_feature {
            saved[v] = last_seen[f];
            info[v].same_feature_ancestor = last_seen[f];
            let parent = info[v].parent.unwrap();
            info[v].degree = info[parent].degree + usize::from(last_seen[f].is_none());
            last_seen[f] = Some(v);
        }
        stack.push((v, false));
        if let NodeKind::Split {
            feature,
            left,
            right,
            left_weight,
            right_weight,
            ..
        } = nodes[v].kind
        {
            for (child, w, is_left) in [(right, right_weight, false), (left, left_weight, true)] {
                info[child].parent = Some(v);
                info[child].in_feature = Some(feature);
                info[child].in_weight = w;
                info[child].is_left = is_left;
                info[child].depth = info[v].depth + 1;
                path_weight[child] = path_weight[v] * w;
                stack.push((child, true));
            }
        }
    }

    // Children follow parents in preorder, so a reverse sweep is bottom-up.
    let mut need = vec![0usize; n];
    let mut right_first = vec![false; n];
    let mut expected_value = 0.0;
    for v in (0..n).rev() {
        match nodes[v].kind {
            NodeKind::Leaf { .. } => info[v].subtree_degree = info[v].degree,
            NodeKind::Split { left, right, .. } => {
                info[v].subtree_degree = info[left].subtree_degree.max(info[right].subtree_degree);
                // A leaf visited first opens one buffer; visited second it is
                // folded into its sibling's buffer for free.
                let first = |c: usize| if nodes[c].is_leaf() { 1 } else { need[c] };
                let second = |c: usize| if nodes[c].is_leaf() { 0 } else { need[c] };
                let left_cost = first(left).max(1 + second(right));
                let right_cost = first(right).max(1 + second(left));
                right_first[v] = right_cost < left_cost;
                need[v] = left_cost.min(right_cost);
            }
        }
    }
    for v in 0..n {
        if let NodeKind::Leaf { value } = nodes[v].kind {
            expected_value += value * path_weight[v];
        }
    }

    let max_degree = info.iter().map(|i| i.degree).max().unwrap_or(0);
    let depth = info.iter().map(|i| i.depth).max().unwrap_or(0);
    PreprocessedTree {
        nodes,
        info,
        right_first,
        num_features,
        max_degree,
        depth,
        expected_value,
    }
}
