//! Exact Shapley values for a decision tree in `O(L D)` per instance.
//!
//! For every edge `e` with feature `i` the explainer needs
//!
//! ```text
//! (p_e - 1) psi(G_h(e) / (y + p_e)) - (p_up - 1) psi(G_h(e) (1 + y)^{d_up - d_e} / (y + p_up))
//! ```
//!
//! where `G_u` is the summary polynomial of node `u`, `p_e` is the product of
//! `1 / w` over the `i`-edges down to `e` (or `0` once `x` fails one of them),
//! and `up` is the closest ancestor edge on the same feature (`p = 1` when
//! there is none, which zeroes the second term). Summed over all edges the
//! non-final terms of each feature telescope away.
//!
//! Two traversals are provided. [`Mode::TwoPass`] follows the textbook shape:
//! one top-down pass stores a summary polynomial for every node, a bottom-up
//! pass consumes them. [`Mode::Fused`] does both in a single traversal and
//! only keeps the polynomials of the current path alive. The two modes
//! execute the same floating-point operations in the same order, so their
//! results are bit-identical.
//!
//! Both modes share one path polynomial `C` that is updated in place on the
//! way down and restored by the inverse operations on the way up, and both
//! visit children in [`PreprocessedTree::visit_order`].

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interp_poly::{InterpolationBasis, ValuePoly};
use crate::tree_model::{Ensemble, Instance, NodeKind, PreprocessedTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    TwoPass,
    #[default]
    Fused,
}

/// Shapley values for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Attribution {
    pub phi: Vec<f64>,
    /// Prediction with every feature missing.
    pub base_value: f64,
    pub prediction: f64,
}

impl Attribution {
    /// `|sum(phi) + base_value - prediction|`; zero up to rounding.
    pub fn efficiency_gap(&self) -> f64 {
        (self.phi.iter().sum::<f64>() + self.base_value - self.prediction).abs()
    }
}

/// Scratch polynomial buffers for one explanation worker.
///
/// Tracks how many buffers are live at once so the fused traversal's working
/// set can be checked.
#[derive(Debug, Default)]
pub struct Workspace {
    free: Vec<Vec<f64>>,
    live: usize,
    peak: usize,
    taken: usize,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }

    fn take(&mut self, len: usize) -> Vec<f64> {
        self.live += 1;
        self.taken += 1;
        self.peak = self.peak.max(self.live);
        let mut v = self.free.pop().unwrap_or_default();
        v.clear();
        v.resize(len, 0.0);
        v
    }

    fn give(&mut self, v: Vec<f64>) {
        self.live -= 1;
        self.free.push(v);
    }

    /// Most polynomials alive at once since the last [`Workspace::reset_stats`].
    pub fn peak_live(&self) -> usize {
        self.peak
    }

    pub fn live(&self) -> usize {
        self.live
    }

    /// Polynomial buffers handed out since the last reset.
    pub fn taken(&self) -> usize {
        self.taken
    }

    pub fn reset_stats(&mut self) {
        self.peak = self.live;
        self.taken = 0;
    }
}

/// Output of the top-down pass: per-node summary polynomial and edge values.
#[derive(Debug, Clone)]
pub struct SummaryPolynomials {
    /// `G_v` for every node, indexed like the tree.
    pub g: Vec<ValuePoly>,
    /// `p_e` of the edge entering each node (`1` at the root).
    pub p: Vec<f64>,
    /// `p` of the closest same-feature ancestor edge (`1` when there is none).
    pub p_up: Vec<f64>,
}

/// State of the root-to-node walk shared by both traversals.
struct Walk<'a> {
    tree: &'a PreprocessedTree,
    basis: &'a InterpolationBasis,
    x: &'a [f64],
    /// Per feature, `p` of the deepest edge on that feature so far.
    p_cur: Vec<f64>,
    c: Vec<f64>,
    c_degree: usize,
    path_weight: f64,
}

#[derive(Debug, Clone, Copy)]
struct Step {
    feature: usize,
    p_e: f64,
    p_up: f64,
    has_up: bool,
    saved_weight: f64,
}

impl<'a> Walk<'a> {
    fn new(
        tree: &'a PreprocessedTree,
        basis: &'a InterpolationBasis,
        x: &'a [f64],
        c: Vec<f64>,
    ) -> Self {
        Self {
            tree,
            basis,
            x,
            p_cur: vec![1.0; tree.num_features()],
            c,
            c_degree: 0,
            path_weight: 1.0,
        }
    }

    /// Moves `C` across the edge into `v`: times `(y + p_e)`, and divided by
    /// `(y + p_up)` when an ancestor edge on the same feature exists.
    fn descend(&mut self, v: usize) -> Step {
        let info = self.tree.info(v);
        let feature = info.in_feature.expect("non-root node");
        let p_up = self.p_cur[feature];
        let has_up = info.same_feature_ancestor.is_some();
        let p_e = if self.tree.edge_satisfied(v, self.x) {
            p_up / info.in_weight
        } else {
            0.0
        };
        let y = self.basis.points();
        if has_up {
            for (c, &yj) in self.c.iter_mut().zip(y) {
                *c *= yj + p_e;
                *c /= yj + p_up;
            }
        } else {
            for (c, &yj) in self.c.iter_mut().zip(y) {
                *c *= yj + p_e;
            }
            self.c_degree += 1;
        }
        self.p_cur[feature] = p_e;
        let saved_weight = self.path_weight;
        self.path_weight *= info.in_weight;
        Step {
            feature,
            p_e,
            p_up,
            has_up,
            saved_weight,
        }
    }

    fn ascend(&mut self, step: Step) {
        let y = self.basis.points();
        if step.has_up {
            for (c, &yj) in self.c.iter_mut().zip(y) {
                *c *= yj + step.p_up;
                *c /= yj + step.p_e;
            }
        } else {
            for (c, &yj) in self.c.iter_mut().zip(y) {
                *c /= yj + step.p_e;
            }
            self.c_degree -= 1;
        }
        self.p_cur[step.feature] = step.p_up;
        self.path_weight = step.saved_weight;
    }

    fn leaf_scale(&self, v: usize) -> f64 {
        match self.tree.node(v).kind {
            NodeKind::Leaf { value } => value * self.path_weight,
            NodeKind::Split { .. } => unreachable!(),
        }
    }

    /// Degree of the summary polynomial at the closest same-feature ancestor.
    fn up_degree(&self, v: usize) -> usize {
        let sfa = self.tree.info(v).same_feature_ancestor.expect("has ancestor");
        self.tree.info(sfa).subtree_degree
    }
}

fn check_degree(tree: &PreprocessedTree, basis: &InterpolationBasis) -> Result<()> {
    if tree.max_degree() > basis.max_degree() {
        return Err(Error::DegreeOverflow {
            degree: tree.max_degree(),
            max: basis.max_degree(),
        });
    }
    Ok(())
}

fn check_instance(tree: &PreprocessedTree, x: &Instance) -> Result<()> {
    x.check_len(tree.num_features())
}

// ---------------------------------------------------------------------------
// Two-pass traversal
// ---------------------------------------------------------------------------

/// Top-down pass: the summary polynomial of every node.
///
/// At each non-root node `C <- C (y + p_e)`, divided by `(y + p_up)` when the
/// feature was already seen on the path. A leaf stores `C` times its value
/// and path weight; an internal node stores `G_first (+) G_second`.
pub fn compute_summary_polynomials(
    tree: &PreprocessedTree,
    x: &Instance,
    basis: &InterpolationBasis,
) -> Result<SummaryPolynomials> {
    compute_summary_polynomials_in(tree, x, basis, &mut Workspace::new())
}

fn compute_summary_polynomials_in(
    tree: &PreprocessedTree,
    x: &Instance,
    basis: &InterpolationBasis,
    ws: &mut Workspace,
) -> Result<SummaryPolynomials> {
    check_instance(tree, x)?;
    check_degree(tree, basis)?;
    let n = basis.max_degree() + 1;
    let mut c = ws.take(n);
    c.fill(1.0);
    let mut walk = Walk::new(tree, basis, x.values(), c);
    let mut out = SummaryPolynomials {
        g: vec![
            ValuePoly {
                values: Vec::new(),
                degree: 0,
            };
            tree.len()
        ],
        p: vec![1.0; tree.len()],
        p_up: vec![1.0; tree.len()],
    };
    summarize(&mut walk, tree.root(), &mut out, ws);
    ws.give(walk.c);
    Ok(out)
}

fn summarize(walk: &mut Walk<'_>, v: usize, out: &mut SummaryPolynomials, ws: &mut Workspace) {
    match walk.tree.visit_order(v) {
        None => {
            let r = walk.leaf_scale(v);
            let mut values = ws.take(walk.c.len());
            for (g, &c) in values.iter_mut().zip(&walk.c) {
                *g = c * r;
            }
            out.g[v] = ValuePoly {
                values,
                degree: walk.c_degree,
            };
        }
        Some((a, b)) => {
            for child in [a, b] {
                let step = walk.descend(child);
                out.p[child] = step.p_e;
                out.p_up[child] = step.p_up;
                summarize(walk, child, out, ws);
                walk.ascend(step);
            }
            let mut values = ws.take(walk.c.len());
            values.copy_from_slice(&out.g[a].values);
            let mut g = ValuePoly {
                values,
                degree: out.g[a].degree,
            };
            walk.basis.add_scaled_assign(&mut g, &out.g[b]);
            out.g[v] = g;
        }
    }
}

/// Bottom-up pass: accumulates every edge's two terms into its feature.
pub fn aggregate_shapley(
    tree: &PreprocessedTree,
    summary: &SummaryPolynomials,
    basis: &InterpolationBasis,
) -> Result<Vec<f64>> {
    let mut s = vec![0.0; tree.num_features()];
    aggregate(tree, tree.root(), summary, basis, &mut s)?;
    Ok(s)
}

fn aggregate(
    tree: &PreprocessedTree,
    v: usize,
    summary: &SummaryPolynomials,
    basis: &InterpolationBasis,
    s: &mut [f64],
) -> Result<()> {
    if let Some((a, b)) = tree.visit_order(v) {
        aggregate(tree, a, summary, basis, s)?;
        aggregate(tree, b, summary, basis, s)?;
    }
    let info = tree.info(v);
    let Some(feature) = info.in_feature else {
        return Ok(());
    };
    let g = &summary.g[v];
    let p_e = summary.p[v];
    s[feature] += (p_e - 1.0) * basis.psi(&g.div_linear(basis, p_e)?, g.degree - 1)?;
    if let Some(sfa) = info.same_feature_ancestor {
        let d_up = tree.info(sfa).subtree_degree;
        let p_up = summary.p_up[v];
        let lifted = g.lift(basis, d_up - g.degree)?.div_linear(basis, p_up)?;
        s[feature] -= (p_up - 1.0) * basis.psi(&lifted, d_up - 1)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Fused traversal
// ---------------------------------------------------------------------------

struct Fused<'a, 'w> {
    walk: Walk<'a>,
    ws: &'w mut Workspace,
    s: Vec<f64>,
    c_live: bool,
}

impl Fused<'_, '_> {
    /// Returns `G_v` for an internal node whose path polynomial is current.
    ///
    /// `c_needed_after` says whether some ancestor still has a child to visit
    /// with the current `C`; when it does not, the last leaf folds `C` away.
    fn node(&mut self, v: usize, c_needed_after: bool) -> ValuePoly {
        let (a, b) = self.walk.tree.visit_order(v).expect("internal node");
        let first = self.child(a, None, true);
        self.child(b, Some(first), c_needed_after)
    }

    fn child(&mut self, u: usize, acc: Option<ValuePoly>, c_needed_after: bool) -> ValuePoly {
        let step = self.walk.descend(u);
        let basis = self.walk.basis;
        let k_up = step.has_up.then(|| self.walk.up_degree(u));

        let result = if self.walk.tree.node(u).is_leaf() {
            let r = self.walk.leaf_scale(u);
            let d = self.walk.c_degree;
            let y = basis.points();
            let n_main = basis.weights(d - 1);
            let mut main = 0.0;
            let mut up = 0.0;
            // Leaf polynomial G = C r is consumed point by point: its two psi
            // terms are accumulated and it is either written to a fresh buffer
            // or added straight into the sibling's polynomial.
            let mut fold = |j: usize, g: f64| {
                main += (g / (y[j] + step.p_e)) * n_main[j];
                if let Some(d_up) = k_up {
                    let s = basis.pow1p(d_up - d)[j];
                    up += ((g * s) / (y[j] + step.p_up)) * basis.weights(d_up - 1)[j];
                }
            };
            let out = match acc {
                None => {
                    let mut values = self.ws.take(self.walk.c.len());
                    for (j, (slot, &c)) in values.iter_mut().zip(&self.walk.c).enumerate() {
                        let g = c * r;
                        *slot = g;
                        fold(j, g);
                    }
                    ValuePoly { values, degree: d }
                }
                Some(mut acc) => {
                    if acc.degree >= d {
                        let lift = basis.pow1p(acc.degree - d);
                        for (j, (a, &c)) in acc.values.iter_mut().zip(&self.walk.c).enumerate() {
                            let g = c * r;
                            fold(j, g);
                            *a += g * lift[j];
                        }
                    } else {
                        let lift = basis.pow1p(d - acc.degree);
                        for (j, (a, &c)) in acc.values.iter_mut().zip(&self.walk.c).enumerate() {
                            let g = c * r;
                            fold(j, g);
                            *a = g + *a * lift[j];
                        }
                        acc.degree = d;
                    }
                    acc
                }
            };
            self.s[step.feature] += (step.p_e - 1.0) * (main / d as f64);
            if let Some(d_up) = k_up {
                self.s[step.feature] -= (step.p_up - 1.0) * (up / d_up as f64);
            }
            out
        } else {
            let g = self.node(u, c_needed_after);
            self.s[step.feature] +=
                (step.p_e - 1.0) * basis.psi_quotient(&g.values, step.p_e, g.degree - 1);
            if let Some(d_up) = k_up {
                self.s[step.feature] -= (step.p_up - 1.0)
                    * basis.psi_lifted_quotient(&g.values, d_up - g.degree, step.p_up, d_up - 1);
            }
            match acc {
                None => g,
                Some(mut acc) => {
                    basis.add_scaled_assign(&mut acc, &g);
                    self.ws.give(g.values);
                    acc
                }
            }
        };

        if c_needed_after {
            self.walk.ascend(step);
        } else if self.c_live && self.walk.tree.node(u).is_leaf() {
            // last leaf of the traversal: C has no further readers
            let c = std::mem::take(&mut self.walk.c);
            self.ws.give(c);
            self.c_live = false;
        }
        result
    }
}

fn explain_fused(
    tree: &PreprocessedTree,
    x: &Instance,
    basis: &InterpolationBasis,
    ws: &mut Workspace,
) -> Result<Vec<f64>> {
    check_instance(tree, x)?;
    check_degree(tree, basis)?;
    if tree.node(tree.root()).is_leaf() {
        return Ok(vec![0.0; tree.num_features()]);
    }
    let mut c = ws.take(basis.max_degree() + 1);
    c.fill(1.0);
    let mut fused = Fused {
        walk: Walk::new(tree, basis, x.values(), c),
        ws,
        s: vec![0.0; tree.num_features()],
        c_live: true,
    };
    let g = fused.node(tree.root(), false);
    fused.ws.give(g.values);
    if fused.c_live {
        let c = std::mem::take(&mut fused.walk.c);
        fused.ws.give(c);
    }
    Ok(fused.s)
}

// ---------------------------------------------------------------------------
// Public entry points
// ---------------------------------------------------------------------------

/// Shapley values, base value and prediction for one tree.
pub fn explain(tree: &PreprocessedTree, x: &Instance, basis: &InterpolationBasis) -> Result<Attribution> {
    explain_with(tree, x, basis, Mode::default(), &mut Workspace::new())
}

pub fn explain_with(
    tree: &PreprocessedTree,
    x: &Instance,
    basis: &InterpolationBasis,
    mode: Mode,
    ws: &mut Workspace,
) -> Result<Attribution> {
    let phi = match mode {
        Mode::Fused => explain_fused(tree, x, basis, ws)?,
        Mode::TwoPass => {
            let summary = compute_summary_polynomials_in(tree, x, basis, ws)?;
            let phi = aggregate_shapley(tree, &summary, basis)?;
            for g in summary.g {
                ws.give(g.values);
            }
            phi
        }
    };
    Ok(Attribution {
        phi,
        base_value: tree.expected_value(),
        prediction: tree.predict(x.values()),
    })
}

/// Per-tree attributions summed; the bias only moves the base value.
pub fn explain_ensemble(
    ensemble: &Ensemble,
    x: &Instance,
    basis: &InterpolationBasis,
) -> Result<Attribution> {
    explain_ensemble_with(ensemble, x, basis, Mode::default(), &mut Workspace::new())
}

pub fn explain_ensemble_with(
    ensemble: &Ensemble,
    x: &Instance,
    basis: &InterpolationBasis,
    mode: Mode,
    ws: &mut Workspace,
) -> Result<Attribution> {
    x.check_len(ensemble.num_features)?;
    let mut total = Attribution {
        phi: vec![0.0; ensemble.num_features],
        base_value: ensemble.bias,
        prediction: ensemble.bias,
    };
    for tree in &ensemble.trees {
        let a = explain_with(tree, x, basis, mode, ws)?;
        for (t, p) in total.phi.iter_mut().zip(&a.phi) {
            *t += p;
        }
        total.base_value += a.base_value;
        total.prediction += a.prediction;
    }
    Ok(total)
}

/// A failed row of a batch.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("row {row}: {error}")]
pub struct RowError {
    pub row: usize,
    pub error: Error,
}

/// Explains each instance independently on the current rayon pool. Output
/// order matches input order; failing rows do not affect the others.
pub fn explain_batch(
    ensemble: &Ensemble,
    rows: &[Instance],
    basis: &InterpolationBasis,
    mode: Mode,
) -> Vec<Result<Attribution, RowError>> {
    rows.par_iter()
        .enumerate()
        .map_init(Workspace::new, |ws, (row, x)| {
            explain_ensemble_with(ensemble, x, basis, mode, ws).map_err(|error| RowError { row, error })
        })
        .collect()
}

/// An ensemble bundled with a basis sized for it.
#[derive(Debug, Clone)]
pub struct Explainer {
    ensemble: Ensemble,
    basis: InterpolationBasis,
    mode: Mode,
}

impl Explainer {
    pub fn new(ensemble: Ensemble) -> Result<Self> {
        let basis = InterpolationBasis::new(ensemble.max_degree())?;
        Ok(Self {
            ensemble,
            basis,
            mode: Mode::default(),
        })
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ensemble
    }

    pub fn basis(&self) -> &InterpolationBasis {
        &self.basis
    }

    pub fn explain(&self, x: &Instance) -> Result<Attribution> {
        explain_ensemble_with(&self.ensemble, x, &self.basis, self.mode, &mut Workspace::new())
    }

    pub fn explain_batch(&self, rows: &[Instance]) -> Vec<Result<Attribution, RowError>> {
        explain_batch(&self.ensemble, rows, &self.basis, self.mode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::*;
    use crate::tree_model::{parse_model, NodeDoc};

    fn basis(d: usize) -> InterpolationBasis {
        InterpolationBasis::new(d).unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn rain_edge_values() {
        let t = rain_tree();
        let s = compute_summary_polynomials(&t, &rain_instance(), &basis(3)).unwrap();
        // preorder: 0 temperature, 1 D, 2 cloudy, 3 wind, 4 C, 5 B, 6 A
        assert_eq!(s.p[2], 2.0);
        assert_eq!(s.p[3], 2.5);
        assert!((s.p[4] - 1.0 / 0.7).abs() < 1e-15);
        assert_eq!(s.p[6], 0.0);
        assert_eq!(s.p[1], 0.0);
        assert_eq!(s.p[5], 0.0);
    }

    #[test]
    fn rain_leaf_d_summary() {
        let t = rain_tree();
        let b = basis(3);
        let s = compute_summary_polynomials(&t, &rain_instance(), &b).unwrap();
        let leaf_d = &s.g[1];
        assert_eq!(leaf_d.degree, 1);
        for (g, y) in leaf_d.values.iter().zip(b.points()) {
            assert!((g - 0.25 * y).abs() < 1e-15);
        }
    }

    #[test]
    fn rain_attribution() {
        let t = rain_tree();
        let a = explain(&t, &rain_instance(), &basis(3)).unwrap();
        assert_close(&a.phi, &RAIN_PHI, 1e-12);
        assert!((a.base_value - RAIN_BASE).abs() < 1e-15);
        assert_eq!(a.prediction, RAIN_PREDICTION);
        assert!(a.efficiency_gap() < 1e-12);
    }

    #[test]
    fn modes_agree_bitwise_on_rain() {
        let t = rain_tree();
        let b = basis(3);
        let x = rain_instance();
        let two = explain_with(&t, &x, &b, Mode::TwoPass, &mut Workspace::new()).unwrap();
        let fused = explain_with(&t, &x, &b, Mode::Fused, &mut Workspace::new()).unwrap();
        assert_eq!(two, fused);
    }

    #[test]
    fn single_leaf_tree() {
        let t = PreprocessedTree::from_nodes(2, 0, &[NodeDoc::Leaf { id: 0, value: 1.5 }]).unwrap();
        let x = Instance::new(vec![0.0, 0.0]).unwrap();
        let b = basis(0);
        let s = compute_summary_polynomials(&t, &x, &b).unwrap();
        assert_eq!(s.g[0].values, vec![1.5]);
        assert_eq!(s.g[0].degree, 0);
        for mode in [Mode::Fused, Mode::TwoPass] {
            let a = explain_with(&t, &x, &b, mode, &mut Workspace::new()).unwrap();
            assert_eq!(a.phi, vec![0.0, 0.0]);
            assert_eq!(a.base_value, 1.5);
            assert_eq!(a.prediction, 1.5);
        }
    }

    #[test]
    fn stump_closed_form() {
        let (w, a, bv) = (0.3, 2.0, -1.0);
        let nodes = [
            NodeDoc::Split {
                id: 0,
                feature: 0,
                threshold: 0.0,
                left: 1,
                right: 2,
                left_weight: w,
                right_weight: 1.0 - w,
            },
            NodeDoc::Leaf { id: 1, value: a },
            NodeDoc::Leaf { id: 2, value: bv },
        ];
        let t = PreprocessedTree::from_nodes(1, 0, &nodes).unwrap();
        let x = Instance::new(vec![-1.0]).unwrap();
        let at = explain(&t, &x, &basis(1)).unwrap();
        assert!((at.phi[0] - (1.0 - w) * (a - bv)).abs() < 1e-14);
        assert!((at.base_value - (w * a + (1.0 - w) * bv)).abs() < 1e-15);
        assert_eq!(at.prediction, a);
    }

    #[test]
    fn unused_feature_gets_zero() {
        let doc = rain_json().replace("\"num_features\": 3", "\"num_features\": 5").replace(
            "\"feature_names\": [\"temperature\", \"cloudy\", \"wind_speed\"],",
            "",
        );
        let model = parse_model(&doc).unwrap();
        let x = Instance::new(vec![20.0, 0.0, 6.0, 1.0, -3.0]).unwrap();
        let a = explain(&model.trees[0], &x, &basis(3)).unwrap();
        assert_eq!(a.phi[3], 0.0);
        assert_eq!(a.phi[4], 0.0);
    }

    #[test]
    fn degree_overflow_reported() {
        let t = rain_tree();
        assert!(matches!(
            explain(&t, &rain_instance(), &basis(2)),
            Err(Error::DegreeOverflow { degree: 3, max: 2 })
        ));
    }

    #[test]
    fn ensemble_linearity() {
        let t = rain_tree();
        let b = basis(3);
        let x = rain_instance();
        let single = explain(&t, &x, &b).unwrap();
        let twice = Ensemble::new(3, vec![t.clone(), t.clone()]).unwrap();
        let a = explain_ensemble(&twice, &x, &b).unwrap();
        for (p2, p1) in a.phi.iter().zip(&single.phi) {
            assert_eq!(*p2, 2.0 * p1);
        }

        let leaf = PreprocessedTree::from_nodes(3, 0, &[NodeDoc::Leaf { id: 0, value: 1.0 }]).unwrap();
        let with_leaf = Ensemble::new(3, vec![t, leaf]).unwrap();
        let a = explain_ensemble(&with_leaf, &x, &b).unwrap();
        assert_eq!(a.phi, single.phi);
        assert!((a.base_value - (single.base_value + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn empty_ensemble_with_bias() {
        let e = Ensemble::new(2, vec![]).unwrap().with_bias(0.3);
        let x = Instance::new(vec![1.0, 2.0]).unwrap();
        let a = explain_ensemble(&e, &x, &basis(0)).unwrap();
        assert_eq!(a.phi, vec![0.0, 0.0]);
        assert_eq!(a.base_value, 0.3);
        assert_eq!(a.prediction, 0.3);
    }

    #[test]
    fn batch_preserves_order_and_reports_bad_rows() {
        let e = Ensemble::single(rain_tree());
        let b = basis(3);
        let rows = vec![
            rain_instance(),
            Instance::new(vec![1.0, 2.0]).unwrap(),
            rain_instance(),
        ];
        let out = explain_batch(&e, &rows, &b, Mode::Fused);
        assert_eq!(out.len(), 3);
        let first = out[0].as_ref().unwrap();
        assert_eq!(out[2].as_ref().unwrap(), first);
        assert_eq!(out[1].as_ref().unwrap_err().row, 1);
        assert_eq!(first, &explain_ensemble(&e, &rain_instance(), &b).unwrap());
    }

    #[test]
    fn workspace_returns_every_buffer() {
        let t = rain_tree();
        let b = basis(3);
        for mode in [Mode::Fused, Mode::TwoPass] {
            let mut ws = Workspace::new();
            explain_with(&t, &rain_instance(), &b, mode, &mut ws).unwrap();
            assert_eq!(ws.live(), 0, "{mode:?}");
        }
    }

    #[test]
    fn symmetric_tree_symmetric_features() {
        // a then b on the left, b then a on the right, equal weights and values
        // symmetric in (a, b); x satisfies both left criteria.
        let s = |id, feature, left, right| NodeDoc::Split {
            id,
            feature,
            threshold: 0.5,
            left,
            right,
            left_weight: 0.5,
            right_weight: 0.5,
        };
        let l = |id, value| NodeDoc::Leaf { id, value };
        let nodes = [
            s(0, 0, 1, 2),
            s(1, 1, 3, 4),
            s(2, 1, 5, 6),
            l(3, 1.0),
            l(4, 0.2),
            l(5, 0.2),
            l(6, -0.7),
        ];
        let t = PreprocessedTree::from_nodes(2, 0, &nodes).unwrap();
        let x = Instance::new(vec![0.0, 0.0]).unwrap();
        let a = explain(&t, &x, &basis(2)).unwrap();
        assert!((a.phi[0] - a.phi[1]).abs() < 1e-10, "{:?}", a.phi);
    }
}
