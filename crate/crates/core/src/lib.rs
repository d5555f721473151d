//! Exact Shapley values for decision-tree ensembles in `O(L D)` time per
//! instance, where `L` is the number of leaves and `D` the largest number of
//! distinct features on a root-to-leaf path.
//!
//! Polynomials are represented by their values on a fixed set of points, so
//! products, quotients by linear factors and sums are all pointwise, and the
//! weighted integral that turns a summary polynomial into a Shapley
//! contribution is a single dot product.
//!
//! ```
//! use linear_treeshap::{explain_ensemble, fixtures, Ensemble, InterpolationBasis};
//!
//! let model = Ensemble::single(fixtures::rain_tree());
//! let basis = InterpolationBasis::new(model.max_degree()).unwrap();
//! let a = explain_ensemble(&model, &fixtures::rain_instance(), &basis).unwrap();
//! assert!((a.phi[1] + 0.123).abs() < 1e-12);
//! ```

pub mod conformance;
pub mod error;
pub mod fixtures;
pub mod interp_poly;
pub mod linear_shap;
pub mod oracle;
pub mod scaling;
pub mod synth;
pub mod tree_model;

pub use error::{Error, Result};
pub use interp_poly::{InterpolationBasis, ValuePoly, MAX_DEGREE};
pub use linear_shap::{
    aggregate_shapley, compute_summary_polynomials, explain, explain_batch, explain_ensemble,
    explain_ensemble_with, explain_with, Attribution, Explainer, Mode, RowError, SummaryPolynomials,
    Workspace,
};
pub use tree_model::{
    parse_model, parse_model_with, Ensemble, Instance, ModelDoc, NodeDoc, NodeInfo, NodeKind,
    ParseOptions, PreprocessedTree, TreeDoc, TreeNode,
};
