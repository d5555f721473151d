//! The rain-forecast example tree used throughout the tests and docs.
//!
//! Features: `0` temperature, `1` cloudy (0 = no, 1 = yes), `2` wind speed.
//!
//! ```text
//! temperature <= 19 (w 0.5) -> D: 0.5
//! temperature >  19 (w 0.5) -> cloudy
//!     no  (w 0.4) -> wind speed
//!         <= 8 (w 0.7) -> C: 0.4
//!         >  8 (w 0.3) -> B: 0.6
//!     yes (w 0.6) -> A: 0.7
//! ```

use crate::tree_model::{parse_model, Instance, PreprocessedTree};

pub const RAIN_FEATURES: [&str; 3] = ["temperature", "cloudy", "wind_speed"];

pub fn rain_json() -> String {
    r#"{
  "num_features": 3,
  "feature_names": ["temperature", "cloudy", "wind_speed"],
  "trees": [
    {
      "root": 0,
      "nodes": [
        {"id": 0, "kind": "split", "feature": 0, "threshold": 19.0, "left": 6, "right": 1, "left_weight": 0.5, "right_weight": 0.5},
        {"id": 1, "kind": "split", "feature": 1, "threshold": 0.5, "left": 2, "right": 3, "left_weight": 0.4, "right_weight": 0.6},
        {"id": 2, "kind": "split", "feature": 2, "threshold": 8.0, "left": 5, "right": 4, "left_weight": 0.7, "right_weight": 0.3},
        {"id": 3, "kind": "leaf", "value": 0.7},
        {"id": 4, "kind": "leaf", "value": 0.6},
        {"id": 5, "kind": "leaf", "value": 0.4},
        {"id": 6, "kind": "leaf", "value": 0.5}
      ]
    }
  ]
}"#
    .to_string()
}

pub fn rain_tree() -> PreprocessedTree {
    parse_model(&rain_json())
        .expect("fixture parses")
        .trees
        .remove(0)
}

/// temperature 20, not cloudy, wind speed 6: lands in leaf C.
pub fn rain_instance() -> Instance {
    Instance::new(vec![20.0, 0.0, 6.0]).expect("finite")
}

/// Shapley values of [`rain_instance`], from exhaustive enumeration in exact
/// rational arithmetic: 1/250, -123/1000, -33/1000.
pub const RAIN_PHI: [f64; 3] = [0.004, -0.123, -0.033];
pub const RAIN_BASE: f64 = 0.552;
pub const RAIN_PREDICTION: f64 = 0.4;
