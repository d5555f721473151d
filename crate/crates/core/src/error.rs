use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("model schema violation: {0}")]
    Schema(String),

    #[error("node {node}: invalid split weights (left {left}, right {right}); need 0 < w < 1 and left + right = 1")]
    Weight { node: i64, left: f64, right: f64 },

    #[error("malformed tree structure: {0}")]
    Structure(String),

    #[error("node {node}: feature index {feature} out of range for {num_features} features")]
    FeatureOutOfRange {
        node: i64,
        feature: usize,
        num_features: usize,
    },

    #[error("instance has {got} features, model expects {expected}")]
    InstanceLength { expected: usize, got: usize },

    #[error("feature {feature} has non-finite value {value}")]
    NonFinite { feature: usize, value: f64 },

    #[error("polynomial degree {degree} would exceed the basis maximum {max}")]
    DegreeOverflow { degree: usize, max: usize },

    #[error("requested degree {requested} exceeds the supported maximum {max}")]
    DegreeTooLarge { requested: usize, max: usize },

    #[error("psi degree {degree} out of range for basis of degree {max}")]
    DegreeOutOfRange { degree: usize, max: usize },

    #[error("division by (y + {shift}) is outside the feasible shift set {{0}} U [1, inf)")]
    InfeasibleShift { shift: f64 },

    #[error("division by (y + {shift}) hits a pole at an evaluation point")]
    Pole { shift: f64 },

    #[error("brute-force enumeration needs at most {max} features, model has {m}")]
    TooManyFeatures { m: usize, max: usize },
}
