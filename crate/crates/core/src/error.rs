use thiserror::Error;

use crate::preorder::Subset;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("size mismatch: expected {expected} elements, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("preorder of size {size} exceeds the supported maximum of {max}")]
    TooLarge { size: usize, max: usize },

    #[error("relation is not a preorder: {0}")]
    NotPreorder(String),

    #[error("set {0} is not an up-set of the preorder")]
    NotUpSet(Subset),

    #[error("function is not increasing: f({lower}) > f({upper}) although {lower} <= {upper}")]
    NotIncreasing { lower: usize, upper: usize },

    #[error("invalid concentration: {0}")]
    InvalidConcentration(String),

    #[error("invalid capacity: {0}")]
    InvalidCapacity(String),

    #[error("invalid rate function: {0}")]
    InvalidRate(String),

    #[error("negative value {value} at index {index} where a nonnegative value is required")]
    Negative { index: usize, value: f64 },

    #[error("dual variable {0} is negative; only the nonnegative cone is admissible")]
    NegativeDual(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("model {model} lacks capability {capability}")]
    MissingCapability {
        model: String,
        capability: &'static str,
    },

    #[error("functional property ({property}) violated: {detail}")]
    PropertyViolation {
        property: &'static str,
        detail: String,
    },

    #[error("no table entry for function {0:?}")]
    MissingTableEntry(Vec<f64>),

    #[error("staircase bounds must satisfy a < f(x) < b strictly (a = {a}, b = {b})")]
    StaircaseBounds { a: f64, b: f64 },

    #[error("evaluation failed at n = {n}: {source}")]
    AtIndex {
        n: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{0}")]
    Invalid(String),
}
