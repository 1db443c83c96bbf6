//! Minimal reverse-mode differentiation: the layers the sense and
//! pretraining models are built from, plus plain SGD.

mod graph;
pub(crate) mod linalg;
mod lstm;
mod param;

use thiserror::Error;

pub use graph::{argmax, cross_entropy_multi, softmax, ActivationKind, Graph, NodeId};
pub use lstm::{LstmDims, LstmParams, GATES};
pub use param::{init_parameter, sgd_step, InitScheme, ParamId, ParamStore, Parameter, Shape};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("{op}: expected dimension {expected}, found {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("parameter `{0}` has a zero-sized shape")]
    EmptyShape(String),
    #[error("parameter `{0}` already exists")]
    DuplicateParameter(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("row {row} out of range for `{param}` with {rows} rows")]
    RowOutOfRange { param: String, row: usize, rows: usize },
    #[error("{0}: empty input")]
    EmptyInput(&'static str),
    #[error("the set of correct classes is empty")]
    EmptyClassSet,
    #[error("class index {index} out of range for {len} classes")]
    ClassOutOfRange { index: usize, len: usize },
    #[error("backward needs a scalar loss, got a vector of length {0}")]
    NonScalarLoss(usize),
    #[error("learning rate must be positive, got {0}")]
    InvalidLearningRate(f64),
}
