//! Error type shared by the whole crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Parameter validation failed (k_n < 2, m_n < 1, α outside (0,1), ...).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A stage beyond the construction horizon was requested.
    #[error("insufficient horizon: stage {requested} requested, horizon allows {allowed}")]
    Horizon { requested: usize, allowed: usize },

    /// No stage within the horizon makes the requested shift window safe.
    #[error("insufficient horizon: no safe stage for shift window of length {window}")]
    NoSafeStage { window: String },

    /// A level index does not fit the engine's integer scalar.
    #[error("scalar capacity exceeded at stage {stage}")]
    Capacity { stage: usize },

    /// Subcolumn or spacer index outside its admissible range.
    #[error("index {index} out of range (< {bound})")]
    IndexRange { index: String, bound: String },

    /// Explicit tower would exceed the configured memory cap.
    #[error("memory cap exceeded: stage {stage} has {levels} levels, cap is {cap}")]
    MemoryCap {
        stage: usize,
        levels: String,
        cap: usize,
    },

    /// Operation requires a base set contained in F.
    #[error("base set is not contained in F")]
    NotInF,

    /// Operation is only defined for the v-alpha family.
    #[error("operation requires a v-alpha family")]
    NotValpha,

    #[error("stage ordering violated: {0}")]
    StageOrder(String),

    /// The closing bound's sign condition fails at this stage.
    #[error("bound inapplicable at this n: {0}")]
    BoundInapplicable(String),

    #[error("beta must be >= 1 (got {0})")]
    BadBeta(String),

    #[error("{0}")]
    Invalid(String),
}
