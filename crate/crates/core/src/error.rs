use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid merit distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid top-k matrix: {0}")]
    InvalidTopK(String),

    #[error("invalid position weights: {0}")]
    InvalidWeights(String),

    #[error("invalid ranking: {0}")]
    InvalidRanking(String),

    #[error("matrix is not doubly stochastic: {0}")]
    NotDoublyStochastic(String),

    #[error("linear program is infeasible (phase-one residual {residual:.3e})")]
    Infeasible { residual: f64 },

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("simplex stopped after {iterations} iterations without reaching optimality")]
    IterationLimit { iterations: usize },

    #[error("no perfect matching on the support graph (residual mass {residual:.3e})")]
    NoPerfectMatching { residual: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("genre `{genre}` has {available} rated items, {required} required")]
    InsufficientItems {
        genre: String,
        available: usize,
        required: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }
}
