use std::collections::BTreeMap;

use thiserror::Error;

use crate::rotations::ConditionReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {p} outside supported range {min}..={max}")]
    Dimension { p: usize, min: usize, max: usize },

    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is singular (|det| = {det:e})")]
    Singular { det: f64 },

    #[error("index out of range: {0}")]
    Index(String),

    #[error("side condition failed: {0}")]
    Condition(String),

    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("rotation spec rejected: {}", .0.failures().join("; "))]
    InvalidSpec(ConditionReport),

    #[error("no perturbation gave exactly {target} points in {attempts} attempts (observed counts: {histogram:?})")]
    DeltaExhausted {
        target: usize,
        attempts: usize,
        histogram: BTreeMap<usize, usize>,
    },

    #[error("no valid rotation spec for p={p} on {base}: {reason}")]
    SpecUnavailable {
        p: usize,
        base: String,
        reason: String,
    },

    #[error("every trial of the search failed")]
    SearchExhausted,
}
