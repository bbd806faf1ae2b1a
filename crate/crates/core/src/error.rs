use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid sizing: {0}")]
    Sizing(String),

    #[error("invalid boundary segments: {0}")]
    Segments(String),

    #[error("ball centred at ({x}, {y}) with radius {radius} contains no domain node")]
    EmptyBall { x: f64, y: f64, radius: f64 },

    #[error("node {node} is not stencil-complete")]
    IncompleteStencil { node: usize },

    #[error("invalid ellipticity: need 0 < lambda <= Lambda, got ({lower}, {upper})")]
    Ellipticity { lower: f64, upper: f64 },

    #[error("invalid barrier spec: {0}")]
    Barrier(String),

    #[error("invalid solver input: {0}")]
    Solver(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("overlapping supports: {0}")]
    Overlap(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("field dump {path}: {message}")]
    Dump { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
