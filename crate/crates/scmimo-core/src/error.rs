//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by configuration validation, estimators, solvers and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// An array or profile has the wrong shape (e.g. PDP rows not K x L).
    #[error("dimension error: {0}")]
    Dimension(String),

    /// The frame timeline cannot hold the required slots/symbols.
    #[error("timeline error: {0}")]
    Timeline(String),

    /// The worst-case CFO rotation per block exceeds the small-angle bound.
    #[error("cfo bound error: {0}")]
    CfoBound(String),

    /// A closed-form expression was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An estimator input was degenerate (e.g. an exactly zero correlation sum).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A target is not attainable anywhere in the search bracket.
    #[error("unachievable target: {0}")]
    Unachievable(String),

    /// Statistics were requested from an accumulator holding zero trials.
    #[error("empty statistics: no trials accumulated")]
    EmptyStats,

    /// A config file / override string could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// A binary dump is malformed or has an unsupported version.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
