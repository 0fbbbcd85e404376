use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {x} outside domain [{lo}, {hi}]")]
    Domain { x: Rational, lo: Rational, hi: Rational },

    #[error("composition mismatch: {0}")]
    Composition(String),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A piece or iteration budget ran out.
    #[error("budget exceeded: {what} (reached {reached}, limit {limit})")]
    Budget { what: String, reached: u64, limit: u64 },

    /// Iteration stopped because the piece count of an iterate exceeded the budget.
    #[error("iterate {iterate} has {pieces} pieces, over the budget of {limit}")]
    IterateBudget { iterate: u64, pieces: u64, limit: u64 },

    /// Some candidate interval never covered the domain.
    #[error("no covering within {cap} iterates: [{lo}, {hi}] only reaches [{img_lo}, {img_hi}]")]
    Covering { cap: u32, lo: Rational, hi: Rational, img_lo: Rational, img_hi: Rational },

    /// A parameter search ran out of budget; `best` describes the closest candidate.
    #[error("{what} exhausted its budget; best candidate: {best}")]
    Exhausted { what: String, best: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
