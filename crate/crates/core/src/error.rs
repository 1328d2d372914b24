use std::fmt;

use thiserror::Error;

/// Text parse failure with a 1-based position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl ParseError {
    /// Shift a single-line error to its place inside a larger document.
    pub fn relocate(mut self, line: usize, column_offset: usize) -> Self {
        self.line = line;
        self.column += column_offset;
        self
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),

    #[error("metric signature violated at x = {point:?}: {reason}")]
    Signature { point: [f64; 4], reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular denominator in {context}: |P| = {value:e}")]
    SingularDenominator { context: String, value: f64 },

    #[error("term count exceeded cap {cap} (generated {count} so far)")]
    TermOverflow { cap: usize, count: usize },

    #[error("CFL condition violated: dt = {dt}, limit = {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("solution exceeded blow-up bound {bound} at step {step} (max |u| = {value:e}); reduce source amplitude")]
    BlowUp { bound: f64, step: usize, value: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
