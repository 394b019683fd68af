use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the engine can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error in {op}: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    Shape {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("shape error in {op}: expected a square matrix, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },
    #[error("index {index} out of range for {len} rows")]
    Index { index: usize, len: usize },

    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(
        "unsupported arity {arity} for `{predicate}` at {line}:{column} (only 1 or 2 allowed)"
    )]
    UnsupportedArity {
        predicate: String,
        arity: usize,
        line: usize,
        column: usize,
    },
    #[error("variable `{name}` not allowed in a ground fact at {line}:{column}")]
    VariableNotAllowed {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("invalid identifier `{0}`")]
    InvalidIdentifier(String),

    #[error("no `{type_name}` facts: the universe is empty")]
    EmptyUniverse { type_name: String },
    #[error("unknown constant `{0}`")]
    UnknownConstant(String),
    #[error("duplicate constant `{0}` in universe")]
    DuplicateConstant(String),

    #[error("matrix format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("pipeline error at line {line}: {message}")]
    PipelineSyntax { line: usize, message: String },
    #[error("pipeline step `{step}`: unknown input `{name}`")]
    PipelineReference { step: String, name: String },
    #[error("pipeline step `{0}`: output name already defined")]
    DuplicateStep(String),
    #[error("pipeline step `{step}`: {source}")]
    Step {
        step: String,
        #[source]
        source: Box<Error>,
    },

    #[error("program is not stratified: {0}")]
    Stratification(String),

    #[error("triple ingestion error at line {line}: {message}")]
    Ingest { line: usize, message: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, left: (usize, usize), right: (usize, usize)) -> Self {
        Error::Shape {
            op,
            left_rows: left.0,
            left_cols: left.1,
            right_rows: right.0,
            right_cols: right.1,
        }
    }

    /// Innermost error, looking through pipeline step wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. } => source.root(),
            other => other,
        }
    }
}
