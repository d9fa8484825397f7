use thiserror::Error;

use crate::automata::Violation;

#[derive(Debug, Error)]
pub enum QdesError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("symbol `{0}` is not in the alphabet")]
    UnknownSymbol(String),

    #[error("end marker `$` may not occur inside an input word")]
    EndMarkerInWord,

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("word function is not real: imaginary part {imag:e} on word `{word}`")]
    ImaginaryPart { word: String, imag: f64 },

    #[error("invalid automaton: {}", format_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("search failed: {0}")]
    SearchFailed(String),

    #[error("enumeration cap exceeded: {words} words requested, cap is {cap}")]
    EnumerationCap { words: u128, cap: u128 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("malformed document: {0}")]
    Document(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, QdesError>;
