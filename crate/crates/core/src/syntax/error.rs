use thiserror::Error;

/// What went wrong while reading a `.flx` document.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ErrorKind {
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("integer literal `{0}` is too large")]
    IntegerOverflow(String),
    #[error("expected {expected}, found {found}")]
    Unexpected { expected: String, found: String },
    #[error("undeclared {what} `{name}`")]
    Undeclared { what: &'static str, name: String },
    #[error("`{0}` is already declared")]
    Duplicate(String),
    #[error("macro `{0}` is defined in terms of itself")]
    CyclicMacro(String),
    #[error("literal {value} is outside the range 0..={bound} of counter `{counter}`")]
    CounterLiteralOutOfRange { counter: String, value: u32, bound: u32 },
    #[error("counter bound must be between 1 and 255, got {0}")]
    BadCounterBound(u32),
    #[error("`{0}` is not a prohibition; only F(...) and F[...](...) rules can have exceptions")]
    ExceptionTargetNotProhibition(String),
    #[error("only permissions can be flagged as exceptions")]
    ExceptionOnNonPermission,
    #[error("deontic operators cannot be nested inside formulas")]
    NestedDeontic,
    #[error("{0} cannot carry a reparation")]
    ReparationNotAllowed(&'static str),
    #[error("{0} must be a state formula (no temporal operators)")]
    TemporalNotAllowed(&'static str),
    #[error("{0}")]
    Invalid(String),
}

/// A positioned frontend error.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub kind: ErrorKind,
}

impl SyntaxError {
    pub fn new(line: usize, column: usize, kind: ErrorKind) -> Self {
        SyntaxError { line, column, kind }
    }
}
