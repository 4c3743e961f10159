use std::fmt;

/// One-based line and column of a character in QGL source.
///
/// Locations never take part in AST equality, so a re-parsed program
/// compares equal to the original regardless of layout.
#[derive(Clone, Copy, Debug, Default)]
pub struct Loc {
    pub line: usize,
    pub column: usize,
}

impl Loc {
    pub fn new(line: usize, column: usize) -> Self {
        Loc { line, column }
    }
}

impl PartialEq for Loc {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Loc {}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lex,
    Syntax,
    DimensionMismatch,
    ReservedVariable,
    UnsupportedConstruct,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParseErrorKind::Lex => "lex error",
            ParseErrorKind::Syntax => "syntax error",
            ParseErrorKind::DimensionMismatch => "dimension mismatch",
            ParseErrorKind::ReservedVariable => "reserved variable",
            ParseErrorKind::UnsupportedConstruct => "unsupported construct",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{}:{}: {kind}: {message}", loc.line, loc.column)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub loc: Loc,
    pub message: String,
}

impl ParseError {
    pub fn new(kind: ParseErrorKind, loc: Loc, message: impl Into<String>) -> Self {
        ParseError { kind, loc, message: message.into() }
    }
}
