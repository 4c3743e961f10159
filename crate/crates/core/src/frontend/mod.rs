//! The Qudit Gate Language: lexing, parsing, validation, pretty-printing,
//! and lowering to symbolic unitary expressions.

mod ast;
mod error;
mod lexer;
mod lower;
mod parser;
mod printer;

pub use ast::{BinOp, Expr, UnitaryDef, FUNCTIONS, RESERVED};
pub use error::{Loc, ParseError, ParseErrorKind};
pub use lexer::{is_greek, is_letter};
pub use lower::{lower_expression, lower_to_symbolic};
pub use parser::{parse_expression, parse_qgl, parse_unitary};
pub use printer::{print_def, print_expr};

use crate::symexpr::UnitaryExprMatrix;

/// Parse and lower a source holding exactly one definition.
pub fn compile_unitary(source: &str) -> Result<UnitaryExprMatrix, ParseError> {
    lower_to_symbolic(&parse_unitary(source)?)
}
