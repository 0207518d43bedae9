//! Abstract syntax, concrete grammar, parser, and pretty-printer.
//!
//! Concrete syntax (files use the `.pgcl` extension, `#` starts a comment):
//!
//! ```text
//! stmts  := stmt (';' stmt)* [';']
//! stmt   := x ':=' arith | skip
//!         | while '(' bool ')' '{' stmts '}'
//!         | if '(' bool ')' '{' stmts '}' [else '{' stmts '}']
//!         | '{' stmts '}' '[' prob ']' '{' stmts '}'
//!         | '{' stmts '}'
//! arith  := literal | x | arith (+ - * / div mod) arith | '(' arith ')'
//! bool   := arith (< <= = != > >=) arith | bool && bool | bool || bool | !bool | '(' bool ')'
//! ```
//!
//! Literals are `n`, `n/m` (no whitespace around the slash), or decimals
//! such as `0.5`.

mod ast;
mod lexer;
mod parser;
mod printer;

use thiserror::Error;

pub use ast::{is_ordinary, vars_of, ArithExpr, ArithOp, BoolExpr, CmpOp, Program, Var};
pub use parser::{desugar_if, parse, parse_arith, parse_bool, SKIP_VAR};
pub use printer::{pretty_print, pretty_print_wrapped, print_arith, print_bool, DEFAULT_WIDTH};

use crate::rational::{to_literal_string, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("probability {} at {line}:{column} is outside [0, 1]", to_literal_string(.value))]
    ProbabilityRange { line: usize, column: usize, value: Rational },
}

impl ParseError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            ParseError::Syntax { line, column, .. } | ParseError::ProbabilityRange { line, column, .. } => {
                (*line, *column)
            }
        }
    }
}

#[cfg(test)]
mod tests;
