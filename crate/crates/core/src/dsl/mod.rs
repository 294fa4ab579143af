//! A small, total expression language for coefficient fields.
//!
//! Grammar (highest precedence last):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?          // right-associative
//! atom  := number | ident | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! Identifiers: `t`, state components `x1..xm`, mark components `e1..el`,
//! the constant `pi`, and any named parameter. Functions: `sin`, `cos`,
//! `exp`, `sqrt`, `abs`. Numbers follow the usual decimal / exponent form
//! (`2e-3`), so `2e1` is twenty and not `2 * e1`.

mod ast;
mod eval;
mod lexer;
mod model;
mod parser;

pub use ast::{BinOp, Expr, Func, Var};
pub use eval::{compile_field, compile_jump_field, Bindings, Compiled, Scope};
pub use lexer::{tokenize, Token, TokenKind};
pub use model::{CoefficientSource, SourceError};
pub use parser::parse;

use thiserror::Error;

/// Errors raised while lexing, parsing, validating or evaluating expressions.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("unexpected character {ch:?} at byte {offset}")]
    Lex { ch: char, offset: usize },
    #[error("malformed number literal at byte {offset}")]
    Number { offset: usize },
    #[error("unexpected {found} at byte {offset}, expected {expected}")]
    Parse {
        found: String,
        expected: &'static str,
        offset: usize,
    },
    #[error("function `{name}` takes exactly one argument (byte {offset})")]
    Arity { name: String, offset: usize },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("unresolved variable `{name}`")]
    Unresolved { name: String },
    #[error("expected {expected} expressions, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("domain error: {0}")]
    Domain(&'static str),
}
