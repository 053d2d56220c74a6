//! Surface syntax: lexer, parser, AST and pretty-printer.

pub mod ast;
mod lexer;
mod parser;
mod pretty;

use crate::span::Span;

pub use ast::*;
pub use lexer::{tokenize, Tok, Token};
pub use parser::{parse_expr, parse_program, parse_signature};
pub use pretty::{pretty_print, print_annotation, print_expr};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message}")]
pub struct ParseError {
    pub span: Span,
    pub message: String,
}

impl ParseError {
    pub fn new(span: Span, message: impl Into<String>) -> Self {
        ParseError {
            span,
            message: message.into(),
        }
    }
}
