//! The mini imperative language: syntax tree, parser, printer and CFGs.

mod ast;
mod cfg;
mod lexer;
mod parser;
mod printer;

use num_bigint::BigInt;
use thiserror::Error;

pub use ast::*;
pub use cfg::{back_edge_targets, build_cfg, Cfg, Edge, EdgeLabel, NodeId, NodeKind};
pub use parser::{parse_condition, parse_expr, parse_program, ENTRY};
pub use printer::stmt_head;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: use of undeclared variable `{name}`")]
    Undeclared { line: usize, col: usize, name: String },
    #[error("{line}:{col}: `{name}` is already declared in this function")]
    Redeclared { line: usize, col: usize, name: String },
    #[error("{line}:{col}: call to unknown function `{name}`")]
    UnknownFunction { line: usize, col: usize, name: String },
    #[error("{line}:{col}: `{name}` takes {expected} argument(s) but {found} were given")]
    ArityMismatch { line: usize, col: usize, name: String, expected: usize, found: usize },
    #[error("{line}:{col}: nondet bounds reversed ({lo} > {hi})")]
    NondetBounds { line: usize, col: usize, lo: BigInt, hi: BigInt },
    #[error("recursion is not supported: {cycle}")]
    Recursion { cycle: String },
    #[error("function `{name}` is defined twice")]
    DuplicateFunction { name: String },
    #[error("no entry function `main`")]
    MissingEntry,
    #[error("{line}:{col}: entry function `main` cannot take parameters")]
    EntryParams { line: usize, col: usize },
}

impl ParseError {
    /// Source position, when the error has one.
    pub fn location(&self) -> Option<(usize, usize)> {
        match self {
            ParseError::Syntax { line, col, .. }
            | ParseError::Undeclared { line, col, .. }
            | ParseError::Redeclared { line, col, .. }
            | ParseError::UnknownFunction { line, col, .. }
            | ParseError::ArityMismatch { line, col, .. }
            | ParseError::NondetBounds { line, col, .. }
            | ParseError::EntryParams { line, col } => Some((*line, *col)),
            _ => None,
        }
    }
}
