//! MiniLang: a small deterministic Python-like language with functions,
//! closures, `while`, `if` and arbitrary-precision integers.

mod ast;
mod format;
mod lexer;
mod parser;

use std::fmt;

pub use ast::*;
pub use format::{format_block, format_expr, format_node, format_program, format_stmt};
pub use parser::{parse, parse_expr, parse_expr_template, parse_stmt_template, renumber};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct SyntaxError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl SyntaxError {
    pub fn new(line: u32, col: u32, message: impl Into<String>) -> Self {
        SyntaxError {
            line,
            col,
            message: message.into(),
        }
    }
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SyntaxError at line {}, column {}: {}", self.line, self.col, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no node with id {0}")]
pub struct NotFound(pub NodeId);

/// Looks up the node with the given id.
pub fn node_at(program: &Program, node_id: NodeId) -> Result<NodeRef<'_>, NotFound> {
    let mut found = None;
    program.walk(&mut |n| {
        if found.is_none() && n.span().node_id == node_id {
            found = Some(n);
        }
    });
    found.ok_or(NotFound(node_id))
}
