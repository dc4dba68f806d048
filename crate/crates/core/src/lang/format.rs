//! Canonical rendering of MiniLang nodes.
//!
//! Expressions render on one line with the minimum parentheses needed for
//! `parse_expr(format_expr(e))` to reproduce `e`. Programs render with
//! 4-space indentation.

use std::fmt::Write;

use super::ast::*;

const PREC_LAMBDA: u8 = 0;
const PREC_OR: u8 = 1;
const PREC_AND: u8 = 2;
const PREC_NOT: u8 = 3;
const PREC_CMP: u8 = 4;
const PREC_ARITH: u8 = 5;
const PREC_TERM: u8 = 6;
const PREC_UNARY: u8 = 7;
const PREC_POSTFIX: u8 = 8;
const PREC_ATOM: u8 = 9;

fn precedence(expr: &Expr) -> u8 {
    match &expr.kind {
        ExprKind::Lambda { .. } => PREC_LAMBDA,
        ExprKind::BoolOp { op: BoolOpKind::Or, .. } => PREC_OR,
        ExprKind::BoolOp { op: BoolOpKind::And, .. } => PREC_AND,
        ExprKind::Unary { op: UnaryOp::Not, .. } => PREC_NOT,
        ExprKind::Compare { .. } => PREC_CMP,
        ExprKind::Binary { op: BinOp::Add | BinOp::Sub, .. } => PREC_ARITH,
        ExprKind::Binary { .. } => PREC_TERM,
        ExprKind::Unary { op: UnaryOp::Neg, .. } => PREC_UNARY,
        ExprKind::Int(v) if v.sign() == num_bigint::Sign::Minus => PREC_UNARY,
        ExprKind::Call { .. } => PREC_POSTFIX,
        _ => PREC_ATOM,
    }
}

pub fn format_expr(expr: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, expr, PREC_LAMBDA);
    out
}

fn write_expr(out: &mut String, expr: &Expr, min_prec: u8) {
    let prec = precedence(expr);
    let wrap = prec < min_prec;
    if wrap {
        out.push('(');
    }
    match &expr.kind {
        ExprKind::Int(v) => {
            let _ = write!(out, "{v}");
        }
        ExprKind::Bool(true) => out.push_str("True"),
        ExprKind::Bool(false) => out.push_str("False"),
        ExprKind::None => out.push_str("None"),
        ExprKind::Name(n) => out.push_str(n),
        ExprKind::Binary { op, left, right } => {
            write_expr(out, left, prec);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, right, prec + 1);
        }
        ExprKind::Compare { op, left, right } => {
            write_expr(out, left, PREC_ARITH);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, right, PREC_ARITH);
        }
        ExprKind::BoolOp { op, left, right } => {
            write_expr(out, left, prec);
            let _ = write!(out, " {} ", op.keyword());
            write_expr(out, right, prec + 1);
        }
        ExprKind::Unary { op: UnaryOp::Neg, operand } => {
            out.push('-');
            write_expr(out, operand, PREC_UNARY);
        }
        ExprKind::Unary { op: UnaryOp::Not, operand } => {
            out.push_str("not ");
            write_expr(out, operand, PREC_NOT);
        }
        ExprKind::Call { callee, args } => {
            write_expr(out, callee, PREC_POSTFIX);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a, PREC_LAMBDA);
            }
            out.push(')');
        }
        ExprKind::Lambda { params, body } => {
            out.push_str("lambda");
            if !params.is_empty() {
                out.push(' ');
                out.push_str(&params.join(", "));
            }
            out.push_str(": ");
            write_expr(out, body, PREC_LAMBDA);
        }
    }
    if wrap {
        out.push(')');
    }
}

/// Single-line rendering of a statement. Compound statements render their
/// header line only.
pub fn format_stmt(stmt: &Stmt) -> String {
    match &stmt.kind {
        StmtKind::FunctionDef { name, params, .. } => format!("def {name}({}):", params.join(", ")),
        StmtKind::Assign { target, value } => format!("{target} = {}", format_expr(value)),
        StmtKind::If { cond, .. } => format!("if {}:", format_expr(cond)),
        StmtKind::While { cond, .. } => format!("while {}:", format_expr(cond)),
        StmtKind::Return { value: Some(v) } => format!("return {}", format_expr(v)),
        StmtKind::Return { value: None } => "return".to_string(),
        StmtKind::Expr(e) => format_expr(e),
        StmtKind::Pass => "pass".to_string(),
    }
}

pub fn format_node(node: NodeRef<'_>) -> String {
    match node {
        NodeRef::Expr(e) => format_expr(e),
        NodeRef::Stmt(s) => format_stmt(s),
    }
}

/// Multi-line canonical rendering of a statement block.
pub fn format_block(stmts: &[Stmt], indent: usize) -> String {
    let mut out = String::new();
    write_block(&mut out, stmts, indent);
    out
}

/// Canonical source text for a whole program, ending with a newline.
pub fn format_program(program: &Program) -> String {
    format_block(&program.statements, 0)
}

fn write_block(out: &mut String, stmts: &[Stmt], indent: usize) {
    for s in stmts {
        write_stmt(out, s, indent);
    }
}

fn write_stmt(out: &mut String, stmt: &Stmt, indent: usize) {
    let pad = "    ".repeat(indent);
    out.push_str(&pad);
    out.push_str(&format_stmt(stmt));
    out.push('\n');
    match &stmt.kind {
        StmtKind::FunctionDef { body, .. } | StmtKind::While { body, .. } => {
            write_block(out, body, indent + 1)
        }
        StmtKind::If { then_body, else_body, .. } => {
            write_block(out, then_body, indent + 1);
            if !else_body.is_empty() {
                out.push_str(&pad);
                out.push_str("else:\n");
                write_block(out, else_body, indent + 1);
            }
        }
        _ => {}
    }
}
