use std::collections::HashSet;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::SyntaxError;

/// Parses a full MiniLang program. Node ids are assigned in pre-order.
pub fn parse(source: &str) -> Result<Program, SyntaxError> {
    let tokens = tokenize(source, false)?;
    let mut parser = Parser::new(tokens, false);
    let mut statements = Vec::new();
    while !parser.at(&Tok::Eof) {
        statements.push(parser.statement()?);
    }
    let mut program = Program {
        statements,
        source: source.to_string(),
    };
    renumber(&mut program);
    Ok(program)
}

/// Parses a single expression (an entry call, a ladder rendering, a test
/// expectation). Metavariables are rejected.
pub fn parse_expr(text: &str) -> Result<Expr, SyntaxError> {
    parse_expr_inner(text, false)
}

/// Parses an expression template in which `?name` metavariables are allowed.
pub fn parse_expr_template(text: &str) -> Result<Expr, SyntaxError> {
    parse_expr_inner(text, true)
}

/// Parses a single simple statement template (`x = e`, `return e`, `pass`,
/// or an expression statement), allowing metavariables.
pub fn parse_stmt_template(text: &str) -> Result<Stmt, SyntaxError> {
    let tokens = tokenize(text, true)?;
    let mut parser = Parser::new(tokens, true);
    parser.function_depth = 1;
    let mut stmt = parser.simple_statement()?;
    parser.expect(&Tok::Newline)?;
    parser.expect(&Tok::Eof)?;
    let mut next = 0;
    renumber_stmt(&mut stmt, &mut next);
    Ok(stmt)
}

fn parse_expr_inner(text: &str, allow_metavars: bool) -> Result<Expr, SyntaxError> {
    if text.contains('\n') {
        return Err(SyntaxError::new(1, 0, "expression must fit on one line"));
    }
    let tokens = tokenize(text, allow_metavars)?;
    let mut parser = Parser::new(tokens, allow_metavars);
    if parser.at(&Tok::Eof) {
        return Err(SyntaxError::new(1, 0, "expected an expression"));
    }
    let mut expr = parser.expr()?;
    parser.expect(&Tok::Newline)?;
    parser.expect(&Tok::Eof)?;
    let mut next = 0;
    renumber_expr(&mut expr, &mut next);
    Ok(expr)
}

/// Reassigns node ids in pre-order starting from 0.
pub fn renumber(program: &mut Program) {
    let mut next = 0;
    for s in &mut program.statements {
        renumber_stmt(s, &mut next);
    }
}

fn renumber_stmt(stmt: &mut Stmt, next: &mut NodeId) {
    stmt.span.node_id = *next;
    *next += 1;
    for e in stmt.exprs_mut() {
        renumber_expr(e, next);
    }
    for block in stmt.blocks_mut() {
        for s in block.iter_mut() {
            renumber_stmt(s, next);
        }
    }
}

fn renumber_expr(expr: &mut Expr, next: &mut NodeId) {
    expr.span.node_id = *next;
    *next += 1;
    for c in expr.children_mut() {
        renumber_expr(c, next);
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    function_depth: usize,
    allow_metavars: bool,
}

impl Parser {
    fn new(tokens: Vec<Token>, allow_metavars: bool) -> Self {
        Parser {
            tokens,
            pos: 0,
            function_depth: 0,
            allow_metavars,
        }
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn at(&self, tok: &Tok) -> bool {
        &self.peek().tok == tok
    }

    fn advance(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.at(tok) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error_here(&self, message: impl Into<String>) -> SyntaxError {
        let t = self.peek();
        SyntaxError::new(t.line, t.col_start, message)
    }

    fn expect(&mut self, tok: &Tok) -> Result<Token, SyntaxError> {
        if self.at(tok) {
            Ok(self.advance())
        } else {
            let expected = match tok {
                Tok::Newline => "end of line".to_string(),
                Tok::Indent => "an indented block".to_string(),
                Tok::Eof => "end of input".to_string(),
                other => other.describe(),
            };
            Err(self.error_here(format!(
                "expected {expected}, found {}",
                self.peek().tok.describe()
            )))
        }
    }

    fn name(&mut self) -> Result<(String, Token), SyntaxError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Name(n) => {
                let n = n.clone();
                self.advance();
                Ok((n, t))
            }
            Tok::MetaVar(n) if self.allow_metavars => {
                let n = format!("?{n}");
                self.advance();
                Ok((n, t))
            }
            other => Err(self.error_here(format!("expected a name, found {}", other.describe()))),
        }
    }

    fn params(&mut self, closing: &Tok) -> Result<Vec<String>, SyntaxError> {
        let mut params = Vec::new();
        let mut seen = HashSet::new();
        if self.at(closing) {
            return Ok(params);
        }
        loop {
            let (p, tok) = self.name()?;
            if !seen.insert(p.clone()) {
                return Err(SyntaxError::new(
                    tok.line,
                    tok.col_start,
                    format!("duplicate argument '{p}' in function definition"),
                ));
            }
            params.push(p);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(params)
    }

    fn span_from(start: &Token, end_col: u32) -> Span {
        Span {
            line: start.line,
            col_start: start.col_start,
            col_end: end_col,
            node_id: 0,
        }
    }

    fn last_end(&self) -> u32 {
        self.tokens[self.pos.saturating_sub(1)].col_end
    }

    // ---- statements ----

    fn statement(&mut self) -> Result<Stmt, SyntaxError> {
        let start = self.peek().clone();
        match start.tok {
            Tok::Def => {
                self.advance();
                let (name, _) = self.name()?;
                self.expect(&Tok::LParen)?;
                let params = self.params(&Tok::RParen)?;
                self.expect(&Tok::RParen)?;
                self.expect(&Tok::Colon)?;
                let span = Self::span_from(&start, self.last_end());
                self.function_depth += 1;
                let body = self.suite();
                self.function_depth -= 1;
                Ok(Stmt {
                    kind: StmtKind::FunctionDef {
                        name,
                        params,
                        body: body?,
                    },
                    span,
                })
            }
            Tok::If => {
                self.advance();
                self.if_rest(&start)
            }
            Tok::While => {
                self.advance();
                let cond = self.expr()?;
                self.expect(&Tok::Colon)?;
                let span = Self::span_from(&start, self.last_end());
                let body = self.suite()?;
                Ok(Stmt {
                    kind: StmtKind::While { cond, body },
                    span,
                })
            }
            Tok::Elif | Tok::Else => Err(self.error_here(format!(
                "unexpected {} without a matching 'if'",
                start.tok.describe()
            ))),
            Tok::Indent => Err(self.error_here("unexpected indent")),
            _ => {
                let s = self.simple_statement()?;
                self.expect(&Tok::Newline)?;
                Ok(s)
            }
        }
    }

    fn if_rest(&mut self, start: &Token) -> Result<Stmt, SyntaxError> {
        let cond = self.expr()?;
        self.expect(&Tok::Colon)?;
        let span = Self::span_from(start, self.last_end());
        let then_body = self.suite()?;
        let else_body = if self.at(&Tok::Elif) {
            let elif = self.advance();
            vec![self.if_rest(&elif)?]
        } else if self.at(&Tok::Else) {
            self.advance();
            self.expect(&Tok::Colon)?;
            self.suite()?
        } else {
            Vec::new()
        };
        Ok(Stmt {
            kind: StmtKind::If {
                cond,
                then_body,
                else_body,
            },
            span,
        })
    }

    fn suite(&mut self) -> Result<Vec<Stmt>, SyntaxError> {
        if !self.at(&Tok::Newline) {
            let s = self.simple_statement()?;
            self.expect(&Tok::Newline)?;
            return Ok(vec![s]);
        }
        self.advance();
        self.expect(&Tok::Indent)?;
        let mut body = Vec::new();
        while !self.at(&Tok::Dedent) && !self.at(&Tok::Eof) {
            body.push(self.statement()?);
        }
        self.expect(&Tok::Dedent)?;
        Ok(body)
    }

    fn simple_statement(&mut self) -> Result<Stmt, SyntaxError> {
        let start = self.peek().clone();
        match &start.tok {
            Tok::Return => {
                if self.function_depth == 0 {
                    return Err(self.error_here("'return' outside function"));
                }
                self.advance();
                let value = if self.at(&Tok::Newline) {
                    None
                } else {
                    Some(self.expr()?)
                };
                Ok(Stmt {
                    kind: StmtKind::Return { value },
                    span: Self::span_from(&start, self.last_end()),
                })
            }
            Tok::Pass => {
                self.advance();
                Ok(Stmt {
                    kind: StmtKind::Pass,
                    span: Self::span_from(&start, start.col_end),
                })
            }
            Tok::Name(_) | Tok::MetaVar(_)
                if matches!(self.tokens.get(self.pos + 1).map(|t| &t.tok), Some(Tok::Assign)) =>
            {
                let (target, _) = self.name()?;
                self.advance();
                let value = self.expr()?;
                Ok(Stmt {
                    kind: StmtKind::Assign { target, value },
                    span: Self::span_from(&start, self.last_end()),
                })
            }
            _ => {
                let e = self.expr()?;
                if self.at(&Tok::Assign) {
                    return Err(self.error_here("cannot assign to expression"));
                }
                let span = Self::span_from(&start, self.last_end());
                Ok(Stmt {
                    kind: StmtKind::Expr(e),
                    span,
                })
            }
        }
    }

    // ---- expressions ----

    pub fn expr(&mut self) -> Result<Expr, SyntaxError> {
        if self.at(&Tok::Lambda) {
            let start = self.advance();
            let params = self.params(&Tok::Colon)?;
            self.expect(&Tok::Colon)?;
            let body = self.expr()?;
            let end = body.span.col_end;
            return Ok(Expr {
                kind: ExprKind::Lambda {
                    params,
                    body: Box::new(body),
                },
                span: Self::span_from(&start, end),
            });
        }
        self.or_expr()
    }

    fn join(left: Expr, right: Expr, make: impl FnOnce(Box<Expr>, Box<Expr>) -> ExprKind) -> Expr {
        let span = Span {
            line: left.span.line,
            col_start: left.span.col_start,
            col_end: right.span.col_end,
            node_id: 0,
        };
        Expr {
            kind: make(Box::new(left), Box::new(right)),
            span,
        }
    }

    fn or_expr(&mut self) -> Result<Expr, SyntaxError> {
        let mut left = self.and_expr()?;
        while self.eat(&Tok::Or) {
            let right = self.and_expr()?;
            left = Self::join(left, right, |l, r| ExprKind::BoolOp {
                op: BoolOpKind::Or,
                left: l,
                right: r,
            });
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<Expr, SyntaxError> {
        let mut left = self.not_expr()?;
        while self.eat(&Tok::And) {
            let right = self.not_expr()?;
            left = Self::join(left, right, |l, r| ExprKind::BoolOp {
                op: BoolOpKind::And,
                left: l,
                right: r,
            });
        }
        Ok(left)
    }

    fn not_expr(&mut self) -> Result<Expr, SyntaxError> {
        if self.at(&Tok::Not) {
            let start = self.advance();
            let operand = self.not_expr()?;
            let end = operand.span.col_end;
            return Ok(Expr {
                kind: ExprKind::Unary {
                    op: UnaryOp::Not,
                    operand: Box::new(operand),
                },
                span: Self::span_from(&start, end),
            });
        }
        self.comparison()
    }

    fn cmp_op(&self) -> Option<CmpOp> {
        Some(match self.peek().tok {
            Tok::EqEq => CmpOp::Eq,
            Tok::NotEq => CmpOp::NotEq,
            Tok::Lt => CmpOp::Lt,
            Tok::LtE => CmpOp::LtE,
            Tok::Gt => CmpOp::Gt,
            Tok::GtE => CmpOp::GtE,
            _ => return None,
        })
    }

    fn comparison(&mut self) -> Result<Expr, SyntaxError> {
        let left = self.arith()?;
        if let Some(op) = self.cmp_op() {
            self.advance();
            let right = self.arith()?;
            if self.cmp_op().is_some() {
                return Err(self.error_here("chained comparisons are not supported"));
            }
            return Ok(Self::join(left, right, |l, r| ExprKind::Compare {
                op,
                left: l,
                right: r,
            }));
        }
        Ok(left)
    }

    fn arith(&mut self) -> Result<Expr, SyntaxError> {
        let mut left = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.advance();
            let right = self.term()?;
            left = Self::join(left, right, |l, r| ExprKind::Binary { op, left: l, right: r });
        }
        Ok(left)
    }

    fn term(&mut self) -> Result<Expr, SyntaxError> {
        let mut left = self.factor()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::SlashSlash => BinOp::FloorDiv,
                Tok::Percent => BinOp::Mod,
                _ => break,
            };
            self.advance();
            let right = self.factor()?;
            left = Self::join(left, right, |l, r| ExprKind::Binary { op, left: l, right: r });
        }
        Ok(left)
    }

    fn factor(&mut self) -> Result<Expr, SyntaxError> {
        if self.at(&Tok::Minus) {
            let start = self.advance();
            let operand = self.factor()?;
            let end = operand.span.col_end;
            return Ok(Expr {
                kind: ExprKind::Unary {
                    op: UnaryOp::Neg,
                    operand: Box::new(operand),
                },
                span: Self::span_from(&start, end),
            });
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, SyntaxError> {
        let mut expr = self.atom()?;
        while self.at(&Tok::LParen) {
            self.advance();
            let mut args = Vec::new();
            if !self.at(&Tok::RParen) {
                loop {
                    args.push(self.expr()?);
                    if !self.eat(&Tok::Comma) || self.at(&Tok::RParen) {
                        break;
                    }
                }
            }
            let close = self.expect(&Tok::RParen)?;
            let span = Span {
                line: expr.span.line,
                col_start: expr.span.col_start,
                col_end: close.col_end,
                node_id: 0,
            };
            expr = Expr {
                kind: ExprKind::Call {
                    callee: Box::new(expr),
                    args,
                },
                span,
            };
        }
        Ok(expr)
    }

    fn atom(&mut self) -> Result<Expr, SyntaxError> {
        let t = self.peek().clone();
        let kind = match &t.tok {
            Tok::Int(v) => ExprKind::Int(v.clone()),
            Tok::True => ExprKind::Bool(true),
            Tok::False => ExprKind::Bool(false),
            Tok::NoneKw => ExprKind::None,
            Tok::Name(_) | Tok::MetaVar(_) => {
                let (n, _) = self.name()?;
                return Ok(Expr {
                    kind: ExprKind::Name(n),
                    span: Self::span_from(&t, t.col_end),
                });
            }
            Tok::LParen => {
                self.advance();
                if self.at(&Tok::Newline) {
                    return Err(self.error_here("expressions may not span lines"));
                }
                let inner = self.expr()?;
                self.expect(&Tok::RParen)?;
                return Ok(inner);
            }
            Tok::Newline => return Err(self.error_here("unexpected end of line")),
            other => {
                return Err(self.error_here(format!("expected an expression, found {}", other.describe())))
            }
        };
        self.advance();
        Ok(Expr {
            kind,
            span: Self::span_from(&t, t.col_end),
        })
    }
}
