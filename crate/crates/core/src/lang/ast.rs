//! Spanned syntax tree for MiniLang.

use num_bigint::BigInt;

pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Span {
    /// 1-based.
    pub line: u32,
    /// 0-based byte offsets within the line.
    pub col_start: u32,
    pub col_end: u32,
    pub node_id: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    FloorDiv,
    Mod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    NotEq,
    Lt,
    LtE,
    Gt,
    GtE,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoolOpKind {
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::FloorDiv => "//",
            BinOp::Mod => "%",
        }
    }
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::NotEq => "!=",
            CmpOp::Lt => "<",
            CmpOp::LtE => "<=",
            CmpOp::Gt => ">",
            CmpOp::GtE => ">=",
        }
    }
}

impl BoolOpKind {
    pub fn keyword(self) -> &'static str {
        match self {
            BoolOpKind::And => "and",
            BoolOpKind::Or => "or",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub enum ExprKind {
    /// Always non-negative when produced by the parser; negation is a `Unary`.
    Int(BigInt),
    Bool(bool),
    None,
    /// Names starting with `?` are rewrite-rule metavariables and only appear
    /// in templates.
    Name(String),
    Binary {
        op: BinOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Compare {
        op: CmpOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    BoolOp {
        op: BoolOpKind,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    Call {
        callee: Box<Expr>,
        args: Vec<Expr>,
    },
    Lambda {
        params: Vec<String>,
        body: Box<Expr>,
    },
}

#[derive(Debug, Clone)]
pub struct Stmt {
    pub kind: StmtKind,
    /// For compound statements the span covers the header line only.
    pub span: Span,
}

#[derive(Debug, Clone)]
pub enum StmtKind {
    FunctionDef {
        name: String,
        params: Vec<String>,
        body: Vec<Stmt>,
    },
    Assign {
        target: String,
        value: Expr,
    },
    If {
        cond: Expr,
        then_body: Vec<Stmt>,
        else_body: Vec<Stmt>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    Return {
        value: Option<Expr>,
    },
    Expr(Expr),
    Pass,
}

#[derive(Debug, Clone)]
pub struct Program {
    pub statements: Vec<Stmt>,
    pub source: String,
}

/// Borrowed reference to any node of a program.
#[derive(Debug, Clone, Copy)]
pub enum NodeRef<'a> {
    Expr(&'a Expr),
    Stmt(&'a Stmt),
}

impl NodeRef<'_> {
    pub fn span(&self) -> Span {
        match self {
            NodeRef::Expr(e) => e.span,
            NodeRef::Stmt(s) => s.span,
        }
    }
}

impl Expr {
    pub fn id(&self) -> NodeId {
        self.span.node_id
    }

    /// Direct children in source order (callee before arguments).
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::None | ExprKind::Name(_) => Vec::new(),
            ExprKind::Binary { left, right, .. }
            | ExprKind::Compare { left, right, .. }
            | ExprKind::BoolOp { left, right, .. } => vec![left, right],
            ExprKind::Unary { operand, .. } => vec![operand],
            ExprKind::Call { callee, args } => {
                let mut out = Vec::with_capacity(args.len() + 1);
                out.push(callee.as_ref());
                out.extend(args.iter());
                out
            }
            ExprKind::Lambda { body, .. } => vec![body],
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut Expr> {
        match &mut self.kind {
            ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::None | ExprKind::Name(_) => Vec::new(),
            ExprKind::Binary { left, right, .. }
            | ExprKind::Compare { left, right, .. }
            | ExprKind::BoolOp { left, right, .. } => vec![left, right],
            ExprKind::Unary { operand, .. } => vec![operand],
            ExprKind::Call { callee, args } => {
                let mut out = Vec::with_capacity(args.len() + 1);
                out.push(callee.as_mut());
                out.extend(args.iter_mut());
                out
            }
            ExprKind::Lambda { body, .. } => vec![body],
        }
    }

    /// Pre-order walk over this expression and all descendants.
    pub fn walk<'a>(&'a self, visit: &mut dyn FnMut(&'a Expr)) {
        visit(self);
        for child in self.children() {
            child.walk(visit);
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(
            self.kind,
            ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::None | ExprKind::Name(_)
        )
    }

    /// Structural equality ignoring spans.
    pub fn same_shape(&self, other: &Expr) -> bool {
        use ExprKind::*;
        match (&self.kind, &other.kind) {
            (Int(a), Int(b)) => a == b,
            (Bool(a), Bool(b)) => a == b,
            (None, None) => true,
            (Name(a), Name(b)) => a == b,
            (
                Binary { op: o1, left: l1, right: r1 },
                Binary { op: o2, left: l2, right: r2 },
            ) => o1 == o2 && l1.same_shape(l2) && r1.same_shape(r2),
            (
                Compare { op: o1, left: l1, right: r1 },
                Compare { op: o2, left: l2, right: r2 },
            ) => o1 == o2 && l1.same_shape(l2) && r1.same_shape(r2),
            (
                BoolOp { op: o1, left: l1, right: r1 },
                BoolOp { op: o2, left: l2, right: r2 },
            ) => o1 == o2 && l1.same_shape(l2) && r1.same_shape(r2),
            (Unary { op: o1, operand: a }, Unary { op: o2, operand: b }) => {
                o1 == o2 && a.same_shape(b)
            }
            (Call { callee: c1, args: a1 }, Call { callee: c2, args: a2 }) => {
                c1.same_shape(c2)
                    && a1.len() == a2.len()
                    && a1.iter().zip(a2).all(|(x, y)| x.same_shape(y))
            }
            (Lambda { params: p1, body: b1 }, Lambda { params: p2, body: b2 }) => {
                p1 == p2 && b1.same_shape(b2)
            }
            _ => false,
        }
    }
}

impl Stmt {
    pub fn id(&self) -> NodeId {
        self.span.node_id
    }

    /// Expressions owned directly by this statement (not by nested statements).
    pub fn exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Assign { value, .. } => vec![value],
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
            StmtKind::Return { value } => value.iter().collect(),
            StmtKind::Expr(e) => vec![e],
            StmtKind::FunctionDef { .. } | StmtKind::Pass => Vec::new(),
        }
    }

    pub fn exprs_mut(&mut self) -> Vec<&mut Expr> {
        match &mut self.kind {
            StmtKind::Assign { value, .. } => vec![value],
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
            StmtKind::Return { value } => value.iter_mut().collect(),
            StmtKind::Expr(e) => vec![e],
            StmtKind::FunctionDef { .. } | StmtKind::Pass => Vec::new(),
        }
    }

    /// Nested statement blocks in source order.
    pub fn blocks(&self) -> Vec<&[Stmt]> {
        match &self.kind {
            StmtKind::FunctionDef { body, .. } | StmtKind::While { body, .. } => vec![body],
            StmtKind::If { then_body, else_body, .. } => vec![then_body, else_body],
            _ => Vec::new(),
        }
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut Vec<Stmt>> {
        match &mut self.kind {
            StmtKind::FunctionDef { body, .. } | StmtKind::While { body, .. } => vec![body],
            StmtKind::If { then_body, else_body, .. } => vec![then_body, else_body],
            _ => Vec::new(),
        }
    }

    /// Pre-order walk over every node: the statement, its expressions, then
    /// nested statements. This is also the node-id assignment order.
    pub fn walk<'a>(&'a self, visit: &mut dyn FnMut(NodeRef<'a>)) {
        visit(NodeRef::Stmt(self));
        for e in self.exprs() {
            e.walk(&mut |x| visit(NodeRef::Expr(x)));
        }
        for block in self.blocks() {
            for s in block {
                s.walk(visit);
            }
        }
    }

    pub fn same_shape(&self, other: &Stmt) -> bool {
        use StmtKind::*;
        match (&self.kind, &other.kind) {
            (
                FunctionDef { name: n1, params: p1, body: b1 },
                FunctionDef { name: n2, params: p2, body: b2 },
            ) => n1 == n2 && p1 == p2 && blocks_same_shape(b1, b2),
            (Assign { target: t1, value: v1 }, Assign { target: t2, value: v2 }) => {
                t1 == t2 && v1.same_shape(v2)
            }
            (
                If { cond: c1, then_body: t1, else_body: e1 },
                If { cond: c2, then_body: t2, else_body: e2 },
            ) => c1.same_shape(c2) && blocks_same_shape(t1, t2) && blocks_same_shape(e1, e2),
            (While { cond: c1, body: b1 }, While { cond: c2, body: b2 }) => {
                c1.same_shape(c2) && blocks_same_shape(b1, b2)
            }
            (Return { value: a }, Return { value: b }) => match (a, b) {
                (Some(a), Some(b)) => a.same_shape(b),
                (Option::None, Option::None) => true,
                _ => false,
            },
            (Expr(a), Expr(b)) => a.same_shape(b),
            (Pass, Pass) => true,
            _ => false,
        }
    }
}

pub fn blocks_same_shape(a: &[Stmt], b: &[Stmt]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.same_shape(y))
}

impl Program {
    pub fn walk<'a>(&'a self, visit: &mut dyn FnMut(NodeRef<'a>)) {
        for s in &self.statements {
            s.walk(visit);
        }
    }

    pub fn same_shape(&self, other: &Program) -> bool {
        blocks_same_shape(&self.statements, &other.statements)
    }

    pub fn max_node_id(&self) -> Option<NodeId> {
        let mut max = None;
        self.walk(&mut |n| {
            let id = n.span().node_id;
            max = Some(max.map_or(id, |m: NodeId| m.max(id)));
        });
        max
    }

    /// Finds the statement whose own expressions contain `node_id`, or the
    /// statement with that id.
    pub fn statement_owning(&self, node_id: NodeId) -> Option<&Stmt> {
        fn search(block: &[Stmt], id: NodeId) -> Option<&Stmt> {
            for s in block {
                if s.id() == id {
                    return Some(s);
                }
                let mut hit = false;
                for e in s.exprs() {
                    e.walk(&mut |x| hit |= x.id() == id);
                }
                if hit {
                    return Some(s);
                }
                for b in s.blocks() {
                    if let Some(found) = search(b, id) {
                        return Some(found);
                    }
                }
            }
            None
        }
        search(&self.statements, node_id)
    }
}

/// Constructs an expression with a placeholder span, for synthesized trees.
pub fn synth(kind: ExprKind) -> Expr {
    Expr {
        kind,
        span: Span {
            line: 1,
            col_start: 0,
            col_end: 0,
            node_id: 0,
        },
    }
}
