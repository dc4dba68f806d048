use super::rule::{same_head, RewriteRule, Template};
use crate::lang::{synth, Expr, ExprKind, Program, Stmt, StmtKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LearnError {
    #[error("the two programs are structurally identical")]
    IdenticalPrograms,
    #[error("no single-edit rule: {0}")]
    NoRule(String),
}

struct Difference<'a> {
    before: Node<'a>,
    after: Node<'a>,
    /// Enclosing expressions, when the difference is below the statement's
    /// top-level expression.
    parents: Option<(&'a Expr, &'a Expr)>,
    owners: (&'a Stmt, &'a Stmt),
}

#[derive(Clone, Copy)]
enum Node<'a> {
    Expr(&'a Expr),
    Stmt,
}

fn diff_expr<'a>(
    a: &'a Expr,
    b: &'a Expr,
    parents: Option<(&'a Expr, &'a Expr)>,
    owners: (&'a Stmt, &'a Stmt),
    out: &mut Vec<Difference<'a>>,
) {
    if same_head(a, b) {
        let mut inner = Vec::new();
        for (x, y) in a.children().into_iter().zip(b.children()) {
            diff_expr(x, y, Some((a, b)), owners, &mut inner);
        }
        // Several changes under one expression make that expression the
        // smallest differing subtree.
        if inner.len() <= 1 {
            out.extend(inner);
            return;
        }
    }
    out.push(Difference {
        before: Node::Expr(a),
        after: Node::Expr(b),
        parents,
        owners,
    });
}

fn same_stmt_head(a: &Stmt, b: &Stmt) -> bool {
    use StmtKind::*;
    let head = match (&a.kind, &b.kind) {
        (FunctionDef { name: n1, params: p1, .. }, FunctionDef { name: n2, params: p2, .. }) => n1 == n2 && p1 == p2,
        (Assign { target: t1, .. }, Assign { target: t2, .. }) => t1 == t2,
        (If { .. }, If { .. }) | (While { .. }, While { .. }) | (Expr(_), Expr(_)) | (Pass, Pass) => true,
        (Return { value: v1 }, Return { value: v2 }) => v1.is_some() == v2.is_some(),
        _ => false,
    };
    head && a.blocks().iter().zip(b.blocks()).all(|(x, y)| x.len() == y.len())
}

fn diff_block<'a>(a: &'a [Stmt], b: &'a [Stmt], out: &mut Vec<Difference<'a>>) -> Result<(), LearnError> {
    if a.len() != b.len() {
        return Err(LearnError::NoRule("statements were added or removed".into()));
    }
    for (x, y) in a.iter().zip(b) {
        if !same_stmt_head(x, y) {
            out.push(Difference {
                before: Node::Stmt,
                after: Node::Stmt,
                parents: None,
                owners: (x, y),
            });
            continue;
        }
        for (ex, ey) in x.exprs().into_iter().zip(y.exprs()) {
            diff_expr(ex, ey, None, (x, y), out);
        }
        for (bx, by) in x.blocks().into_iter().zip(y.blocks()) {
            diff_block(bx, by, out)?;
        }
    }
    Ok(())
}

fn is_simple(s: &Stmt) -> bool {
    matches!(
        s.kind,
        StmtKind::Assign { .. } | StmtKind::Return { .. } | StmtKind::Expr(_) | StmtKind::Pass
    )
}

/// Metavariable assignment shared between the two sides of a rule.
#[derive(Default)]
struct Generalizer {
    bound: Vec<(Expr, String)>,
}

impl Generalizer {
    fn name_for(&self, e: &Expr) -> Option<&str> {
        self.bound.iter().find(|(b, _)| b.same_shape(e)).map(|(_, n)| n.as_str())
    }

    fn bind(&mut self, e: &Expr) -> String {
        if let Some(n) = self.name_for(e) {
            return n.to_string();
        }
        let name = format!("?{}", (b'a' + self.bound.len() as u8) as char);
        self.bound.push((e.clone(), name.clone()));
        name
    }

    /// Replaces maximal pattern subtrees that also occur in the replacement.
    /// Callees are kept so rules stay anchored to function names.
    fn abstract_pattern(&mut self, e: &mut Expr, replacement: &[&Expr], is_root: bool) {
        if !is_root && self.bound.len() < 26 && replacement.iter().any(|r| occurs(e, r)) {
            let name = self.bind(e);
            *e = synth(ExprKind::Name(name));
            return;
        }
        if let ExprKind::Call { args, .. } = &mut e.kind {
            for a in args {
                self.abstract_pattern(a, replacement, false);
            }
            return;
        }
        for c in e.children_mut() {
            self.abstract_pattern(c, replacement, false);
        }
    }

    fn abstract_replacement(&self, e: &mut Expr) {
        if let Some(n) = self.name_for(e) {
            *e = synth(ExprKind::Name(n.to_string()));
            return;
        }
        for c in e.children_mut() {
            self.abstract_replacement(c);
        }
    }
}

fn occurs(needle: &Expr, haystack: &Expr) -> bool {
    let mut found = false;
    haystack.walk(&mut |e| found |= e.same_shape(needle));
    found
}

fn generalize_exprs(pattern: &Expr, replacement: &Expr) -> (Expr, Expr) {
    let mut g = Generalizer::default();
    let mut p = pattern.clone();
    let mut r = replacement.clone();
    g.abstract_pattern(&mut p, &[replacement], true);
    g.abstract_replacement(&mut r);
    (p, r)
}

fn generalize_stmts(pattern: &Stmt, replacement: &Stmt) -> (Stmt, Stmt) {
    let mut g = Generalizer::default();
    let mut p = pattern.clone();
    let mut r = replacement.clone();
    let targets: Vec<&Expr> = replacement.exprs();
    for e in p.exprs_mut() {
        g.abstract_pattern(e, &targets, false);
    }
    for e in r.exprs_mut() {
        g.abstract_replacement(e);
    }
    (p, r)
}

fn rule(pattern: Template, replacement: Template) -> Result<RewriteRule, LearnError> {
    RewriteRule::new("learned", pattern, replacement, "learned from an example fix")
        .map_err(|e| LearnError::NoRule(e.to_string()))
}

/// Learns a rule from a pair of programs that differ in exactly one subtree.
///
/// A difference in a single leaf (say `1` becoming `0`) is lifted to its
/// enclosing expression, or its statement, and kept concrete. Larger
/// differences are generalized: pattern subtrees that reappear in the
/// replacement become metavariables.
pub fn learn_rule(before: &Program, after: &Program) -> Result<RewriteRule, LearnError> {
    if before.same_shape(after) {
        return Err(LearnError::IdenticalPrograms);
    }
    let mut diffs = Vec::new();
    diff_block(&before.statements, &after.statements, &mut diffs)?;
    let d = match diffs.as_slice() {
        [d] => d,
        [] => return Err(LearnError::IdenticalPrograms),
        many => return Err(LearnError::NoRule(format!("{} separate subtrees differ", many.len()))),
    };
    let (sa, sb) = d.owners;
    match (d.before, d.after) {
        (Node::Expr(a), Node::Expr(b)) if a.is_leaf() || b.is_leaf() => match d.parents {
            Some((pa, pb)) => rule(Template::Expr(pa.clone()), Template::Expr(pb.clone())),
            None if is_simple(sa) => rule(Template::Stmt(sa.clone()), Template::Stmt(sb.clone())),
            None => rule(Template::Expr(a.clone()), Template::Expr(b.clone())),
        },
        (Node::Expr(a), Node::Expr(b)) => {
            let (p, r) = generalize_exprs(a, b);
            rule(Template::Expr(p), Template::Expr(r))
        }
        _ if is_simple(sa) && is_simple(sb) => {
            let (p, r) = generalize_stmts(sa, sb);
            rule(Template::Stmt(p), Template::Stmt(r))
        }
        _ => Err(LearnError::NoRule("a compound statement changed shape".into())),
    }
}
