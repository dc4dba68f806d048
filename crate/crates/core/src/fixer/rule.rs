use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::lang::{
    format_expr, format_stmt, parse, parse_stmt_template, synth, Expr, ExprKind, NodeId, NodeRef, Program,
    Stmt, StmtKind, SyntaxError,
};

/// One side of a rewrite rule.
#[derive(Debug, Clone)]
pub enum Template {
    Expr(Expr),
    /// Simple statements only: assignment, return, pass.
    Stmt(Stmt),
}

impl Template {
    pub fn render(&self) -> String {
        match self {
            Template::Expr(e) => format_expr(e),
            Template::Stmt(s) => format_stmt(s),
        }
    }

    fn metavars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let exprs = match self {
            Template::Expr(e) => vec![e],
            Template::Stmt(s) => {
                if let StmtKind::Assign { target, .. } = &s.kind {
                    if target.starts_with('?') {
                        out.insert(target.clone());
                    }
                }
                s.exprs()
            }
        };
        for e in exprs {
            e.walk(&mut |x| {
                if let ExprKind::Name(n) = &x.kind {
                    if n.starts_with('?') {
                        out.insert(n.clone());
                    }
                }
            });
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct RewriteRule {
    pub rule_id: String,
    pub pattern: Template,
    pub replacement: Template,
    pub description: String,
}

impl fmt::Display for RewriteRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} => {}", self.pattern.render(), self.replacement.render())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("rule must have the form `pattern => replacement`")]
    MissingArrow,
    #[error("in rule {side}: {source}")]
    Syntax {
        side: &'static str,
        source: SyntaxError,
    },
    #[error("pattern and replacement must both be expressions or both be statements")]
    MixedSides,
    #[error("pattern must not be a bare metavariable")]
    BarePattern,
    #[error("metavariable {0} appears in the replacement but not in the pattern")]
    UnboundMetavar(String),
}

impl RewriteRule {
    pub fn new(
        rule_id: impl Into<String>,
        pattern: Template,
        replacement: Template,
        description: impl Into<String>,
    ) -> Result<Self, RuleError> {
        match (&pattern, &replacement) {
            (Template::Expr(_), Template::Expr(_)) | (Template::Stmt(_), Template::Stmt(_)) => {}
            _ => return Err(RuleError::MixedSides),
        }
        if let Template::Expr(e) = &pattern {
            if matches!(&e.kind, ExprKind::Name(n) if n.starts_with('?')) {
                return Err(RuleError::BarePattern);
            }
        }
        let bound = pattern.metavars();
        if let Some(free) = replacement.metavars().into_iter().find(|m| !bound.contains(m)) {
            return Err(RuleError::UnboundMetavar(free));
        }
        Ok(RewriteRule {
            rule_id: rule_id.into(),
            pattern,
            replacement,
            description: description.into(),
        })
    }

    /// Parses `pattern => replacement`.
    pub fn parse(rule_id: impl Into<String>, text: &str, description: impl Into<String>) -> Result<Self, RuleError> {
        let (lhs, rhs) = text.split_once("=>").ok_or(RuleError::MissingArrow)?;
        let side = |text: &str, side: &'static str| {
            let stmt = parse_stmt_template(text.trim()).map_err(|source| RuleError::Syntax { side, source })?;
            Ok(match stmt.kind {
                StmtKind::Expr(e) => Template::Expr(e),
                _ => Template::Stmt(stmt),
            })
        };
        let pattern = side(lhs, "pattern")?;
        let replacement = side(rhs, "replacement")?;
        RewriteRule::new(rule_id, pattern, replacement, description)
    }
}

pub type Bindings = BTreeMap<String, Expr>;

#[derive(Debug, Clone)]
pub struct Site {
    pub node_id: NodeId,
    pub bindings: Bindings,
}

/// Whether two expressions agree on their root (variant, operator, literal,
/// parameters and child count), ignoring children.
pub(crate) fn same_head(a: &Expr, b: &Expr) -> bool {
    use ExprKind::*;
    match (&a.kind, &b.kind) {
        (Int(x), Int(y)) => x == y,
        (Bool(x), Bool(y)) => x == y,
        (None, None) => true,
        (Name(x), Name(y)) => x == y,
        (Binary { op: x, .. }, Binary { op: y, .. }) => x == y,
        (Compare { op: x, .. }, Compare { op: y, .. }) => x == y,
        (BoolOp { op: x, .. }, BoolOp { op: y, .. }) => x == y,
        (Unary { op: x, .. }, Unary { op: y, .. }) => x == y,
        (Call { args: x, .. }, Call { args: y, .. }) => x.len() == y.len(),
        (Lambda { params: x, .. }, Lambda { params: y, .. }) => x == y,
        _ => false,
    }
}

fn bind(name: &str, value: &Expr, bindings: &mut Bindings) -> bool {
    match bindings.get(name) {
        Some(prev) => prev.same_shape(value),
        None => {
            bindings.insert(name.to_string(), value.clone());
            true
        }
    }
}

fn match_expr(template: &Expr, node: &Expr, bindings: &mut Bindings) -> bool {
    if let ExprKind::Name(n) = &template.kind {
        if n.starts_with('?') {
            return bind(n, node, bindings);
        }
    }
    same_head(template, node)
        && template
            .children()
            .into_iter()
            .zip(node.children())
            .all(|(t, n)| match_expr(t, n, bindings))
}

fn match_stmt(template: &Stmt, node: &Stmt, bindings: &mut Bindings) -> bool {
    match (&template.kind, &node.kind) {
        (StmtKind::Assign { target: t, value: tv }, StmtKind::Assign { target: n, value: nv }) => {
            let target_ok = if t.starts_with('?') {
                bind(t, &synth(ExprKind::Name(n.clone())), bindings)
            } else {
                t == n
            };
            target_ok && match_expr(tv, nv, bindings)
        }
        (StmtKind::Return { value: Some(t) }, StmtKind::Return { value: Some(n) }) => match_expr(t, n, bindings),
        (StmtKind::Return { value: None }, StmtKind::Return { value: None }) => true,
        (StmtKind::Pass, StmtKind::Pass) => true,
        (StmtKind::Expr(t), StmtKind::Expr(n)) => match_expr(t, n, bindings),
        _ => false,
    }
}

fn match_node(pattern: &Template, node: NodeRef<'_>) -> Option<Bindings> {
    let mut bindings = Bindings::new();
    let ok = match (pattern, node) {
        (Template::Expr(t), NodeRef::Expr(e)) => match_expr(t, e, &mut bindings),
        (Template::Stmt(t), NodeRef::Stmt(s)) => match_stmt(t, s, &mut bindings),
        _ => false,
    };
    ok.then_some(bindings)
}

/// All maximal matches of the rule's pattern, in pre-order. Nodes inside a
/// match are not reported.
pub fn match_sites(program: &Program, rule: &RewriteRule) -> Vec<Site> {
    fn visit_expr(e: &Expr, rule: &RewriteRule, out: &mut Vec<Site>) {
        if let Some(bindings) = match_node(&rule.pattern, NodeRef::Expr(e)) {
            out.push(Site { node_id: e.id(), bindings });
            return;
        }
        for c in e.children() {
            visit_expr(c, rule, out);
        }
    }
    fn visit_block(block: &[Stmt], rule: &RewriteRule, out: &mut Vec<Site>) {
        for s in block {
            if let Some(bindings) = match_node(&rule.pattern, NodeRef::Stmt(s)) {
                out.push(Site { node_id: s.id(), bindings });
                continue;
            }
            for e in s.exprs() {
                visit_expr(e, rule, out);
            }
            for b in s.blocks() {
                visit_block(b, rule, out);
            }
        }
    }
    let mut out = Vec::new();
    visit_block(&program.statements, rule, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ApplyError {
    #[error("rule {rule_id} does not match node {site}")]
    InvalidSite { rule_id: String, site: NodeId },
    #[error("rewritten program could not be rendered faithfully")]
    Unrenderable,
}

fn substitute(e: &mut Expr, bindings: &Bindings) {
    if let ExprKind::Name(n) = &e.kind {
        if let Some(b) = bindings.get(n) {
            *e = b.clone();
            return;
        }
    }
    for c in e.children_mut() {
        substitute(c, bindings);
    }
}

enum Node {
    Expr(Expr),
    Stmt(Stmt),
}

fn instantiate(template: &Template, bindings: &Bindings) -> Node {
    match template {
        Template::Expr(t) => {
            let mut e = t.clone();
            substitute(&mut e, bindings);
            Node::Expr(e)
        }
        Template::Stmt(t) => {
            let mut s = t.clone();
            if let StmtKind::Assign { target, .. } = &mut s.kind {
                if let Some(Expr { kind: ExprKind::Name(n), .. }) = bindings.get(target.as_str()) {
                    *target = n.clone();
                }
            }
            for e in s.exprs_mut() {
                substitute(e, bindings);
            }
            Node::Stmt(s)
        }
    }
}

fn replace_in_expr(e: &mut Expr, site: NodeId, new: &Node) -> bool {
    if e.id() == site {
        if let Node::Expr(n) = new {
            *e = n.clone();
            return true;
        }
    }
    e.children_mut().into_iter().any(|c| replace_in_expr(c, site, new))
}

fn replace_in_block(block: &mut [Stmt], site: NodeId, new: &Node) -> bool {
    for s in block.iter_mut() {
        if s.id() == site {
            if let Node::Stmt(n) = new {
                *s = n.clone();
                return true;
            }
        }
        if s.exprs_mut().into_iter().any(|e| replace_in_expr(e, site, new)) {
            return true;
        }
        if s.blocks_mut().into_iter().any(|b| replace_in_block(b, site, new)) {
            return true;
        }
    }
    false
}

fn slice<'a>(lines: &[&'a str], e: &Expr) -> Option<&'a str> {
    lines
        .get(e.span.line as usize - 1)?
        .get(e.span.col_start as usize..e.span.col_end as usize)
}

/// Replaces each `?name` in `text` using `lookup`.
fn fill_metavars(text: &str, lookup: &dyn Fn(&str) -> Option<String>) -> Option<String> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(pos) = rest.find('?') {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos + 1..];
        let len = tail
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(tail.len());
        let name = &rest[pos..pos + 1 + len];
        out.push_str(&lookup(name)?);
        rest = &tail[len..];
    }
    out.push_str(rest);
    Some(out)
}

/// Rewrites `site` with the rule's replacement. The new text is spliced into
/// the original source so untouched lines keep their formatting; subtrees
/// bound to metavariables keep their original spelling where that parses
/// back to the intended tree.
pub fn apply_rule(program: &Program, rule: &RewriteRule, site: NodeId) -> Result<Program, ApplyError> {
    let invalid = || ApplyError::InvalidSite {
        rule_id: rule.rule_id.clone(),
        site,
    };
    let node = crate::lang::node_at(program, site).map_err(|_| invalid())?;
    let bindings = match_node(&rule.pattern, node).ok_or_else(invalid)?;
    let span = node.span();
    let new = instantiate(&rule.replacement, &bindings);

    let mut expected = program.clone();
    if !replace_in_block(&mut expected.statements, site, &new) {
        return Err(invalid());
    }

    let lines: Vec<&str> = program.source.lines().collect();
    let template_text = rule.replacement.render();
    let mut candidates = Vec::new();
    if let Some(t) = fill_metavars(&template_text, &|m| {
        bindings.get(m).and_then(|e| match &e.kind {
            ExprKind::Name(n) => Some(n.clone()),
            _ => slice(&lines, e).map(str::to_string),
        })
    }) {
        candidates.push(t);
    }
    let canonical = match &new {
        Node::Expr(e) => format_expr(e),
        Node::Stmt(s) => format_stmt(s),
    };
    candidates.push(canonical.clone());
    if matches!(new, Node::Expr(_)) {
        candidates.push(format!("({canonical})"));
    }

    let line_idx = span.line as usize - 1;
    let line = lines.get(line_idx).ok_or_else(invalid)?;
    let (before, after) = (
        line.get(..span.col_start as usize).ok_or_else(invalid)?,
        line.get(span.col_end as usize..).ok_or_else(invalid)?,
    );
    for text in candidates {
        let mut out = String::with_capacity(program.source.len() + text.len());
        for (i, l) in lines.iter().enumerate() {
            if i == line_idx {
                out.push_str(before);
                out.push_str(&text);
                out.push_str(after);
            } else {
                out.push_str(l);
            }
            out.push('\n');
        }
        if let Ok(p) = parse(&out) {
            if p.same_shape(&expected) {
                return Ok(p);
            }
        }
    }
    Err(ApplyError::Unrenderable)
}
