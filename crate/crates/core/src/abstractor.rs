//! Maps a concrete value back to the expression that computed it, one
//! substitution at a time.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::interp::{eval_pure, EvalError, EventKind, ExecutionTrace, Limits, Scope, Value};
use crate::lang::{format_expr, node_at, synth, Expr, ExprKind, NodeId, NodeRef, Program, StmtKind};

/// Abstraction steps shown beyond the concrete value. Going further tends to
/// spell out the source line itself.
pub const DEFAULT_CAP: usize = 3;

#[derive(Debug, Clone)]
pub struct ValueTree {
    pub node_id: NodeId,
    /// `None` when the node was not evaluated, e.g. the right side of a
    /// short-circuited `and`, or a lambda body.
    pub value: Option<Value>,
    /// Source rendering of the node.
    pub rendering: String,
    pub children: Vec<ValueTree>,
    /// Source node, with children.
    pub expr: Expr,
    /// For callee names bound to builtins: whether the builtin's own name
    /// resolves to the same builtin at this step.
    builtin_visible: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AbstractError {
    #[error("no event at step {0}")]
    NoSuchStep(usize),
    #[error("step {0} is not an assignment or a return with a value")]
    NoExpression(usize),
    #[error("node {node} is not part of the expression evaluated at step {step}")]
    NodeNotInStep { step: usize, node: NodeId },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// The expression whose value the event at `step` records.
pub fn step_expression<'p>(program: &'p Program, trace: &ExecutionTrace, step: usize) -> Result<&'p Expr, AbstractError> {
    let ev = trace.event(step).ok_or(AbstractError::NoSuchStep(step))?;
    let node = node_at(program, ev.node_id).map_err(|_| AbstractError::NoExpression(step))?;
    let expr = match (ev.kind, node) {
        (EventKind::Line, NodeRef::Stmt(s)) if ev.assigns.is_some() => match &s.kind {
            StmtKind::Assign { value, .. } => Some(value),
            _ => None,
        },
        (EventKind::Return, NodeRef::Stmt(s)) => match &s.kind {
            StmtKind::Return { value } => value.as_ref(),
            _ => None,
        },
        (EventKind::Return, NodeRef::Expr(e)) => match &e.kind {
            ExprKind::Lambda { body, .. } => Some(body.as_ref()),
            _ => None,
        },
        _ => None,
    };
    expr.ok_or(AbstractError::NoExpression(step))
}

/// Value tree of the expression recorded at `step`, evaluated against that
/// step's snapshot.
pub fn build_value_tree(program: &Program, trace: &ExecutionTrace, step: usize) -> Result<ValueTree, AbstractError> {
    let expr = step_expression(program, trace, step)?;
    let ev = &trace.events[step];
    value_tree(program, expr, ev.scope(), Limits::default())
}

/// Like [`build_value_tree`], rooted at `node` inside the step's expression.
pub fn build_value_tree_at(
    program: &Program,
    trace: &ExecutionTrace,
    step: usize,
    node: NodeId,
) -> Result<ValueTree, AbstractError> {
    let expr = step_expression(program, trace, step)?;
    let mut found = None;
    expr.walk(&mut |e| {
        if found.is_none() && e.id() == node {
            found = Some(e);
        }
    });
    let sub = found.ok_or(AbstractError::NodeNotInStep { step, node })?;
    value_tree(program, sub, trace.events[step].scope(), Limits::default())
}

/// Annotates every node of `expr` with its value in `scope`. The root must
/// evaluate; inner nodes that fail are left without a value.
pub fn value_tree(program: &Program, expr: &Expr, scope: Scope<'_>, limits: Limits) -> Result<ValueTree, AbstractError> {
    let root = eval_pure(program, expr, scope, limits)?;
    Ok(annotate(program, expr, Some(root), scope, limits, false))
}

fn annotate(
    program: &Program,
    expr: &Expr,
    value: Option<Value>,
    scope: Scope<'_>,
    limits: Limits,
    frozen: bool,
) -> ValueTree {
    let in_lambda = frozen || matches!(expr.kind, ExprKind::Lambda { .. });
    let children = expr
        .children()
        .into_iter()
        .map(|c| {
            let v = if in_lambda {
                None
            } else {
                eval_pure(program, c, scope, limits).ok()
            };
            annotate(program, c, v, scope, limits, in_lambda)
        })
        .collect();
    let builtin_visible = match &value {
        Some(Value::Builtin(b)) => match scope.lookup(b.name()) {
            None => true,
            Some(v) => v == &Value::Builtin(*b),
        },
        _ => false,
    };
    ValueTree {
        node_id: expr.id(),
        value,
        rendering: format_expr(expr),
        children,
        expr: expr.clone(),
        builtin_visible,
    }
}

impl ValueTree {
    /// Whether this node can be shown as its value instead of its source.
    fn collapsible(&self) -> bool {
        match &self.value {
            Some(Value::Builtin(_)) => self.builtin_visible,
            Some(v) => v.is_first_order(),
            None => false,
        }
    }

    fn display(&self, expanded: &HashSet<NodeId>) -> Expr {
        if self.collapsible() && !expanded.contains(&self.node_id) {
            return literal(self.value.as_ref().expect("collapsible nodes have values"));
        }
        let mut e = self.expr.clone();
        for (slot, child) in e.children_mut().into_iter().zip(&self.children) {
            *slot = child.display(expanded);
        }
        e
    }

    /// Expansion order: this node, then its callee, then the remaining
    /// children from last to first.
    fn order(&self, out: &mut Vec<NodeId>) {
        out.push(self.node_id);
        let (first, rest): (Vec<&ValueTree>, Vec<&ValueTree>) = match self.expr.kind {
            ExprKind::Call { .. } => (self.children.iter().take(1).collect(), self.children.iter().skip(1).collect()),
            _ => (Vec::new(), self.children.iter().collect()),
        };
        for c in first {
            c.order(out);
        }
        for c in rest.into_iter().rev() {
            c.order(out);
        }
    }
}

fn literal(v: &Value) -> Expr {
    synth(match v {
        Value::Int(i) => ExprKind::Int(i.clone()),
        Value::Bool(b) => ExprKind::Bool(*b),
        Value::None => ExprKind::None,
        Value::Builtin(b) => ExprKind::Name(b.name().to_string()),
        Value::Closure(c) => ExprKind::Name(c.name.clone()),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level {
    pub rendering: String,
    /// Nodes shown as source for the first time at this level.
    pub substituted: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstractionLadder {
    pub levels: Vec<Level>,
    pub cap: usize,
}

/// Builds the ladder from the concrete value (level 0) toward the source
/// expression, keeping at most `cap` levels beyond level 0. Renderings that
/// repeat the previous level are skipped.
pub fn ladder(tree: &ValueTree, cap: usize) -> AbstractionLadder {
    let mut expanded = HashSet::new();
    let mut levels = vec![Level {
        rendering: format_expr(&tree.display(&expanded)),
        substituted: Vec::new(),
    }];
    let mut order = Vec::new();
    tree.order(&mut order);
    let mut pending = Vec::new();
    for id in order {
        if levels.len() > cap {
            break;
        }
        expanded.insert(id);
        pending.push(id);
        let rendering = format_expr(&tree.display(&expanded));
        if rendering != levels.last().expect("level 0 exists").rendering {
            levels.push(Level {
                rendering,
                substituted: std::mem::take(&mut pending),
            });
        }
    }
    AbstractionLadder { levels, cap }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("level {level} out of range for a ladder of {len} levels")]
pub struct OutOfRange {
    pub level: usize,
    pub len: usize,
}

pub fn abstraction_at(ladder: &AbstractionLadder, level: usize) -> Result<&str, OutOfRange> {
    ladder
        .levels
        .get(level)
        .map(|l| l.rendering.as_str())
        .ok_or(OutOfRange {
            level,
            len: ladder.levels.len(),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::{run, Frame, Limits, MODULE_FRAME};
    use crate::interp::{Binding, Builtin};
    use crate::lang::{parse, parse_expr};

    const ITERATIVE_BUG: &str = include_str!("../../../corpus/accumulate/bugs/combiner_first_arg.mini");

    const WORKED: [&str; 7] = [
        "4",
        "add(2, 2)",
        "combiner(2, 2)",
        "combiner(2, identity(2))",
        "combiner(2, term(2))",
        "combiner(2, term(i))",
        "combiner(i, term(i))",
    ];

    fn frame(bindings: &[(&str, Value)]) -> Vec<Frame> {
        vec![
            Frame {
                frame_id: 0,
                function_name: MODULE_FRAME.into(),
                bindings: Vec::new(),
                parent_frame_id: None,
            },
            Frame {
                frame_id: 1,
                function_name: "accumulate".into(),
                bindings: bindings
                    .iter()
                    .map(|(n, v)| Binding {
                        name: n.to_string(),
                        value: v.clone(),
                    })
                    .collect(),
                parent_frame_id: Some(0),
            },
        ]
    }

    fn worked_tree() -> ValueTree {
        let program = parse(ITERATIVE_BUG).unwrap();
        let stack = frame(&[
            ("combiner", Value::Builtin(Builtin::Add)),
            ("term", Value::Builtin(Builtin::Identity)),
            ("i", Value::int(2)),
            ("total", Value::int(4)),
        ]);
        let scope = Scope { stack: &stack, heap: &[] };
        value_tree(&program, &parse_expr("combiner(i, term(i))").unwrap(), scope, Limits::default()).unwrap()
    }

    fn renderings(l: &AbstractionLadder) -> Vec<&str> {
        l.levels.iter().map(|x| x.rendering.as_str()).collect()
    }

    #[test]
    fn worked_tree_values() {
        let t = worked_tree();
        assert_eq!(t.value, Some(Value::int(4)));
        assert_eq!(t.children.len(), 3);
        assert_eq!(t.children[0].value, Some(Value::Builtin(Builtin::Add)));
        assert_eq!(t.children[1].value, Some(Value::int(2)));
        assert_eq!(t.children[2].value, Some(Value::int(2)));
        assert_eq!(t.children[2].rendering, "term(i)");
        assert_eq!(t.children[2].children[0].value, Some(Value::Builtin(Builtin::Identity)));
    }

    #[test]
    fn uncapped_ladder_full_sequence() {
        assert_eq!(renderings(&ladder(&worked_tree(), 6)), WORKED);
        assert_eq!(renderings(&ladder(&worked_tree(), usize::MAX)), WORKED);
    }

    #[test]
    fn default_cap_stops_after_three_steps() {
        let l = ladder(&worked_tree(), DEFAULT_CAP);
        assert_eq!(renderings(&l), &WORKED[..4]);
        assert_eq!(abstraction_at(&l, 0), Ok("4"));
        assert_eq!(abstraction_at(&l, 1), Ok("add(2, 2)"));
        assert_eq!(abstraction_at(&l, 4), Err(OutOfRange { level: 4, len: 4 }));
    }

    #[test]
    fn literal_has_a_single_level() {
        let program = parse("x = 3").unwrap();
        let stack = frame(&[]);
        let scope = Scope { stack: &stack, heap: &[] };
        let t = value_tree(&program, &parse_expr("3").unwrap(), scope, Limits::default()).unwrap();
        assert!(t.children.is_empty());
        assert_eq!(renderings(&ladder(&t, DEFAULT_CAP)), ["3"]);
    }

    #[test]
    fn builtin_composition() {
        let program = parse("r = add(square(2), 1)").unwrap();
        let stack = frame(&[]);
        let scope = Scope { stack: &stack, heap: &[] };
        let t = value_tree(&program, &parse_expr("add(square(2), 1)").unwrap(), scope, Limits::default()).unwrap();
        assert_eq!(t.value, Some(Value::int(5)));
        assert_eq!(t.children[1].value, Some(Value::int(4)));
        assert_eq!(renderings(&ladder(&t, 6)), ["5", "add(4, 1)", "add(square(2), 1)"]);
    }

    #[test]
    fn shadowed_builtin_renders_from_source() {
        let program = parse("r = f(1)").unwrap();
        let stack = frame(&[
            ("f", Value::Builtin(Builtin::Increment)),
            ("increment", Value::Builtin(Builtin::Square)),
        ]);
        let scope = Scope { stack: &stack, heap: &[] };
        let t = value_tree(&program, &parse_expr("f(1)").unwrap(), scope, Limits::default()).unwrap();
        assert_eq!(renderings(&ladder(&t, 6)), ["2", "f(1)"]);
    }

    #[test]
    fn tree_from_trace_step() {
        let program = parse(ITERATIVE_BUG).unwrap();
        let t = run(&program, "accumulate(add, 0, 5, identity)", Limits::default()).unwrap();
        let step = t
            .events
            .iter()
            .position(|e| e.assigns.as_deref() == Some("total") && e.innermost().get("i") == Some(&Value::int(2)))
            .unwrap();
        let tree = build_value_tree(&program, &t, step).unwrap();
        assert_eq!(tree.value, Some(Value::int(4)));
        assert_eq!(renderings(&ladder(&tree, 6)), WORKED);

        let sub = build_value_tree_at(&program, &t, step, tree.children[2].node_id).unwrap();
        assert_eq!(renderings(&ladder(&sub, 6)), ["2", "identity(2)", "term(2)", "term(i)"]);
        assert!(matches!(
            build_value_tree_at(&program, &t, step, 0),
            Err(AbstractError::NodeNotInStep { .. })
        ));
        assert_eq!(build_value_tree(&program, &t, 0).unwrap_err(), AbstractError::NoExpression(0));
        assert_eq!(build_value_tree(&program, &t, 100_000).unwrap_err(), AbstractError::NoSuchStep(100_000));
    }

    #[test]
    fn unbound_names_are_errors() {
        let program = parse("x = y").unwrap();
        let stack = frame(&[]);
        let scope = Scope { stack: &stack, heap: &[] };
        let err = value_tree(&program, &parse_expr("y + 1").unwrap(), scope, Limits::default()).unwrap_err();
        assert_eq!(err, AbstractError::Eval(EvalError::UnboundName("y".into())));
    }

    #[test]
    fn short_circuit_leaves_right_side_unevaluated() {
        let program = parse("x = 1").unwrap();
        let stack = frame(&[("n", Value::int(0))]);
        let scope = Scope { stack: &stack, heap: &[] };
        let t = value_tree(&program, &parse_expr("n == 0 or 1 // n == 1").unwrap(), scope, Limits::default()).unwrap();
        assert_eq!(t.value, Some(Value::Bool(true)));
        assert_eq!(t.children[1].value, None);
        for level in ladder(&t, 10).levels {
            let v = eval_pure(&program, &parse_expr(&level.rendering).unwrap(), scope, Limits::default());
            assert_eq!(v, Ok(Value::Bool(true)), "{}", level.rendering);
        }
    }
}
