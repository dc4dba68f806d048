use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;

use super::trace::*;
use super::value::*;
use super::{EvalError, InterpError};
use crate::lang::{
    format_block, format_expr, node_at, parse_expr, BinOp, BoolOpKind, CmpOp, Expr, ExprKind, NodeId,
    NodeRef, Program, Stmt, StmtKind, UnaryOp,
};

enum Body {
    Block(Vec<Stmt>),
    Expr(Expr),
}

struct Function {
    name: String,
    params: Vec<String>,
    body: Body,
    line: u32,
    source: String,
}

fn function_of_stmt(s: &Stmt) -> Option<Function> {
    let StmtKind::FunctionDef { name, params, body } = &s.kind else {
        return None;
    };
    Some(Function {
        name: name.clone(),
        params: params.clone(),
        body: Body::Block(body.clone()),
        line: s.span.line,
        source: format_block(std::slice::from_ref(s), 0),
    })
}

fn function_of_expr(e: &Expr) -> Option<Function> {
    let ExprKind::Lambda { params, body } = &e.kind else {
        return None;
    };
    Some(Function {
        name: "<lambda>".to_string(),
        params: params.clone(),
        body: Body::Expr((**body).clone()),
        line: e.span.line,
        source: format_expr(e),
    })
}

fn collect_functions(program: &Program, out: &mut HashMap<NodeId, Rc<Function>>) {
    program.walk(&mut |node| {
        let f = match node {
            NodeRef::Stmt(s) => function_of_stmt(s),
            NodeRef::Expr(e) => function_of_expr(e),
        };
        if let Some(f) = f {
            out.insert(node.span().node_id, Rc::new(f));
        }
    });
}

/// Why evaluation stopped early.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Halt {
    Fault(String),
    Unbound(String),
    StepLimit,
}

impl Halt {
    fn into_message(self) -> Option<String> {
        match self {
            Halt::Fault(m) => Some(m),
            Halt::Unbound(n) => Some(format!("NameError: name '{n}' is not defined")),
            Halt::StepLimit => None,
        }
    }
}

fn fault<T>(message: impl Into<String>) -> Result<T, Halt> {
    Err(Halt::Fault(message.into()))
}

enum Control {
    Next,
    Return { value: Value, line: u32, node: NodeId },
}

struct Machine {
    functions: HashMap<NodeId, Rc<Function>>,
    frames: HashMap<FrameId, Frame>,
    stack: Vec<FrameId>,
    next_frame: FrameId,
    steps: usize,
    limits: Limits,
    recording: bool,
    events: Vec<TraceEvent>,
}

impl Machine {
    fn new(program: &Program, limits: Limits) -> Self {
        let mut frames = HashMap::new();
        frames.insert(
            0,
            Frame {
                frame_id: 0,
                function_name: MODULE_FRAME.to_string(),
                bindings: Vec::new(),
                parent_frame_id: None,
            },
        );
        let mut functions = HashMap::new();
        collect_functions(program, &mut functions);
        Machine {
            functions,
            frames,
            stack: vec![0],
            next_frame: 1,
            steps: 0,
            limits,
            recording: false,
            events: Vec::new(),
        }
    }

    fn from_scope(program: &Program, scope: Scope<'_>, limits: Limits) -> Self {
        let mut frames = HashMap::new();
        for f in scope.frames() {
            frames.insert(f.frame_id, f.clone());
        }
        let next_frame = frames.keys().max().map_or(0, |m| m + 1);
        let mut functions = HashMap::new();
        collect_functions(program, &mut functions);
        Machine {
            functions,
            frames,
            stack: scope.stack.iter().map(|f| f.frame_id).collect(),
            next_frame,
            steps: 0,
            limits,
            recording: false,
            events: Vec::new(),
        }
    }

    fn current(&self) -> FrameId {
        *self.stack.last().expect("stack is never empty")
    }

    fn user_depth(&self) -> usize {
        self.stack.len().saturating_sub(1)
    }

    // ---- snapshots ----

    fn snapshot(&self) -> (Vec<Frame>, Vec<Frame>) {
        let stack: Vec<Frame> = self.stack.iter().map(|id| self.frames[id].clone()).collect();
        let on_stack: BTreeSet<FrameId> = self.stack.iter().copied().collect();
        let mut reachable = BTreeSet::new();
        let mut pending: Vec<FrameId> = Vec::new();
        let note = |frame: &Frame, pending: &mut Vec<FrameId>| {
            if let Some(p) = frame.parent_frame_id {
                pending.push(p);
            }
            for b in &frame.bindings {
                if let Value::Closure(c) = &b.value {
                    pending.push(c.env);
                }
            }
        };
        for f in &stack {
            note(f, &mut pending);
        }
        while let Some(id) = pending.pop() {
            if on_stack.contains(&id) || !reachable.insert(id) {
                continue;
            }
            if let Some(f) = self.frames.get(&id) {
                note(f, &mut pending);
            }
        }
        let heap = reachable
            .into_iter()
            .filter_map(|id| self.frames.get(&id).cloned())
            .collect();
        (stack, heap)
    }

    fn emit(
        &mut self,
        kind: EventKind,
        line: u32,
        node_id: NodeId,
        assigns: Option<String>,
        call_info: Option<CallInfo>,
        return_info: Option<ReturnInfo>,
    ) -> Result<(), Halt> {
        if self.steps >= self.limits.max_steps {
            return Err(Halt::StepLimit);
        }
        self.steps += 1;
        if self.recording {
            let (stack, heap) = self.snapshot();
            self.events.push(TraceEvent {
                step: self.events.len(),
                kind,
                line,
                node_id,
                stack,
                heap,
                assigns,
                call_info,
                return_info,
            });
        }
        Ok(())
    }

    fn line_event(&mut self, stmt: &Stmt, assigns: Option<String>) -> Result<(), Halt> {
        self.emit(EventKind::Line, stmt.span.line, stmt.id(), assigns, None, None)
    }

    // ---- names ----

    fn lookup(&self, name: &str) -> Result<Value, Halt> {
        let mut current = Some(self.current());
        while let Some(id) = current {
            let Some(frame) = self.frames.get(&id) else { break };
            if let Some(v) = frame.get(name) {
                return Ok(v.clone());
            }
            current = frame.parent_frame_id;
        }
        Builtin::from_name(name)
            .map(Value::Builtin)
            .ok_or_else(|| Halt::Unbound(name.to_string()))
    }

    fn bind(&mut self, name: &str, value: Value) {
        let id = self.current();
        self.frames.get_mut(&id).expect("current frame exists").set(name, value);
    }

    fn make_closure(&self, node: NodeId) -> Result<Value, Halt> {
        let Some(f) = self.functions.get(&node) else {
            return fault(format!("InternalError: no function for node {node}"));
        };
        Ok(Value::Closure(Closure {
            function: node,
            env: self.current(),
            name: f.name.clone(),
            source: f.source.clone(),
        }))
    }

    // ---- statements ----

    fn exec_block(&mut self, block: &[Stmt]) -> Result<Control, Halt> {
        for stmt in block {
            if let ret @ Control::Return { .. } = self.exec_stmt(stmt)? {
                return Ok(ret);
            }
        }
        Ok(Control::Next)
    }

    fn exec_stmt(&mut self, stmt: &Stmt) -> Result<Control, Halt> {
        match &stmt.kind {
            StmtKind::FunctionDef { name, .. } => {
                self.line_event(stmt, None)?;
                let closure = self.make_closure(stmt.id())?;
                self.bind(name, closure);
                Ok(Control::Next)
            }
            StmtKind::Assign { target, value } => {
                self.line_event(stmt, Some(target.clone()))?;
                let v = self.eval(value)?;
                self.bind(target, v);
                Ok(Control::Next)
            }
            StmtKind::If { cond, then_body, else_body } => {
                self.line_event(stmt, None)?;
                if self.condition(cond)? {
                    self.exec_block(then_body)
                } else {
                    self.exec_block(else_body)
                }
            }
            StmtKind::While { cond, body } => loop {
                self.line_event(stmt, None)?;
                if !self.condition(cond)? {
                    return Ok(Control::Next);
                }
                if let ret @ Control::Return { .. } = self.exec_block(body)? {
                    return Ok(ret);
                }
            },
            StmtKind::Return { value } => {
                self.line_event(stmt, None)?;
                let value = match value {
                    Some(e) => self.eval(e)?,
                    None => Value::None,
                };
                Ok(Control::Return {
                    value,
                    line: stmt.span.line,
                    node: stmt.id(),
                })
            }
            StmtKind::Expr(e) => {
                self.line_event(stmt, None)?;
                self.eval(e)?;
                Ok(Control::Next)
            }
            StmtKind::Pass => {
                self.line_event(stmt, None)?;
                Ok(Control::Next)
            }
        }
    }

    fn condition(&mut self, cond: &Expr) -> Result<bool, Halt> {
        match self.eval(cond)? {
            Value::Bool(b) => Ok(b),
            other => fault(format!(
                "TypeError: condition must be a bool, not {}",
                other.type_name()
            )),
        }
    }

    // ---- expressions ----

    fn eval(&mut self, expr: &Expr) -> Result<Value, Halt> {
        stacker::maybe_grow(64 * 1024, 1024 * 1024, || self.eval_inner(expr))
    }

    fn eval_inner(&mut self, expr: &Expr) -> Result<Value, Halt> {
        match &expr.kind {
            ExprKind::Int(v) => Ok(Value::Int(v.clone())),
            ExprKind::Bool(b) => Ok(Value::Bool(*b)),
            ExprKind::None => Ok(Value::None),
            ExprKind::Name(n) => self.lookup(n),
            ExprKind::Binary { op, left, right } => {
                let l = self.eval(left)?;
                let r = self.eval(right)?;
                binary(*op, l, r)
            }
            ExprKind::Compare { op, left, right } => {
                let l = self.eval(left)?;
                let r = self.eval(right)?;
                compare(*op, &l, &r)
            }
            ExprKind::BoolOp { op, left, right } => {
                let l = expect_bool(self.eval(left)?, op.keyword())?;
                match (op, l) {
                    (BoolOpKind::And, false) => Ok(Value::Bool(false)),
                    (BoolOpKind::Or, true) => Ok(Value::Bool(true)),
                    _ => Ok(Value::Bool(expect_bool(self.eval(right)?, op.keyword())?)),
                }
            }
            ExprKind::Unary { op: UnaryOp::Neg, operand } => match self.eval(operand)? {
                Value::Int(v) => Ok(Value::Int(-v)),
                other => fault(format!(
                    "TypeError: bad operand type for unary -: '{}'",
                    other.type_name()
                )),
            },
            ExprKind::Unary { op: UnaryOp::Not, operand } => {
                Ok(Value::Bool(!expect_bool(self.eval(operand)?, "not")?))
            }
            ExprKind::Call { callee, args } => {
                let f = self.eval(callee)?;
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.eval(a)?);
                }
                self.call(f, values)
            }
            ExprKind::Lambda { .. } => self.make_closure(expr.id()),
        }
    }

    fn call(&mut self, callee: Value, args: Vec<Value>) -> Result<Value, Halt> {
        match callee {
            Value::Builtin(b) => call_builtin(b, args),
            Value::Closure(c) => self.call_closure(c, args),
            other => fault(format!(
                "TypeError: '{}' object is not callable",
                other.type_name()
            )),
        }
    }

    fn call_closure(&mut self, closure: Closure, args: Vec<Value>) -> Result<Value, Halt> {
        let Some(function) = self.functions.get(&closure.function).cloned() else {
            return fault(format!("TypeError: unknown function '{}'", closure.name));
        };
        let params = &function.params;
        if params.len() != args.len() {
            return fault(format!(
                "TypeError: {}() takes {} positional argument{} but {} {} given",
                function.name,
                params.len(),
                if params.len() == 1 { "" } else { "s" },
                args.len(),
                if args.len() == 1 { "was" } else { "were" },
            ));
        }
        if self.user_depth() >= self.limits.max_depth {
            return fault("RecursionError: maximum recursion depth exceeded");
        }

        let call_text = format!(
            "{}({})",
            function.name,
            args.iter().map(Value::render).collect::<Vec<_>>().join(", ")
        );
        let frame_id = self.next_frame;
        self.next_frame += 1;
        let bindings = params
            .iter()
            .zip(args.iter())
            .map(|(p, v)| Binding {
                name: p.clone(),
                value: v.clone(),
            })
            .collect();
        self.frames.insert(
            frame_id,
            Frame {
                frame_id,
                function_name: function.name.clone(),
                bindings,
                parent_frame_id: Some(closure.env),
            },
        );
        self.stack.push(frame_id);
        let result = self.run_body(&function, closure.function, call_text, args);
        self.stack.pop();
        result
    }

    fn run_body(
        &mut self,
        function: &Function,
        node: NodeId,
        call_text: String,
        args: Vec<Value>,
    ) -> Result<Value, Halt> {
        self.emit(
            EventKind::Call,
            function.line,
            node,
            None,
            Some(CallInfo {
                callee: call_text.clone(),
                args,
            }),
            None,
        )?;
        let (value, line, ret_node) = match &function.body {
            Body::Block(block) => match self.exec_block(block)? {
                Control::Return { value, line, node } => (value, line, node),
                Control::Next => (Value::None, function.line, node),
            },
            Body::Expr(e) => (self.eval(e)?, function.line, node),
        };
        self.emit(
            EventKind::Return,
            line,
            ret_node,
            None,
            None,
            Some(ReturnInfo {
                value: value.clone(),
                call: call_text,
            }),
        )?;
        Ok(value)
    }
}

fn expect_bool(v: Value, context: &str) -> Result<bool, Halt> {
    match v {
        Value::Bool(b) => Ok(b),
        other => fault(format!(
            "TypeError: operand of '{context}' must be a bool, not {}",
            other.type_name()
        )),
    }
}

fn binary(op: BinOp, l: Value, r: Value) -> Result<Value, Halt> {
    let (a, b) = match (l, r) {
        (Value::Int(a), Value::Int(b)) => (a, b),
        (l, r) => {
            return fault(format!(
                "TypeError: unsupported operand type(s) for {}: '{}' and '{}'",
                op.symbol(),
                l.type_name(),
                r.type_name()
            ))
        }
    };
    Ok(Value::Int(match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::FloorDiv | BinOp::Mod if b.is_zero() => {
            return fault("ZeroDivisionError: integer division or modulo by zero")
        }
        BinOp::FloorDiv => a.div_floor(&b),
        BinOp::Mod => a.mod_floor(&b),
    }))
}

fn compare(op: CmpOp, l: &Value, r: &Value) -> Result<Value, Halt> {
    let result = match op {
        CmpOp::Eq => l == r,
        CmpOp::NotEq => l != r,
        _ => {
            let (Value::Int(a), Value::Int(b)) = (l, r) else {
                return fault(format!(
                    "TypeError: '{}' not supported between instances of '{}' and '{}'",
                    op.symbol(),
                    l.type_name(),
                    r.type_name()
                ));
            };
            match op {
                CmpOp::Lt => a < b,
                CmpOp::LtE => a <= b,
                CmpOp::Gt => a > b,
                CmpOp::GtE => a >= b,
                CmpOp::Eq | CmpOp::NotEq => unreachable!(),
            }
        }
    };
    Ok(Value::Bool(result))
}

pub(crate) fn call_builtin(b: Builtin, args: Vec<Value>) -> Result<Value, Halt> {
    if args.len() != b.arity() {
        return fault(format!(
            "TypeError: {}() takes {} positional argument{} but {} {} given",
            b.name(),
            b.arity(),
            if b.arity() == 1 { "" } else { "s" },
            args.len(),
            if args.len() == 1 { "was" } else { "were" },
        ));
    }
    let mut ints = Vec::with_capacity(args.len());
    for a in args {
        match a {
            Value::Int(v) => ints.push(v),
            other => {
                return fault(format!(
                    "TypeError: {}() expects int arguments, got '{}'",
                    b.name(),
                    other.type_name()
                ))
            }
        }
    }
    let v: BigInt = match b {
        Builtin::Add => &ints[0] + &ints[1],
        Builtin::Sub => &ints[0] - &ints[1],
        Builtin::Mul => &ints[0] * &ints[1],
        Builtin::Square => &ints[0] * &ints[0],
        Builtin::Identity => ints[0].clone(),
        Builtin::Increment => &ints[0] + 1,
    };
    Ok(Value::Int(v))
}

/// Runs `entry` (a call expression) against `program`, recording a snapshot
/// at every step.
pub fn run(program: &Program, entry: &str, limits: Limits) -> Result<ExecutionTrace, InterpError> {
    let entry_expr = parse_expr(entry)?;
    if !matches!(entry_expr.kind, ExprKind::Call { .. }) {
        return Err(InterpError::EntryNotCall(entry.to_string()));
    }
    let mut machine = Machine::new(program, limits);
    let entry_expr = machine.adopt(program, &entry_expr);

    // Module-level statements (normally just definitions) run untraced.
    let mut init = Ok(Control::Next);
    for stmt in &program.statements {
        init = machine.exec_stmt(stmt);
        if init.is_err() {
            break;
        }
    }
    let outcome = match init {
        Err(halt) => halt_outcome(halt, 0),
        Ok(_) => {
            machine.steps = 0;
            machine.recording = true;
            match machine.eval(&entry_expr) {
                Ok(value) => Outcome::Completed { value },
                Err(halt) => halt_outcome(halt, machine.events.len().saturating_sub(1)),
            }
        }
    };
    Ok(ExecutionTrace {
        entry: entry.to_string(),
        events: machine.events,
        outcome,
    })
}

fn halt_outcome(halt: Halt, step: usize) -> Outcome {
    match halt.into_message() {
        Some(message) => Outcome::RuntimeFault { message, step },
        None => Outcome::StepLimit,
    }
}

/// Evaluates `expr` against a frozen state without modifying it.
///
/// Nested calls run untraced under `limits`, with the snapshot's stack depth
/// counting toward `max_depth`. Free names resolve from the innermost frame
/// through its lexical parents, then builtins. `expr` may be a node of
/// `program` or a freshly parsed expression.
pub fn eval_pure(
    program: &Program,
    expr: &Expr,
    scope: Scope<'_>,
    limits: Limits,
) -> Result<Value, EvalError> {
    let module_only;
    let scope = if scope.stack.is_empty() {
        module_only = [Frame {
            frame_id: 0,
            function_name: MODULE_FRAME.to_string(),
            bindings: Vec::new(),
            parent_frame_id: None,
        }];
        Scope {
            stack: &module_only,
            heap: scope.heap,
        }
    } else {
        scope
    };
    let mut machine = Machine::from_scope(program, scope, limits);

    let from_program = matches!(
        node_at(program, expr.id()),
        Ok(NodeRef::Expr(e)) if e.span == expr.span && e.same_shape(expr)
    );
    let result = if from_program {
        machine.eval(expr)
    } else {
        let owned = machine.adopt(program, expr);
        machine.eval(&owned)
    };
    result.map_err(|h| match h {
        Halt::Fault(m) => EvalError::Fault(m),
        Halt::Unbound(n) => EvalError::UnboundName(n),
        Halt::StepLimit => EvalError::StepLimit,
    })
}

impl Machine {
    /// Takes in an expression parsed outside `program`. Its lambdas need ids
    /// that cannot collide with the program's.
    fn adopt(&mut self, program: &Program, expr: &Expr) -> Expr {
        let mut owned = expr.clone();
        let base = program.max_node_id().map_or(0, |m| m + 1);
        shift_ids(&mut owned, base);
        owned.walk(&mut |e| {
            if let Some(f) = function_of_expr(e) {
                self.functions.insert(e.id(), Rc::new(f));
            }
        });
        owned
    }
}

fn shift_ids(expr: &mut Expr, base: NodeId) {
    expr.span.node_id += base;
    for c in expr.children_mut() {
        shift_ids(c, base);
    }
}
