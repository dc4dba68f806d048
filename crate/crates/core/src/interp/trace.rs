use serde::{Deserialize, Serialize};

use super::value::{FrameId, Value};
use crate::lang::NodeId;

pub const MODULE_FRAME: &str = "<module>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binding {
    pub name: String,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub frame_id: FrameId,
    pub function_name: String,
    /// In binding order.
    pub bindings: Vec<Binding>,
    /// Lexically enclosing frame; `None` only for the module frame.
    pub parent_frame_id: Option<FrameId>,
}

impl Frame {
    pub fn get(&self, name: &str) -> Option<&Value> {
        self.bindings.iter().find(|b| b.name == name).map(|b| &b.value)
    }

    pub fn set(&mut self, name: &str, value: Value) {
        match self.bindings.iter_mut().find(|b| b.name == name) {
            Some(b) => b.value = value,
            None => self.bindings.push(Binding {
                name: name.to_string(),
                value,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Line,
    Call,
    Return,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallInfo {
    /// Concrete call text such as `accumulate(add, 11, 1, identity)`.
    pub callee: String,
    pub args: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReturnInfo {
    pub value: Value,
    /// Concrete text of the call being returned from.
    pub call: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step: usize,
    pub kind: EventKind,
    pub line: u32,
    /// Statement for line and return events, function node for call events.
    pub node_id: NodeId,
    /// Call stack, module frame first, innermost last.
    pub stack: Vec<Frame>,
    /// Frames captured by live closures that are not on the call stack.
    pub heap: Vec<Frame>,
    /// Variable written by the statement, for assignment line events.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub assigns: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub call_info: Option<CallInfo>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub return_info: Option<ReturnInfo>,
}

impl TraceEvent {
    pub fn innermost(&self) -> &Frame {
        self.stack.last().expect("stack is never empty")
    }

    pub fn scope(&self) -> Scope<'_> {
        Scope {
            stack: &self.stack,
            heap: &self.heap,
        }
    }

    pub fn frame(&self, frame_id: FrameId) -> Option<&Frame> {
        self.stack
            .iter()
            .chain(self.heap.iter())
            .find(|f| f.frame_id == frame_id)
    }
}

/// A frozen program state to evaluate expressions against.
#[derive(Debug, Clone, Copy)]
pub struct Scope<'a> {
    pub stack: &'a [Frame],
    pub heap: &'a [Frame],
}

impl<'a> Scope<'a> {
    pub fn frames(&self) -> impl Iterator<Item = &'a Frame> {
        self.stack.iter().chain(self.heap.iter())
    }

    fn frame(&self, id: FrameId) -> Option<&'a Frame> {
        self.frames().find(|f| f.frame_id == id)
    }

    /// Resolves `name` from the innermost frame outward through lexical
    /// parents, ending at the module frame. Builtins are not consulted.
    pub fn lookup(&self, name: &str) -> Option<&'a Value> {
        let mut current = self.stack.last();
        while let Some(frame) = current {
            if let Some(v) = frame.get(name) {
                return Some(v);
            }
            current = frame.parent_frame_id.and_then(|p| self.frame(p));
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Completed { value: Value },
    StepLimit,
    RuntimeFault { message: String, step: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub entry: String,
    pub events: Vec<TraceEvent>,
    pub outcome: Outcome,
}

impl ExecutionTrace {
    pub fn completed_value(&self) -> Option<&Value> {
        match &self.outcome {
            Outcome::Completed { value } => Some(value),
            _ => None,
        }
    }

    pub fn event(&self, step: usize) -> Option<&TraceEvent> {
        self.events.get(step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub max_steps: usize,
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_steps: 10_000,
            max_depth: 200,
        }
    }
}

impl Limits {
    /// Clamps both limits to at least 1.
    pub fn new(max_steps: usize, max_depth: usize) -> Self {
        Limits {
            max_steps: max_steps.max(1),
            max_depth: max_depth.max(1),
        }
    }
}
