//! Transport-free request routing for the `/api` endpoints.

use serde_json::{json, Value as Json};

use crate::abstractor::{build_value_tree, build_value_tree_at, ladder, AbstractError, DEFAULT_CAP};
use crate::differ::SeriesKind;
use crate::doc::{check_integrity, to_canonical_json, DocEnvelope, DocError, TraceSide};
use crate::interp::{Frame, FrameId};
use crate::lang::{parse, NodeId, Program};

#[derive(Debug, Clone, PartialEq)]
pub struct ApiResponse {
    pub status: u16,
    pub body: Json,
}

impl ApiResponse {
    fn ok(body: Json) -> Self {
        ApiResponse { status: 200, body }
    }

    fn error(status: u16, message: impl Into<String>) -> Self {
        ApiResponse {
            status,
            body: json!({ "error": message.into() }),
        }
    }
}

pub struct DocService {
    envelope: DocEnvelope,
    envelope_json: Json,
    incorrect: Program,
    fixed: Program,
}

impl DocService {
    pub fn new(envelope: DocEnvelope) -> Result<Self, DocError> {
        check_integrity(&envelope.doc).map_err(DocError::Integrity)?;
        let reparse = |src: &str| parse(src).map_err(|e| DocError::Integrity(e.to_string()));
        let incorrect = reparse(&envelope.doc.incorrect_source)?;
        let fixed = reparse(&envelope.doc.fixed_source)?;
        Ok(DocService {
            envelope_json: to_canonical_json(&envelope),
            envelope,
            incorrect,
            fixed,
        })
    }

    pub fn envelope(&self) -> &DocEnvelope {
        &self.envelope
    }

    fn program(&self, side: TraceSide) -> &Program {
        match side {
            TraceSide::Incorrect => &self.incorrect,
            TraceSide::Fixed => &self.fixed,
        }
    }

    /// Routes a GET path. Paths outside `/api` yield `None`.
    pub fn handle(&self, path: &str) -> Option<ApiResponse> {
        let path = path.split(['?', '#']).next().unwrap_or_default();
        let rest = path.strip_prefix("/api")?;
        if !rest.is_empty() && !rest.starts_with('/') {
            return None;
        }
        let segs: Vec<&str> = rest.split('/').filter(|s| !s.is_empty()).collect();
        Some(match segs.as_slice() {
            ["doc"] => ApiResponse::ok(self.envelope_json.clone()),
            ["state", rest @ ..] => match rest {
                [trace, step] => self.state(trace, step),
                _ => ApiResponse::error(400, "expected /api/state/{trace}/{step}"),
            },
            ["ladder", rest @ ..] => match rest {
                [trace, step, node] => self.ladder(trace, step, node),
                _ => ApiResponse::error(400, "expected /api/ladder/{trace}/{step}/{node}"),
            },
            _ => ApiResponse::error(404, format!("no endpoint {path}")),
        })
    }

    fn locate(&self, trace: &str, step: &str) -> Result<(TraceSide, usize), ApiResponse> {
        let step: usize = step
            .parse()
            .map_err(|_| ApiResponse::error(400, format!("bad step {step:?}")))?;
        let side: TraceSide = trace
            .parse()
            .map_err(|_| ApiResponse::error(404, format!("unknown trace {trace:?}")))?;
        if step >= self.envelope.doc.trace(side).events.len() {
            return Err(ApiResponse::error(404, format!("{side} trace has no step {step}")));
        }
        Ok((side, step))
    }

    /// Whether the latest update of `name` in `frame` visible at `step`
    /// was flagged divergent.
    fn binding_divergent(&self, side: TraceSide, step: usize, frame: &Frame, name: &str) -> bool {
        let Some(series) = self.envelope.doc.kept_series.iter().find(|s| {
            s.key.kind == SeriesKind::Variable && s.key.function_name == frame.function_name && s.key.name == name
        }) else {
            return false;
        };
        let updates = match side {
            TraceSide::Incorrect => &series.incorrect.updates,
            TraceSide::Fixed => &series.fixed.updates,
        };
        updates
            .iter()
            .rfind(|u| u.frame_id == frame.frame_id && u.visible_at <= step)
            .is_some_and(|u| u.divergent)
    }

    fn frame_json(&self, side: TraceSide, step: usize, frame: &Frame) -> Json {
        let bindings: Vec<Json> = frame
            .bindings
            .iter()
            .map(|b| {
                json!({
                    "name": b.name,
                    "value": b.value,
                    "rendering": b.value.render(),
                    "divergent": self.binding_divergent(side, step, frame, &b.name),
                })
            })
            .collect();
        json!({
            "frame_id": frame.frame_id,
            "function_name": frame.function_name,
            "parent_frame_id": frame.parent_frame_id,
            "bindings": bindings,
        })
    }

    fn state(&self, trace: &str, step: &str) -> ApiResponse {
        let (side, step) = match self.locate(trace, step) {
            Ok(x) => x,
            Err(r) => return r,
        };
        let ev = &self.envelope.doc.trace(side).events[step];
        let return_divergent = self.envelope.doc.kept_series.iter().any(|s| {
            let updates = match side {
                TraceSide::Incorrect => &s.incorrect.updates,
                TraceSide::Fixed => &s.fixed.updates,
            };
            s.key.kind == SeriesKind::Return && updates.iter().any(|u| u.step == step && u.divergent)
        });
        let frames: Vec<Json> = ev.stack.iter().map(|f| self.frame_json(side, step, f)).collect();
        let heap: Vec<Json> = ev.heap.iter().map(|f| self.frame_json(side, step, f)).collect();
        let current: FrameId = ev.innermost().frame_id;
        ApiResponse::ok(to_canonical_json(&json!({
            "trace": side,
            "step": step,
            "kind": ev.kind,
            "line": ev.line,
            "node_id": ev.node_id,
            "current_frame_id": current,
            "frames": frames,
            "heap": heap,
            "call_info": ev.call_info,
            "return_info": ev.return_info,
            "return_divergent": return_divergent,
            "last_step": self.envelope.doc.trace(side).events.len() - 1,
        })))
    }

    fn ladder(&self, trace: &str, step: &str, node: &str) -> ApiResponse {
        let Ok(node) = node.parse::<NodeId>() else {
            return ApiResponse::error(400, format!("bad node id {node:?}"));
        };
        let (side, step) = match self.locate(trace, step) {
            Ok(x) => x,
            Err(r) => return r,
        };
        let doc = &self.envelope.doc;
        if let Some(l) = doc.ladder(side, step, node) {
            return ApiResponse::ok(to_canonical_json(l));
        }
        let program = self.program(side);
        let trace = doc.trace(side);
        let tree = if trace.events[step].node_id == node {
            build_value_tree(program, trace, step)
        } else {
            build_value_tree_at(program, trace, step, node)
        };
        match tree {
            Ok(t) => ApiResponse::ok(to_canonical_json(&ladder(&t, DEFAULT_CAP))),
            Err(e @ (AbstractError::NoSuchStep(_) | AbstractError::NoExpression(_) | AbstractError::NodeNotInStep { .. })) => {
                ApiResponse::error(404, e.to_string())
            }
            Err(e @ AbstractError::Eval(_)) => ApiResponse::error(422, e.to_string()),
        }
    }
}
