//! The exportable diff document and its versioned envelope.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use similar::{ChangeTag, TextDiff};

use crate::abstractor::{build_value_tree, ladder, AbstractionLadder, DEFAULT_CAP};
use crate::differ::{align_and_filter, extract_series, first_divergence, AlignedSeries, Divergence, SeriesKey};
use crate::fixer::{Edit, FixResult, Report};
use crate::interp::{run, ExecutionTrace, InterpError, Limits};
use crate::lang::{node_at, parse, NodeId, Program};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceSide {
    Incorrect,
    Fixed,
}

impl TraceSide {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceSide::Incorrect => "incorrect",
            TraceSide::Fixed => "fixed",
        }
    }
}

impl fmt::Display for TraceSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TraceSide {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "incorrect" => Ok(TraceSide::Incorrect),
            "fixed" => Ok(TraceSide::Fixed),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffLine {
    /// `-`, `+` or a space.
    pub tag: String,
    pub text: String,
    pub old_line: Option<usize>,
    pub new_line: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hunk {
    /// 1-based.
    pub old_start: usize,
    pub old_len: usize,
    pub new_start: usize,
    pub new_len: usize,
    pub lines: Vec<DiffLine>,
}

/// Line hunks with three lines of context.
pub fn source_hunks(old: &str, new: &str) -> Vec<Hunk> {
    let diff = TextDiff::from_lines(old, new);
    let mut hunks = Vec::new();
    for group in diff.grouped_ops(3) {
        let (Some(first), Some(last)) = (group.first(), group.last()) else { continue };
        let old_range = first.old_range().start..last.old_range().end;
        let new_range = first.new_range().start..last.new_range().end;
        let mut lines = Vec::new();
        for op in &group {
            for change in diff.iter_changes(op) {
                let tag = match change.tag() {
                    ChangeTag::Delete => "-",
                    ChangeTag::Insert => "+",
                    ChangeTag::Equal => " ",
                };
                lines.push(DiffLine {
                    tag: tag.to_string(),
                    text: change.value().trim_end_matches(['\n', '\r']).to_string(),
                    old_line: change.old_index().map(|i| i + 1),
                    new_line: change.new_index().map(|i| i + 1),
                });
            }
        }
        hunks.push(Hunk {
            old_start: old_range.start + 1,
            old_len: old_range.len(),
            new_start: new_range.start + 1,
            new_len: new_range.len(),
            lines,
        });
    }
    hunks
}

/// Unified diff text between two sources.
pub fn unified_diff(old: &str, new: &str, old_name: &str, new_name: &str) -> String {
    TextDiff::from_lines(old, new)
        .unified_diff()
        .context_radius(3)
        .header(old_name, new_name)
        .to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixSummary {
    pub rule_id: String,
    pub site: NodeId,
    pub edits: Vec<Edit>,
    pub alternatives: Vec<Edit>,
    pub incorrect_report: Report,
    pub fixed_report: Report,
}

impl From<&FixResult> for FixSummary {
    fn from(f: &FixResult) -> Self {
        FixSummary {
            rule_id: f.rule_id.clone(),
            site: f.site,
            edits: f.edits.clone(),
            alternatives: f.alternatives.clone(),
            incorrect_report: f.incorrect_report.clone(),
            fixed_report: f.fixed_report.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LadderEntry {
    pub trace: TraceSide,
    pub step: usize,
    /// The statement (or lambda) the event at `step` belongs to.
    pub node_id: NodeId,
    pub ladder: AbstractionLadder,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffDoc {
    pub assignment_id: String,
    pub entry: String,
    pub limits: Limits,
    pub incorrect_source: String,
    pub fixed_source: String,
    pub source_diff: Vec<Hunk>,
    pub fix: Option<FixSummary>,
    pub incorrect_trace: ExecutionTrace,
    pub fixed_trace: ExecutionTrace,
    pub kept_series: Vec<AlignedSeries>,
    pub filtered_keys: Vec<SeriesKey>,
    pub primary_divergence: Option<Divergence>,
    /// Sorted by trace, step, node.
    pub ladders: Vec<LadderEntry>,
}

impl DiffDoc {
    pub fn trace(&self, side: TraceSide) -> &ExecutionTrace {
        match side {
            TraceSide::Incorrect => &self.incorrect_trace,
            TraceSide::Fixed => &self.fixed_trace,
        }
    }

    pub fn source(&self, side: TraceSide) -> &str {
        match side {
            TraceSide::Incorrect => &self.incorrect_source,
            TraceSide::Fixed => &self.fixed_source,
        }
    }

    pub fn ladder(&self, side: TraceSide, step: usize, node_id: NodeId) -> Option<&AbstractionLadder> {
        self.ladders
            .iter()
            .find(|l| l.trace == side && l.step == step && l.node_id == node_id)
            .map(|l| &l.ladder)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DiffError {
    #[error(transparent)]
    Interp(#[from] InterpError),
}

/// Runs both programs on `entry` and assembles the document.
pub fn build_diff(
    assignment_id: &str,
    incorrect: &Program,
    fix: &FixResult,
    entry: &str,
    limits: Limits,
) -> Result<DiffDoc, DiffError> {
    build_diff_programs(assignment_id, incorrect, &fix.fixed, Some(FixSummary::from(fix)), entry, limits)
}

/// As [`build_diff`] for an arbitrary pair of programs.
pub fn build_diff_programs(
    assignment_id: &str,
    incorrect: &Program,
    fixed: &Program,
    fix: Option<FixSummary>,
    entry: &str,
    limits: Limits,
) -> Result<DiffDoc, DiffError> {
    let incorrect_trace = run(incorrect, entry, limits)?;
    let fixed_trace = run(fixed, entry, limits)?;
    let (kept, filtered) = align_and_filter(&extract_series(&incorrect_trace), &extract_series(&fixed_trace));
    let primary_divergence = first_divergence(&kept).ok();

    let mut ladders = Vec::new();
    let mut seen = BTreeSet::new();
    for series in &kept {
        for (side, program, trace, s) in [
            (TraceSide::Incorrect, incorrect, &incorrect_trace, &series.incorrect),
            (TraceSide::Fixed, fixed, &fixed_trace, &series.fixed),
        ] {
            for u in s.updates.iter().filter(|u| u.divergent) {
                if !seen.insert((side, u.step, u.node_id)) {
                    continue;
                }
                let Ok(tree) = build_value_tree(program, trace, u.step) else { continue };
                if tree.value.as_ref().is_some_and(|v| v.is_first_order()) {
                    ladders.push(LadderEntry {
                        trace: side,
                        step: u.step,
                        node_id: u.node_id,
                        ladder: ladder(&tree, DEFAULT_CAP),
                    });
                }
            }
        }
    }
    ladders.sort_by_key(|l| (l.trace, l.step, l.node_id));

    Ok(DiffDoc {
        assignment_id: assignment_id.to_string(),
        entry: entry.to_string(),
        limits,
        incorrect_source: incorrect.source.clone(),
        fixed_source: fixed.source.clone(),
        source_diff: source_hunks(&incorrect.source, &fixed.source),
        fix,
        incorrect_trace,
        fixed_trace,
        kept_series: kept,
        filtered_keys: filtered,
        primary_divergence,
        ladders,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocEnvelope {
    pub format_version: u32,
    pub doc: DiffDoc,
    /// RFC 3339 timestamp, supplied by the caller.
    pub created_at: String,
    pub tool_version: String,
}

impl DocEnvelope {
    pub fn new(doc: DiffDoc, created_at: impl Into<String>) -> Self {
        DocEnvelope {
            format_version: FORMAT_VERSION,
            doc,
            created_at: created_at.into(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DocError {
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("document integrity: {0}")]
    Integrity(String),
}

/// Sorts object keys recursively, independent of how serde_json orders maps.
fn canonical(v: Json) -> Json {
    match v {
        Json::Object(map) => {
            let mut entries: Vec<(String, Json)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Json::Object(entries.into_iter().map(|(k, v)| (k, canonical(v))).collect())
        }
        Json::Array(items) => Json::Array(items.into_iter().map(canonical).collect()),
        other => other,
    }
}

pub fn to_canonical_json<T: Serialize>(value: &T) -> Json {
    canonical(serde_json::to_value(value).expect("document types serialize"))
}

/// Compact JSON with sorted keys. Equal envelopes export to equal bytes.
pub fn export(envelope: &DocEnvelope) -> Vec<u8> {
    serde_json::to_vec(&to_canonical_json(envelope)).expect("json values serialize")
}

pub fn import(bytes: &[u8]) -> Result<DocEnvelope, DocError> {
    let envelope: DocEnvelope = serde_json::from_slice(bytes)?;
    if envelope.format_version != FORMAT_VERSION {
        return Err(DocError::UnsupportedVersion(envelope.format_version));
    }
    check_integrity(&envelope.doc).map_err(DocError::Integrity)?;
    Ok(envelope)
}

/// Every step and node the document refers to must exist in its traces and
/// programs; filtered and kept keys must be disjoint; the primary divergence
/// must point at a kept series.
pub fn check_integrity(doc: &DiffDoc) -> Result<(), String> {
    let programs = [
        (TraceSide::Incorrect, parse(&doc.incorrect_source).map_err(|e| format!("incorrect source: {e}"))?),
        (TraceSide::Fixed, parse(&doc.fixed_source).map_err(|e| format!("fixed source: {e}"))?),
    ];
    let program = |side: TraceSide| &programs.iter().find(|(s, _)| *s == side).expect("both sides").1;
    let check_ref = |side: TraceSide, step: usize, node: NodeId| -> Result<(), String> {
        let trace = doc.trace(side);
        let ev = trace
            .event(step)
            .ok_or_else(|| format!("{side} trace has no step {step}"))?;
        if ev.step != step {
            return Err(format!("{side} trace step {step} is numbered {}", ev.step));
        }
        node_at(program(side), node).map_err(|_| format!("{side} program has no node {node}"))?;
        Ok(())
    };
    for (side, trace) in [(TraceSide::Incorrect, &doc.incorrect_trace), (TraceSide::Fixed, &doc.fixed_trace)] {
        for ev in &trace.events {
            node_at(program(side), ev.node_id).map_err(|_| format!("{side} step {} names missing node", ev.step))?;
        }
    }

    let kept: BTreeSet<&SeriesKey> = doc.kept_series.iter().map(|s| &s.key).collect();
    if kept.len() != doc.kept_series.len() {
        return Err("duplicate kept series".into());
    }
    if let Some(k) = doc.filtered_keys.iter().find(|k| kept.contains(k)) {
        return Err(format!("{k} is both kept and filtered"));
    }
    for s in &doc.kept_series {
        if s.status.first_index().is_none() {
            return Err(format!("kept series {} is identical", s.key));
        }
        for (side, series) in [(TraceSide::Incorrect, &s.incorrect), (TraceSide::Fixed, &s.fixed)] {
            for u in &series.updates {
                check_ref(side, u.step, u.node_id)?;
                if u.visible_at >= doc.trace(side).events.len() {
                    return Err(format!("{side} update visible past the end of the trace"));
                }
            }
        }
    }
    match (&doc.primary_divergence, doc.kept_series.is_empty()) {
        (None, true) => {}
        (None, false) => return Err("kept series without a primary divergence".into()),
        (Some(_), true) => return Err("primary divergence without kept series".into()),
        (Some(d), false) => {
            if !kept.contains(&d.key) {
                return Err(format!("primary divergence names unkept series {}", d.key));
            }
        }
    }
    for l in &doc.ladders {
        check_ref(l.trace, l.step, l.node_id)?;
        if l.ladder.levels.is_empty() || l.ladder.levels.len() > l.ladder.cap.saturating_add(1) {
            return Err(format!("{} ladder at step {} has a bad length", l.trace, l.step));
        }
    }
    Ok(())
}
