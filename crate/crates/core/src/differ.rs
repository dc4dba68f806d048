//! Per-variable and per-function value series, and their comparison across
//! an incorrect and a fixed run.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::interp::{EventKind, ExecutionTrace, FrameId, Value};
use crate::lang::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Variable,
    Return,
}

/// Orders by kind, then function, then name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SeriesKey {
    pub kind: SeriesKind,
    pub function_name: String,
    /// Variable name, or the function name again for returns.
    pub name: String,
}

impl SeriesKey {
    pub fn variable(function_name: &str, name: &str) -> Self {
        SeriesKey {
            kind: SeriesKind::Variable,
            function_name: function_name.to_string(),
            name: name.to_string(),
        }
    }

    pub fn returns(function_name: &str) -> Self {
        SeriesKey {
            kind: SeriesKind::Return,
            function_name: function_name.to_string(),
            name: function_name.to_string(),
        }
    }
}

impl std::fmt::Display for SeriesKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            SeriesKind::Variable => write!(f, "{}.{}", self.function_name, self.name),
            SeriesKind::Return => write!(f, "return {}", self.function_name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Update {
    pub value: Value,
    /// The assignment line event, the call event for parameters, or the
    /// return event.
    pub step: usize,
    /// First step whose snapshot shows the new value.
    pub visible_at: usize,
    pub frame_id: FrameId,
    pub line: u32,
    pub node_id: NodeId,
    /// `name = value` for variables, the concrete call text for returns.
    pub rendering: String,
    /// Set by alignment when this entry differs from its counterpart.
    #[serde(default)]
    pub divergent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueSeries {
    pub key: SeriesKey,
    pub updates: Vec<Update>,
}

impl ValueSeries {
    pub fn values(&self) -> Vec<&Value> {
        self.updates.iter().map(|u| &u.value).collect()
    }
}

/// Series sorted by key. Parameters count as updated at the call event;
/// every activation of a function feeds the same series.
pub fn extract_series(trace: &ExecutionTrace) -> Vec<ValueSeries> {
    let mut series: BTreeMap<SeriesKey, Vec<Update>> = BTreeMap::new();
    for (i, ev) in trace.events.iter().enumerate() {
        let frame = ev.innermost();
        match ev.kind {
            EventKind::Call => {
                for b in &frame.bindings {
                    series
                        .entry(SeriesKey::variable(&frame.function_name, &b.name))
                        .or_default()
                        .push(Update {
                            value: b.value.clone(),
                            step: ev.step,
                            visible_at: ev.step,
                            frame_id: frame.frame_id,
                            line: ev.line,
                            node_id: ev.node_id,
                            rendering: format!("{} = {}", b.name, b.value),
                            divergent: false,
                        });
                }
            }
            EventKind::Line => {
                let Some(name) = &ev.assigns else { continue };
                // The new value shows up at the frame's next event; a fault
                // or the step limit may leave it unobserved.
                let seen = trace.events[i + 1..]
                    .iter()
                    .find(|e| e.innermost().frame_id == frame.frame_id)
                    .and_then(|e| e.innermost().get(name).map(|v| (e.step, v)));
                if let Some((visible_at, value)) = seen {
                    series
                        .entry(SeriesKey::variable(&frame.function_name, name))
                        .or_default()
                        .push(Update {
                            value: value.clone(),
                            step: ev.step,
                            visible_at,
                            frame_id: frame.frame_id,
                            line: ev.line,
                            node_id: ev.node_id,
                            rendering: format!("{name} = {value}"),
                            divergent: false,
                        });
                }
            }
            EventKind::Return => {
                let Some(info) = &ev.return_info else { continue };
                series
                    .entry(SeriesKey::returns(&frame.function_name))
                    .or_default()
                    .push(Update {
                        value: info.value.clone(),
                        step: ev.step,
                        visible_at: ev.step,
                        frame_id: frame.frame_id,
                        line: ev.line,
                        node_id: ev.node_id,
                        rendering: info.call.clone(),
                        divergent: false,
                    });
            }
        }
    }
    series
        .into_iter()
        .map(|(key, updates)| ValueSeries { key, updates })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesStatus {
    Identical,
    Divergent { first_index: usize },
    /// One series is a strict prefix of the other. `first_index` is the
    /// length of the shorter one.
    LengthMismatch { first_index: usize },
}

impl SeriesStatus {
    pub fn first_index(self) -> Option<usize> {
        match self {
            SeriesStatus::Identical => None,
            SeriesStatus::Divergent { first_index } | SeriesStatus::LengthMismatch { first_index } => {
                Some(first_index)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedSeries {
    pub key: SeriesKey,
    pub incorrect: ValueSeries,
    pub fixed: ValueSeries,
    pub status: SeriesStatus,
}

impl AlignedSeries {
    /// Incorrect-trace step of the first divergent entry, if that side has one.
    pub fn incorrect_step(&self) -> Option<usize> {
        let i = self.status.first_index()?;
        self.incorrect.updates.get(i).map(|u| u.step)
    }
}

pub fn compare_values(a: &[Update], b: &[Update]) -> SeriesStatus {
    if let Some(i) = a.iter().zip(b).position(|(x, y)| !x.value.equivalent(&y.value)) {
        return SeriesStatus::Divergent { first_index: i };
    }
    if a.len() != b.len() {
        return SeriesStatus::LengthMismatch {
            first_index: a.len().min(b.len()),
        };
    }
    SeriesStatus::Identical
}

fn mark_divergent(mine: &mut [Update], theirs: &[Update], from: usize) {
    for (i, u) in mine.iter_mut().enumerate().skip(from) {
        u.divergent = theirs.get(i).is_none_or(|t| !t.value.equivalent(&u.value));
    }
}

fn align(key: SeriesKey, incorrect: Option<ValueSeries>, fixed: Option<ValueSeries>) -> AlignedSeries {
    let empty = || ValueSeries {
        key: key.clone(),
        updates: Vec::new(),
    };
    let mut incorrect = incorrect.unwrap_or_else(empty);
    let mut fixed = fixed.unwrap_or_else(empty);
    let status = compare_values(&incorrect.updates, &fixed.updates);
    if let Some(from) = status.first_index() {
        let theirs = fixed.updates.clone();
        mark_divergent(&mut incorrect.updates, &theirs, from);
        let theirs = incorrect.updates.clone();
        mark_divergent(&mut fixed.updates, &theirs, from);
    }
    AlignedSeries {
        key,
        incorrect,
        fixed,
        status,
    }
}

/// Pairs series by key. Identical pairs are filtered out; the rest are kept,
/// ordered by the incorrect-trace step where they first diverge (series with
/// no such step last), then by key.
pub fn align_and_filter(incorrect: &[ValueSeries], fixed: &[ValueSeries]) -> (Vec<AlignedSeries>, Vec<SeriesKey>) {
    let mut pairs: BTreeMap<SeriesKey, (Option<ValueSeries>, Option<ValueSeries>)> = BTreeMap::new();
    for s in incorrect {
        pairs.entry(s.key.clone()).or_default().0 = Some(s.clone());
    }
    for s in fixed {
        pairs.entry(s.key.clone()).or_default().1 = Some(s.clone());
    }
    let mut kept = Vec::new();
    let mut filtered = Vec::new();
    for (key, (a, b)) in pairs {
        let aligned = align(key, a, b);
        if aligned.status == SeriesStatus::Identical {
            filtered.push(aligned.key);
        } else {
            kept.push(aligned);
        }
    }
    kept.sort_by(|x, y| {
        let sx = x.incorrect_step().unwrap_or(usize::MAX);
        let sy = y.incorrect_step().unwrap_or(usize::MAX);
        sx.cmp(&sy).then_with(|| x.key.cmp(&y.key))
    });
    (kept, filtered)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Divergence {
    pub key: SeriesKey,
    pub index: usize,
    pub incorrect_value: Option<Value>,
    pub fixed_value: Option<Value>,
    pub incorrect_step: Option<usize>,
    pub fixed_step: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("the traces do not diverge")]
pub struct NoDivergence;

/// The kept entry diverging at the earliest incorrect-trace step, ties going
/// to the smaller key.
pub fn first_divergence(kept: &[AlignedSeries]) -> Result<Divergence, NoDivergence> {
    let best = kept
        .iter()
        .filter(|s| s.status.first_index().is_some())
        .min_by(|x, y| {
            let sx = x.incorrect_step().unwrap_or(usize::MAX);
            let sy = y.incorrect_step().unwrap_or(usize::MAX);
            sx.cmp(&sy).then_with(|| x.key.cmp(&y.key))
        })
        .ok_or(NoDivergence)?;
    let index = best.status.first_index().ok_or(NoDivergence)?;
    let inc = best.incorrect.updates.get(index);
    let fix = best.fixed.updates.get(index);
    Ok(Divergence {
        key: best.key.clone(),
        index,
        incorrect_value: inc.map(|u| u.value.clone()),
        fixed_value: fix.map(|u| u.value.clone()),
        incorrect_step: inc.map(|u| u.step),
        fixed_step: fix.map(|u| u.step),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::{run, Limits};
    use crate::lang::parse;

    const ITERATIVE: &str = include_str!("../../../corpus/accumulate/solution.mini");
    const ITERATIVE_BUG: &str = include_str!("../../../corpus/accumulate/bugs/combiner_first_arg.mini");
    const RECURSIVE_BUG: &str = include_str!("../../../corpus/accumulate/bugs/base_every_level.mini");
    const RECURSIVE_FIXED: &str = "\
def accumulate(combiner, base, n, term):
    if n == 0:
        return base
    else:
        return combiner(term(n), accumulate(combiner, base, n - 1, term))
";

    fn series(src: &str, entry: &str) -> Vec<ValueSeries> {
        extract_series(&run(&parse(src).unwrap(), entry, Limits::default()).unwrap())
    }

    fn rendered(s: &[ValueSeries], key: &SeriesKey) -> Vec<String> {
        let found = s.iter().find(|x| &x.key == key).unwrap();
        found.updates.iter().map(|u| u.value.render()).collect()
    }

    fn key(name: &str) -> SeriesKey {
        SeriesKey::variable("accumulate", name)
    }

    #[test]
    fn iterative_series() {
        let entry = "accumulate(add, 0, 5, identity)";
        let bug = series(ITERATIVE_BUG, entry);
        assert_eq!(rendered(&bug, &key("total")), ["0", "2", "4", "6", "8", "10"]);
        assert_eq!(rendered(&bug, &key("i")), ["1", "2", "3", "4", "5", "6"]);
        assert_eq!(rendered(&bug, &key("n")), ["5"]);
        let fixed = series(ITERATIVE, entry);
        assert_eq!(rendered(&fixed, &key("total")), ["0", "1", "3", "6", "10", "15"]);

        let total = bug.iter().find(|s| s.key == key("total")).unwrap();
        assert!(total.updates.iter().skip(1).all(|u| u.line == 5));
        assert!(total.updates.windows(2).all(|w| w[0].step < w[1].step));
    }

    #[test]
    fn iterative_filtering() {
        let entry = "accumulate(add, 0, 5, identity)";
        let (kept, filtered) = align_and_filter(&series(ITERATIVE_BUG, entry), &series(ITERATIVE, entry));
        let kept_keys: Vec<_> = kept.iter().map(|s| s.key.clone()).collect();
        assert_eq!(kept_keys, [key("total"), SeriesKey::returns("accumulate")]);
        assert_eq!(kept[0].status, SeriesStatus::Divergent { first_index: 1 });
        for name in ["combiner", "base", "n", "term", "i"] {
            assert!(filtered.contains(&key(name)), "{name}");
        }
        let flags: Vec<bool> = kept[0].incorrect.updates.iter().map(|u| u.divergent).collect();
        // both sides happen to hold 6 at index 3
        assert_eq!(flags, [false, true, true, false, true, true]);
    }

    #[test]
    fn identical_traces_have_nothing_kept() {
        let entry = "accumulate(add, 11, 3, square)";
        let s = series(ITERATIVE, entry);
        let (kept, filtered) = align_and_filter(&s, &s);
        assert!(kept.is_empty());
        assert_eq!(filtered.len(), s.len());
        assert_eq!(first_divergence(&kept), Err(NoDivergence));
    }

    #[test]
    fn recursive_returns_diverge_at_one() {
        let entry = "accumulate(add, 11, 5, identity)";
        let bug = series(RECURSIVE_BUG, entry);
        let fixed = series(RECURSIVE_FIXED, entry);
        let ret = SeriesKey::returns("accumulate");
        assert_eq!(rendered(&bug, &ret), ["11", "23", "36", "50", "65", "81"]);
        assert_eq!(rendered(&fixed, &ret), ["11", "12", "14", "17", "21", "26"]);
        assert_eq!(rendered(&bug, &key("n")), ["5", "4", "3", "2", "1", "0"]);

        let (kept, _) = align_and_filter(&bug, &fixed);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].status, SeriesStatus::Divergent { first_index: 1 });
        let d = first_divergence(&kept).unwrap();
        assert_eq!(d.key, ret);
        assert_eq!(d.index, 1);
        assert_eq!(d.incorrect_value, Some(Value::int(23)));
        assert_eq!(d.fixed_value, Some(Value::int(12)));
        let first = &kept[0].incorrect.updates[1];
        assert_eq!(first.rendering, "accumulate(add, 11, 1, identity)");
    }

    #[test]
    fn one_sided_keys_mismatch_at_zero() {
        let a = series("def f(x):\n    y = x\n    return y\n", "f(1)");
        let b = series("def f(x):\n    return x\n", "f(1)");
        let (kept, _) = align_and_filter(&a, &b);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].key, SeriesKey::variable("f", "y"));
        assert_eq!(kept[0].status, SeriesStatus::LengthMismatch { first_index: 0 });
        assert!(kept[0].fixed.updates.is_empty());
    }

    fn synthetic(key: SeriesKey, values: &[(i64, usize)]) -> ValueSeries {
        ValueSeries {
            key,
            updates: values
                .iter()
                .map(|&(v, step)| Update {
                    value: Value::int(v),
                    step,
                    visible_at: step,
                    frame_id: 1,
                    line: 1,
                    node_id: 0,
                    rendering: v.to_string(),
                    divergent: false,
                })
                .collect(),
        }
    }

    #[test]
    fn ties_go_to_the_smaller_key() {
        let a = vec![
            synthetic(SeriesKey::variable("f", "b"), &[(1, 3)]),
            synthetic(SeriesKey::variable("f", "a"), &[(1, 3)]),
        ];
        let b = vec![
            synthetic(SeriesKey::variable("f", "b"), &[(2, 3)]),
            synthetic(SeriesKey::variable("f", "a"), &[(2, 3)]),
        ];
        let (kept, _) = align_and_filter(&a, &b);
        assert_eq!(first_divergence(&kept).unwrap().key, SeriesKey::variable("f", "a"));
    }

    #[test]
    fn single_series_diverging_at_zero() {
        let a = vec![synthetic(SeriesKey::returns("g"), &[(1, 4), (2, 9)])];
        let b = vec![synthetic(SeriesKey::returns("g"), &[(5, 4), (2, 9)])];
        let (kept, _) = align_and_filter(&a, &b);
        let d = first_divergence(&kept).unwrap();
        assert_eq!((d.index, d.incorrect_step), (0, Some(4)));
    }

    #[test]
    fn prefix_is_length_mismatch() {
        let a = synthetic(SeriesKey::returns("g"), &[(1, 1), (2, 2)]);
        let b = synthetic(SeriesKey::returns("g"), &[(1, 1)]);
        assert_eq!(
            compare_values(&a.updates, &b.updates),
            SeriesStatus::LengthMismatch { first_index: 1 }
        );
    }

    #[test]
    fn immediate_fault_gives_few_series() {
        let t = run(&parse("def f(x):\n    return x // 0\n").unwrap(), "f(1)", Limits::default()).unwrap();
        let s = extract_series(&t);
        assert!(s.iter().all(|x| x.key.kind == SeriesKind::Variable));
    }
}
