use std::fmt::Write;

use stepdiff_core::differ::{extract_series, Update};
use stepdiff_core::doc::{unified_diff, DiffDoc};
use stepdiff_core::fixer::{FixResult, Report};
use stepdiff_core::interp::{ExecutionTrace, Outcome};

fn outcome(trace: &ExecutionTrace) -> String {
    match &trace.outcome {
        Outcome::Completed { value } => format!("returned {}", value.render()),
        Outcome::StepLimit => "stopped at the step limit".into(),
        Outcome::RuntimeFault { message, step } => format!("fault at step {step}: {message}"),
    }
}

pub fn trace_summary(trace: &ExecutionTrace) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "entry:   {}", trace.entry);
    let _ = writeln!(out, "steps:   {}", trace.events.len());
    let _ = writeln!(out, "outcome: {}", outcome(trace));
    let series = extract_series(trace);
    if !series.is_empty() {
        let width = series.iter().map(|s| s.key.to_string().len()).max().unwrap_or(0);
        out.push_str("series:\n");
        for s in series {
            let vals: Vec<String> = s.values().iter().map(|v| v.render()).collect();
            let _ = writeln!(out, "  {:width$}  {}", s.key.to_string(), vals.join(" "));
        }
    }
    out
}

pub fn test_report(r: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "tests: {}/{} passed", r.passed_count(), r.cases.len());
    for c in &r.cases {
        if c.passed {
            let _ = writeln!(out, "  PASS {} == {}", c.entry, c.expected);
        } else {
            let got = c.actual.as_deref().or(c.reason.as_deref()).unwrap_or("nothing");
            let _ = writeln!(out, "  FAIL {}: expected {}, got {}", c.entry, c.expected, got);
        }
    }
    out
}

pub fn fix_summary(source: &str, f: &FixResult) -> String {
    let mut out = String::new();
    for e in &f.edits {
        let _ = writeln!(out, "rule {}: {} (node {})", e.rule_id, e.rule, e.site);
    }
    out.push_str(&unified_diff(source, &f.fixed.source, "incorrect", "fixed"));
    let _ = writeln!(
        out,
        "before: {}/{} passed",
        f.incorrect_report.passed_count(),
        f.incorrect_report.cases.len()
    );
    out.push_str(&test_report(&f.fixed_report));
    for a in &f.alternatives {
        let _ = writeln!(out, "also passes: {}: {} (node {})", a.rule_id, a.rule, a.site);
    }
    out
}

/// Values with divergent entries wrapped in brackets.
fn marked(updates: &[Update]) -> String {
    let vals: Vec<String> = updates
        .iter()
        .map(|u| {
            if u.divergent {
                format!("[{}]", u.value.render())
            } else {
                u.value.render()
            }
        })
        .collect();
    if vals.is_empty() {
        "-".into()
    } else {
        vals.join(" ")
    }
}

pub fn diff_table(doc: &DiffDoc) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "entry: {}", doc.entry);
    let _ = writeln!(out, "incorrect {}; fixed {}", outcome(&doc.incorrect_trace), outcome(&doc.fixed_trace));
    let rows: Vec<[String; 4]> = doc
        .kept_series
        .iter()
        .map(|s| {
            let status = match s.status.first_index() {
                Some(i) if matches!(s.status, stepdiff_core::differ::SeriesStatus::LengthMismatch { .. }) => {
                    format!("length@{i}")
                }
                Some(i) => format!("diverges@{i}"),
                None => "identical".into(),
            };
            [s.key.to_string(), status, marked(&s.incorrect.updates), marked(&s.fixed.updates)]
        })
        .collect();
    let header = ["SERIES".to_string(), "STATUS".into(), "INCORRECT".into(), "FIXED".into()];
    let mut widths = header.clone().map(|h| h.len());
    for r in &rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    for r in std::iter::once(&header).chain(&rows) {
        let line = format!("{:w0$}  {:w1$}  {:w2$}  {}", r[0], r[1], r[2], r[3], w0 = widths[0], w1 = widths[1], w2 = widths[2]);
        let _ = writeln!(out, "{}", line.trim_end());
    }
    if rows.is_empty() {
        out.push_str("(no series differ)\n");
    }
    if !doc.filtered_keys.is_empty() {
        let names: Vec<String> = doc.filtered_keys.iter().map(|k| k.to_string()).collect();
        let _ = writeln!(out, "filtered (identical): {}", names.join(", "));
    }
    if let Some(d) = &doc.primary_divergence {
        let show = |v: &Option<stepdiff_core::interp::Value>, s: Option<usize>| match (v, s) {
            (Some(v), Some(s)) => format!("{} at step {s}", v.render()),
            _ => "missing".into(),
        };
        let _ = writeln!(
            out,
            "first divergence: {}[{}]: incorrect {} vs fixed {}",
            d.key,
            d.index,
            show(&d.incorrect_value, d.incorrect_step),
            show(&d.fixed_value, d.fixed_step)
        );
    }
    out
}
