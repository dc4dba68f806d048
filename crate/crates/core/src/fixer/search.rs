use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::rule::{apply_rule, match_sites, RewriteRule};
use super::verify::{verify, Report, TestSuite};
use crate::lang::{format_program, parse, NodeId, Program};

/// Upper bound on chained edits for submissions with several bugs.
pub const MAX_EDITS: usize = 3;

// Safety valve on the multi-edit search frontier.
const MAX_FRONTIER: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub rule_id: String,
    /// The rule as `pattern => replacement`.
    pub rule: String,
    /// Node id in the program the edit was applied to.
    pub site: NodeId,
}

#[derive(Debug, Clone)]
pub struct FixResult {
    pub fixed: Program,
    /// Rule and site of the last edit.
    pub rule_id: String,
    pub site: NodeId,
    /// Every edit in application order. Sites after the first refer to the
    /// intermediate program produced by the previous edit.
    pub edits: Vec<Edit>,
    pub incorrect_report: Report,
    pub fixed_report: Report,
    /// Other single edits that also pass the whole suite.
    pub alternatives: Vec<Edit>,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum FixError {
    #[error("program already passes all {} test cases", .0.cases.len())]
    AlreadyCorrect(Report),
    #[error("no rule produced a program passing all test cases")]
    NoFix(Report),
}

/// Every applicable single edit, rules in list order and sites in pre-order.
/// Rewrites that leave the program unchanged are skipped.
pub fn candidates(program: &Program, rules: &[RewriteRule]) -> Vec<(Edit, Program)> {
    let mut out = Vec::new();
    for rule in rules {
        for site in match_sites(program, rule) {
            if let Ok(p) = apply_rule(program, rule, site.node_id) {
                if !p.same_shape(program) {
                    let edit = Edit {
                        rule_id: rule.rule_id.clone(),
                        rule: rule.to_string(),
                        site: site.node_id,
                    };
                    out.push((edit, p));
                }
            }
        }
    }
    out
}

/// Verifies `candidate`, then re-parses its source and verifies again so a
/// result never rests on an in-memory tree alone.
fn confirmed(candidate: &Program, suite: &TestSuite) -> Option<Report> {
    let report = verify(candidate, suite);
    if !report.all_passed() {
        return None;
    }
    let reparsed = parse(&candidate.source).ok()?;
    let again = verify(&reparsed, suite);
    again.all_passed().then_some(again)
}

/// Applies the first single rule edit that makes the program pass.
pub fn fix(program: &Program, rules: &[RewriteRule], suite: &TestSuite) -> Result<FixResult, FixError> {
    let incorrect_report = verify(program, suite);
    if incorrect_report.all_passed() {
        return Err(FixError::AlreadyCorrect(incorrect_report));
    }
    let mut chosen: Option<(Edit, Program, Report)> = None;
    let mut alternatives = Vec::new();
    for (edit, candidate) in candidates(program, rules) {
        if let Some(report) = confirmed(&candidate, suite) {
            if chosen.is_none() {
                chosen = Some((edit, candidate, report));
            } else {
                alternatives.push(edit);
            }
        }
    }
    match chosen {
        Some((edit, fixed, fixed_report)) => Ok(FixResult {
            fixed,
            rule_id: edit.rule_id.clone(),
            site: edit.site,
            edits: vec![edit],
            incorrect_report,
            fixed_report,
            alternatives,
        }),
        None => Err(FixError::NoFix(incorrect_report)),
    }
}

/// Like [`fix`], but allows up to `max_edits` chained edits. Shorter edit
/// sequences are preferred; ties go to rule order, then site order.
pub fn fix_multi(
    program: &Program,
    rules: &[RewriteRule],
    suite: &TestSuite,
    max_edits: usize,
) -> Result<FixResult, FixError> {
    let incorrect_report = match fix(program, rules, suite) {
        Err(FixError::NoFix(report)) if max_edits > 1 => report,
        other => return other,
    };
    let mut seen: HashSet<String> = HashSet::new();
    seen.insert(format_program(program));
    let mut frontier: Vec<(Vec<Edit>, Program)> = vec![(Vec::new(), program.clone())];
    for _ in 0..max_edits {
        let mut next = Vec::new();
        for (edits, current) in &frontier {
            for (edit, candidate) in candidates(current, rules) {
                if !seen.insert(format_program(&candidate)) {
                    continue;
                }
                let mut path = edits.clone();
                path.push(edit);
                if let Some(fixed_report) = confirmed(&candidate, suite) {
                    let last = path.last().cloned().expect("path is non-empty");
                    return Ok(FixResult {
                        fixed: candidate,
                        rule_id: last.rule_id,
                        site: last.site,
                        edits: path,
                        incorrect_report,
                        fixed_report,
                        alternatives: Vec::new(),
                    });
                }
                if next.len() < MAX_FRONTIER {
                    next.push((path, candidate));
                }
            }
        }
        frontier = next;
    }
    Err(FixError::NoFix(incorrect_report))
}
