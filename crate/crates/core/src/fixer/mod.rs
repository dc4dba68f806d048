//! Rewrite rules, test-suite verification and rule-driven repair.

pub mod corpus;
mod learn;
mod rule;
mod search;
mod verify;

pub use learn::{learn_rule, LearnError};
pub use rule::{apply_rule, match_sites, ApplyError, Bindings, RewriteRule, RuleError, Site, Template};
pub use search::{candidates, fix, fix_multi, Edit, FixError, FixResult, MAX_EDITS};
pub use verify::{verify, CaseError, CaseResult, Report, TestCase, TestSuite};

#[cfg(test)]
mod tests {
    use std::path::PathBuf;

    use super::corpus::{load_assignment, load_corpus, Assignment};
    use super::*;
    use crate::interp::{run, Limits, Value};
    use crate::lang::{format_expr, node_at, parse, NodeRef, Program};

    fn corpus_dir() -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
    }

    fn assignment(id: &str) -> Assignment {
        load_assignment(&corpus_dir().join(id)).unwrap()
    }

    fn bug(a: &Assignment, name: &str) -> Program {
        parse(&a.bug(name).unwrap().source).unwrap()
    }

    fn rule(a: &Assignment, id: &str) -> RewriteRule {
        a.rules.iter().find(|r| r.rule_id == id).unwrap().clone()
    }

    fn line(p: &Program, n: usize) -> &str {
        p.source.lines().nth(n - 1).unwrap()
    }

    #[test]
    fn rule_parsing() {
        let r = RewriteRule::parse("r", "n == 1 => n == 0", "").unwrap();
        assert!(matches!(r.pattern, Template::Expr(_)));
        assert_eq!(r.to_string(), "n == 1 => n == 0");
        let s = RewriteRule::parse("s", "total = 0 => total = 1", "").unwrap();
        assert!(matches!(s.pattern, Template::Stmt(_)));
        assert_eq!(RewriteRule::parse("x", "?a => 1", "").unwrap_err(), RuleError::BarePattern);
        assert_eq!(
            RewriteRule::parse("x", "f(?a) => g(?b)", "").unwrap_err(),
            RuleError::UnboundMetavar("?b".into())
        );
        assert_eq!(RewriteRule::parse("x", "total = 0 => 1", "").unwrap_err(), RuleError::MixedSides);
        assert_eq!(RewriteRule::parse("x", "n == 1", "").unwrap_err(), RuleError::MissingArrow);
    }

    #[test]
    fn base_case_rule_matches_line_two() {
        let a = assignment("accumulate");
        let p = bug(&a, "base_case");
        let r = rule(&a, "base-case-zero");
        let sites = match_sites(&p, &r);
        assert_eq!(sites.len(), 1);
        assert_eq!(node_at(&p, sites[0].node_id).unwrap().span().line, 2);

        let fixed = apply_rule(&p, &r, sites[0].node_id).unwrap();
        assert_eq!(line(&fixed, 2), "    if n == 0:");
        for n in [1, 3, 4, 5, 6] {
            assert_eq!(line(&fixed, n), line(&p, n));
        }
    }

    #[test]
    fn no_comparison_no_sites() {
        let r = RewriteRule::parse("r", "n == 1 => n == 0", "").unwrap();
        let p = parse("def f(x):\n    return x + 1\n").unwrap();
        assert!(match_sites(&p, &r).is_empty());
    }

    #[test]
    fn combiner_rule_matches_line_five() {
        let a = assignment("accumulate");
        let p = bug(&a, "combiner_first_arg");
        let r = rule(&a, "combiner-first-arg");
        let sites = match_sites(&p, &r);
        assert_eq!(sites.len(), 1);
        let site = &sites[0];
        assert_eq!(node_at(&p, site.node_id).unwrap().span().line, 5);
        assert_eq!(format_expr(&site.bindings["?a"]), "i");
        assert_eq!(format_expr(&site.bindings["?b"]), "term(i)");
        let fixed = apply_rule(&p, &r, site.node_id).unwrap();
        assert_eq!(line(&fixed, 5), "        total = combiner(total, term(i))");
        assert_eq!(line(&fixed, 4), "    while i<=n:");
    }

    #[test]
    fn swap_rule_keeps_original_spelling() {
        let a = assignment("repeated");
        let p = bug(&a, "swapped_compose");
        let r = rule(&a, "compose-outside");
        let site = match_sites(&p, &r)[0].node_id;
        let fixed = apply_rule(&p, &r, site).unwrap();
        assert!(fixed.source.contains("        return compose1(repeated(g, n-1), f)\n"));
    }

    #[test]
    fn identity_rule_is_a_no_op() {
        let p = parse("def f(n):\n    return n * 2\n").unwrap();
        let r = RewriteRule::parse("id", "?x * 2 => ?x * 2", "").unwrap();
        let site = match_sites(&p, &r)[0].node_id;
        assert!(apply_rule(&p, &r, site).unwrap().same_shape(&p));
    }

    #[test]
    fn apply_adds_parentheses_when_needed() {
        let p = parse("def f(a, b):\n    return a * b\n").unwrap();
        let r = RewriteRule::parse("r", "?x * ?y => ?x * (?y + 1)", "").unwrap();
        let site = match_sites(&p, &r)[0].node_id;
        let q = apply_rule(&p, &r, site).unwrap();
        assert_eq!(line(&q, 2), "    return a * (b + 1)");
        let r = RewriteRule::parse("r", "a * b => a + b", "").unwrap();
        let p = parse("def f(a, b):\n    return a * b * 3\n").unwrap();
        let site = match_sites(&p, &r)[0].node_id;
        let q = apply_rule(&p, &r, site).unwrap();
        assert_eq!(line(&q, 2), "    return (a + b) * 3");
        assert_eq!(run(&q, "f(1, 2)", Limits::default()).unwrap().completed_value(), Some(&Value::int(9)));
    }

    #[test]
    fn invalid_site_is_rejected() {
        let a = assignment("accumulate");
        let p = bug(&a, "combiner_first_arg");
        let r = rule(&a, "base-case-zero");
        assert!(matches!(apply_rule(&p, &r, 0), Err(ApplyError::InvalidSite { .. })));
    }

    #[test]
    fn metavariables_bind_consistently() {
        let r = RewriteRule::parse("r", "?x + ?x => 2 * ?x", "").unwrap();
        let p = parse("def f(a, b):\n    return a + b\n").unwrap();
        assert!(match_sites(&p, &r).is_empty());
        let p = parse("def f(a, b):\n    return g(b) + g(b)\n").unwrap();
        assert_eq!(match_sites(&p, &r).len(), 1);
    }

    #[test]
    fn maximal_matches_in_preorder() {
        let r = RewriteRule::parse("r", "f(?x) => g(?x)", "").unwrap();
        let p = parse("def h(a):\n    x = f(f(a))\n    return f(1)\n").unwrap();
        let sites = match_sites(&p, &r);
        assert_eq!(sites.len(), 2);
        assert!(sites[0].node_id < sites[1].node_id);
        assert_eq!(format_expr(&sites[0].bindings["?x"]), "f(a)");
    }

    #[test]
    fn verify_reports() {
        let a = assignment("accumulate");
        let solution = parse(&a.solution).unwrap();
        let report = verify(&solution, &a.suite);
        assert!(report.all_passed(), "{report:?}");
        let case = |p: &Program| {
            let suite = TestSuite {
                cases: vec![TestCase::new("accumulate(add, 11, 3, square)", "25").unwrap()],
                ..a.suite.clone()
            };
            verify(p, &suite).cases[0].clone()
        };
        assert!(case(&solution).passed);
        let failed = case(&bug(&a, "combiner_first_arg"));
        assert!(!failed.passed);
        assert_eq!(failed.actual.as_deref(), Some("12"));

        let stub = parse("def accumulate(combiner, base, n, term):\n    pass\n").unwrap();
        let report = verify(&stub, &a.suite);
        assert_eq!(report.passed_count(), 0);
        assert!(report.cases.iter().all(|c| c.reason.is_some()));
    }

    #[test]
    fn fix_goldens() {
        let a = assignment("accumulate");
        let result = fix(&bug(&a, "combiner_first_arg"), &a.rules, &a.suite).unwrap();
        assert_eq!(result.rule_id, "combiner-first-arg");
        assert!(result.fixed_report.all_passed());
        assert!(!result.incorrect_report.all_passed());

        let result = fix(&bug(&a, "base_case"), &a.rules, &a.suite).unwrap();
        assert_eq!(result.rule_id, "base-case-zero");

        let r = assignment("repeated");
        let result = fix(&bug(&r, "swapped_compose"), &r.rules, &r.suite).unwrap();
        assert_eq!(result.rule_id, "compose-outside");
        let t = run(&result.fixed, "repeated(square, 2)(5)", Limits::default()).unwrap();
        assert_eq!(t.completed_value(), Some(&Value::int(625)));
    }

    #[test]
    fn fix_errors() {
        let a = assignment("accumulate");
        let p = bug(&a, "combiner_first_arg");
        assert!(matches!(fix(&p, &[], &a.suite), Err(FixError::NoFix(_))));
        let solution = parse(&a.solution).unwrap();
        assert!(matches!(fix(&solution, &a.rules, &a.suite), Err(FixError::AlreadyCorrect(_))));
    }

    #[test]
    fn multi_bug_fix() {
        let a = assignment("product");
        let p = bug(&a, "two_bugs");
        assert!(matches!(fix(&p, &a.rules, &a.suite), Err(FixError::NoFix(_))));
        let result = fix_multi(&p, &a.rules, &a.suite, MAX_EDITS).unwrap();
        assert_eq!(result.edits.len(), 2);
        assert!(verify(&result.fixed, &a.suite).all_passed());
    }

    #[test]
    fn fix_is_deterministic() {
        let a = assignment("product");
        let p = bug(&a, "off_by_one");
        let x = fix(&p, &a.rules, &a.suite).unwrap();
        let y = fix(&p, &a.rules, &a.suite).unwrap();
        assert_eq!((x.rule_id, x.site, x.fixed.source), (y.rule_id, y.site, y.fixed.source));
    }

    fn learned_applies(before: &Program, after: &Program) -> RewriteRule {
        let r = learn_rule(before, after).unwrap();
        let hit = match_sites(before, &r)
            .into_iter()
            .any(|s| apply_rule(before, &r, s.node_id).unwrap().same_shape(after));
        assert!(hit, "learned rule {r} does not reproduce the fix");
        r
    }

    #[test]
    fn learn_base_case_rule() {
        let a = assignment("accumulate");
        let before = bug(&a, "base_case");
        let after = fix(&before, &a.rules, &a.suite).unwrap().fixed;
        let r = learned_applies(&before, &after);
        assert_eq!(r.to_string(), "n == 1 => n == 0");
    }

    #[test]
    fn learn_swap_rule_generalizes() {
        let a = assignment("repeated");
        let before = bug(&a, "swapped_compose");
        let after = fix(&before, &a.rules, &a.suite).unwrap().fixed;
        let r = learned_applies(&before, &after);
        assert_eq!(r.to_string(), "repeated(compose1(?a, ?b), ?c) => compose1(repeated(?a, ?c), ?b)");
    }

    #[test]
    fn learn_errors() {
        let p = parse("def f(x):\n    return x\n").unwrap();
        assert_eq!(learn_rule(&p, &p).unwrap_err(), LearnError::IdenticalPrograms);
        let q = parse("def f(y):\n    return y + 1\n").unwrap();
        assert!(matches!(learn_rule(&p, &q), Err(LearnError::NoRule(_))));
        let q = parse("def f(x):\n    y = 1\n    return x\n").unwrap();
        assert!(matches!(learn_rule(&p, &q), Err(LearnError::NoRule(_))));
    }

    #[test]
    fn learn_apply_round_trip_over_corpus() {
        for a in load_corpus(&corpus_dir()).unwrap() {
            for b in &a.bugs {
                let before = parse(&b.source).unwrap();
                let Ok(result) = fix(&before, &a.rules, &a.suite) else { continue };
                if let Ok(r) = learn_rule(&before, &result.fixed) {
                    let ok = match_sites(&before, &r)
                        .into_iter()
                        .any(|s| apply_rule(&before, &r, s.node_id).unwrap().same_shape(&result.fixed));
                    assert!(ok, "{}/{}: {r}", a.id, b.name);
                }
            }
        }
    }

    #[test]
    fn every_corpus_bug_is_fixable() {
        for a in load_corpus(&corpus_dir()).unwrap() {
            assert!(verify(&parse(&a.solution).unwrap(), &a.suite).all_passed(), "{}", a.id);
            for b in &a.bugs {
                let p = parse(&b.source).unwrap();
                let result = fix_multi(&p, &a.rules, &a.suite, MAX_EDITS);
                assert!(result.is_ok(), "{}/{}", a.id, b.name);
                assert!(b.entry.is_some(), "{}/{} has no entry line", a.id, b.name);
            }
        }
    }

    #[test]
    fn statement_template_with_metavariable_target() {
        let p = parse("def f(n):\n    acc = 0\n    return acc\n").unwrap();
        let r = RewriteRule::parse("r", "?v = 0 => ?v = 1", "").unwrap();
        let site = match_sites(&p, &r)[0].node_id;
        assert!(matches!(node_at(&p, site).unwrap(), NodeRef::Stmt(_)));
        let q = apply_rule(&p, &r, site).unwrap();
        assert_eq!(line(&q, 2), "    acc = 1");
    }
}
