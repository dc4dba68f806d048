use std::collections::BTreeSet;

use proptest::prelude::*;

use stepdiff_core::differ::{align_and_filter, extract_series};
use stepdiff_core::interp::{run, Limits};
use stepdiff_core::lang::{format_expr, format_program, node_at, parse, parse_expr, NodeRef};

fn expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0u32..100).prop_map(|n| n.to_string()),
        prop::sample::select(vec!["a", "b", "n", "add", "square", "True", "False", "None"]).prop_map(String::from),
    ];
    leaf.prop_recursive(4, 32, 3, |inner| {
        let op = prop::sample::select(vec![
            "+", "-", "*", "//", "%", "==", "!=", "<", "<=", ">", ">=", "and", "or",
        ]);
        prop_oneof![
            (inner.clone(), op, inner.clone()).prop_map(|(l, o, r)| format!("({l} {o} {r})")),
            inner.clone().prop_map(|e| format!("(-{e})")),
            inner.clone().prop_map(|e| format!("(not {e})")),
            (prop::sample::select(vec!["f", "add", "g"]), prop::collection::vec(inner.clone(), 0..3))
                .prop_map(|(f, args)| format!("{f}({})", args.join(", "))),
            inner.clone().prop_map(|e| format!("(lambda x: {e})")),
            (inner.clone(), inner).prop_map(|(f, a)| format!("({f})({a})")),
        ]
    })
}

fn stmt(depth: u32) -> BoxedStrategy<Vec<String>> {
    let simple = prop_oneof![
        (prop::sample::select(vec!["x", "y", "total"]), expr()).prop_map(|(t, e)| vec![format!("{t} = {e}")]),
        expr().prop_map(|e| vec![format!("return {e}")]),
        expr().prop_map(|e| vec![e]),
        Just(vec!["pass".to_string()]),
    ];
    if depth == 0 {
        return simple.boxed();
    }
    let block = || prop::collection::vec(stmt(depth - 1), 1..3).prop_map(|b| b.concat());
    let indent = |b: Vec<String>| b.into_iter().map(|l| format!("    {l}")).collect::<Vec<_>>();
    prop_oneof![
        3 => simple,
        1 => (expr(), block(), prop::option::of(block())).prop_map(move |(c, t, e)| {
            let mut out = vec![format!("if {c}:")];
            out.extend(indent(t));
            if let Some(e) = e {
                out.push("else:".into());
                out.extend(indent(e));
            }
            out
        }),
        1 => (expr(), block()).prop_map(move |(c, b)| {
            let mut out = vec![format!("while {c}:")];
            out.extend(indent(b));
            out
        }),
    ]
    .boxed()
}

fn program() -> impl Strategy<Value = String> {
    prop::collection::vec(stmt(2), 1..5).prop_map(|body| {
        let mut src = String::from("def f(a, b, n):\n");
        for line in body.concat() {
            src.push_str("    ");
            src.push_str(&line);
            src.push('\n');
        }
        src
    })
}

proptest! {
    #[test]
    fn expressions_round_trip(src in expr()) {
        let e = parse_expr(&src).unwrap();
        let text = format_expr(&e);
        let again = parse_expr(&text).unwrap();
        prop_assert!(again.same_shape(&e), "{src} -> {text}");
        prop_assert_eq!(format_expr(&again), text);
    }

    #[test]
    fn programs_round_trip(src in program()) {
        let p = parse(&src).unwrap();
        let text = format_program(&p);
        let again = parse(&text).unwrap();
        prop_assert!(again.same_shape(&p), "{src}\n->\n{text}");
        prop_assert_eq!(format_program(&again), text);
    }

    #[test]
    fn node_ids_resolve(src in program()) {
        let p = parse(&src).unwrap();
        let mut ids = BTreeSet::new();
        let mut nodes = Vec::new();
        p.walk(&mut |n| nodes.push(n));
        for n in nodes {
            let id = n.span().node_id;
            prop_assert!(ids.insert(id), "duplicate id {id}");
            let found = node_at(&p, id).unwrap();
            prop_assert_eq!(found.span(), n.span());
            let same_kind = matches!((found, n), (NodeRef::Expr(_), NodeRef::Expr(_)) | (NodeRef::Stmt(_), NodeRef::Stmt(_)));
            prop_assert!(same_kind);
        }
        prop_assert!(node_at(&p, p.max_node_id().unwrap() + 1).is_err());
    }

    #[test]
    fn filtering_is_symmetric(c1 in 0u32..3, c2 in 0u32..3, k1 in 1u32..3, k2 in 1u32..3, n in 0u32..6) {
        let src = |c: u32, k: u32| format!(
            "def f(n):\n    total = {c}\n    i = 0\n    while i < n:\n        total = total + i * {k}\n        i = i + 1\n    return total\n"
        );
        let entry = format!("f({n})");
        let a = extract_series(&run(&parse(&src(c1, k1)).unwrap(), &entry, Limits::default()).unwrap());
        let b = extract_series(&run(&parse(&src(c2, k2)).unwrap(), &entry, Limits::default()).unwrap());
        let (kept_ab, filtered_ab) = align_and_filter(&a, &b);
        let (kept_ba, filtered_ba) = align_and_filter(&b, &a);
        prop_assert_eq!(&filtered_ab, &filtered_ba);
        let status = |k: &[stepdiff_core::differ::AlignedSeries]| {
            k.iter().map(|s| (s.key.clone(), s.status.first_index())).collect::<BTreeSet<_>>()
        };
        prop_assert_eq!(status(&kept_ab), status(&kept_ba));
        if c1 == c2 && k1 == k2 {
            prop_assert!(kept_ab.is_empty());
        }
    }
}
