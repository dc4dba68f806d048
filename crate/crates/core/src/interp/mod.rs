//! Tracing interpreter for MiniLang.

mod machine;
mod trace;
mod value;

pub use machine::{eval_pure, run};
pub use trace::*;
pub use value::{Builtin, Closure, FrameId, Value};

use crate::lang::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InterpError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("entry point must be a call expression: {0}")]
    EntryNotCall(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("NameError: name '{0}' is not defined")]
    UnboundName(String),
    #[error("{0}")]
    Fault(String),
    #[error("step limit exceeded")]
    StepLimit,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, parse_expr};

    const ITERATIVE: &str = include_str!("../../../../corpus/accumulate/solution.mini");
    const ITERATIVE_BUG: &str = include_str!("../../../../corpus/accumulate/bugs/combiner_first_arg.mini");
    const REPEATED: &str = include_str!("../../../../corpus/repeated/solution.mini");

    fn total_updates(trace: &ExecutionTrace) -> Vec<String> {
        let mut out = Vec::new();
        for (i, ev) in trace.events.iter().enumerate() {
            if ev.assigns.as_deref() == Some("total") {
                let frame = ev.innermost().frame_id;
                let after = trace.events[i + 1..]
                    .iter()
                    .find(|e| e.innermost().frame_id == frame)
                    .unwrap();
                out.push(after.innermost().get("total").unwrap().render());
            }
        }
        out
    }

    #[test]
    fn iterative_totals() {
        let p = parse(ITERATIVE).unwrap();
        let t = run(&p, "accumulate(add, 0, 5, identity)", Limits::default()).unwrap();
        assert_eq!(t.completed_value(), Some(&Value::int(15)));
        assert_eq!(total_updates(&t), ["0", "1", "3", "6", "10", "15"]);
        assert_eq!(t.events[0].kind, EventKind::Call);
        assert_eq!(t.events.last().unwrap().kind, EventKind::Return);

        let bug = parse(ITERATIVE_BUG).unwrap();
        let t = run(&bug, "accumulate(add, 0, 5, identity)", Limits::default()).unwrap();
        assert_eq!(total_updates(&t), ["0", "2", "4", "6", "8", "10"]);
    }

    #[test]
    fn steps_are_sequential() {
        let p = parse(ITERATIVE).unwrap();
        let t = run(&p, "accumulate(mul, 2, 3, square)", Limits::default()).unwrap();
        assert_eq!(t.completed_value(), Some(&Value::int(72)));
        for (i, e) in t.events.iter().enumerate() {
            assert_eq!(e.step, i);
            assert_eq!(e.stack[0].function_name, MODULE_FRAME);
        }
    }

    #[test]
    fn higher_order_repeated() {
        let p = parse(REPEATED).unwrap();
        let t = run(&p, "repeated(square, 2)(5)", Limits::default()).unwrap();
        assert_eq!(t.completed_value(), Some(&Value::int(625)));
        let t = run(&p, "repeated(square, 0)(5)", Limits::default()).unwrap();
        assert_eq!(t.completed_value(), Some(&Value::int(5)));
    }

    #[test]
    fn infinite_loop_hits_step_limit() {
        let p = parse("def spin():\n    while True:\n        pass\n").unwrap();
        let t = run(&p, "spin()", Limits::default()).unwrap();
        assert_eq!(t.outcome, Outcome::StepLimit);
        assert_eq!(t.events.len(), 10_000);
    }

    #[test]
    fn unbounded_recursion_faults() {
        let p = parse("def down(n):\n    return down(n - 1)\n").unwrap();
        let t = run(&p, "down(0)", Limits::default()).unwrap();
        match t.outcome {
            Outcome::RuntimeFault { message, .. } => assert!(message.contains("RecursionError")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn deep_but_bounded_recursion_completes() {
        let p = parse("def count(n):\n    if n == 0:\n        return 0\n    return 1 + count(n - 1)\n").unwrap();
        let t = run(&p, "count(199)", Limits::new(100_000, 200)).unwrap();
        assert_eq!(t.completed_value(), Some(&Value::int(199)));
    }

    #[test]
    fn runtime_faults() {
        let p = parse("def f(x):\n    return x // 0\n").unwrap();
        match run(&p, "f(1)", Limits::default()).unwrap().outcome {
            Outcome::RuntimeFault { message, .. } => assert!(message.starts_with("ZeroDivisionError")),
            other => panic!("unexpected {other:?}"),
        }
        let p = parse("def f(x):\n    return y\n").unwrap();
        match run(&p, "f(1)", Limits::default()).unwrap().outcome {
            Outcome::RuntimeFault { message, .. } => assert!(message.starts_with("NameError")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(run(&p, "1 + 2", Limits::default()), Err(InterpError::EntryNotCall(_))));
    }

    #[test]
    fn pure_evaluation_against_snapshot() {
        let bug = parse(ITERATIVE_BUG).unwrap();
        let t = run(&bug, "accumulate(add, 0, 5, identity)", Limits::default()).unwrap();
        // state where i == 2 and total == 2, about to run the assignment again
        let ev = t
            .events
            .iter()
            .find(|e| {
                e.assigns.as_deref() == Some("total")
                    && e.innermost().get("i") == Some(&Value::int(2))
            })
            .unwrap();
        let scope = ev.scope();
        let eval = |s: &str| eval_pure(&bug, &parse_expr(s).unwrap(), scope, Limits::default());
        assert_eq!(eval("term(i)"), Ok(Value::int(2)));
        assert_eq!(eval("combiner(total, term(i))"), Ok(Value::int(4)));
        assert_eq!(eval("4"), Ok(Value::int(4)));
        assert_eq!(eval("missing"), Err(EvalError::UnboundName("missing".into())));
        assert_eq!(eval("(lambda y: y * i)(5)"), Ok(Value::int(10)));

        let later = t
            .events
            .iter()
            .find(|e| e.assigns.as_deref() == Some("total") && e.innermost().get("i") == Some(&Value::int(3)))
            .unwrap();
        assert_eq!(later.innermost().get("total"), Some(&Value::int(4)));
        let v = eval_pure(&bug, &parse_expr("combiner(total, term(i))").unwrap(), later.scope(), Limits::default());
        assert_eq!(v, Ok(Value::int(7)));
    }

    #[test]
    fn lambdas_in_entry_call() {
        let p = parse("def twice(f, x):\n    return f(f(x))\n").unwrap();
        let t = run(&p, "twice(lambda y: y * 3, 2)", Limits::default()).unwrap();
        assert_eq!(t.completed_value(), Some(&Value::int(18)));
    }

    #[test]
    fn deterministic_traces() {
        let p = parse(REPEATED).unwrap();
        let a = run(&p, "repeated(increment, 3)(1)", Limits::default()).unwrap();
        let b = run(&p, "repeated(increment, 3)(1)", Limits::default()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
