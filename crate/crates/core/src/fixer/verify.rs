use serde::{Deserialize, Serialize};

use crate::interp::{eval_pure, run, Limits, Outcome, Scope, Value};
use crate::lang::{parse_expr, ExprKind, Program};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    /// A call expression.
    pub entry: String,
    /// Expression text for the expected value, such as `25` or `True`.
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CaseError {
    #[error("entry `{0}` is not a call expression")]
    EntryNotCall(String),
    #[error("expected value `{text}` is not a literal: {message}")]
    BadExpected { text: String, message: String },
}

impl TestCase {
    pub fn new(entry: impl Into<String>, expected: impl Into<String>) -> Result<Self, CaseError> {
        let case = TestCase {
            entry: entry.into(),
            expected: expected.into(),
        };
        match parse_expr(&case.entry) {
            Ok(e) if matches!(e.kind, ExprKind::Call { .. }) => {}
            _ => return Err(CaseError::EntryNotCall(case.entry)),
        }
        case.expected_value()?;
        Ok(case)
    }

    /// Evaluates the expectation with nothing but builtins in scope.
    pub fn expected_value(&self) -> Result<Value, CaseError> {
        let bad = |message: String| CaseError::BadExpected {
            text: self.expected.clone(),
            message,
        };
        let expr = parse_expr(&self.expected).map_err(|e| bad(e.to_string()))?;
        let empty = Program {
            statements: Vec::new(),
            source: String::new(),
        };
        let scope = Scope { stack: &[], heap: &[] };
        eval_pure(&empty, &expr, scope, Limits::default()).map_err(|e| bad(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestSuite {
    pub assignment_id: String,
    pub cases: Vec<TestCase>,
    pub limits: Limits,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseResult {
    pub entry: String,
    pub expected: String,
    pub passed: bool,
    /// Rendering of the returned value, if the run completed.
    pub actual: Option<String>,
    /// Why the case failed.
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub cases: Vec<CaseResult>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.cases.iter().all(|c| c.passed)
    }

    pub fn passed_count(&self) -> usize {
        self.cases.iter().filter(|c| c.passed).count()
    }
}

/// Runs every case. Faults and step limits are failures, not errors.
pub fn verify(program: &Program, suite: &TestSuite) -> Report {
    let cases = suite.cases.iter().map(|case| run_case(program, case, suite.limits)).collect();
    Report { cases }
}

fn run_case(program: &Program, case: &TestCase, limits: Limits) -> CaseResult {
    let mut result = CaseResult {
        entry: case.entry.clone(),
        expected: case.expected.clone(),
        passed: false,
        actual: None,
        reason: None,
    };
    let expected = match case.expected_value() {
        Ok(v) => v,
        Err(e) => {
            result.reason = Some(e.to_string());
            return result;
        }
    };
    let trace = match run(program, &case.entry, limits) {
        Ok(t) => t,
        Err(e) => {
            result.reason = Some(e.to_string());
            return result;
        }
    };
    match trace.outcome {
        Outcome::Completed { value } => {
            result.actual = Some(value.render());
            if value.equivalent(&expected) {
                result.passed = true;
            } else {
                result.reason = Some(format!("expected {expected}, got {value}"));
            }
        }
        Outcome::StepLimit => {
            result.reason = Some(format!("step limit of {} exceeded", limits.max_steps));
        }
        Outcome::RuntimeFault { message, step } => {
            result.reason = Some(format!("{message} (step {step})"));
        }
    }
    result
}
