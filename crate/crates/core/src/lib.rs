//! Trace differencing for small Python-like programs: run an incorrect
//! submission and its repaired version side by side, find where their value
//! histories split, and explain each value as a ladder of expressions.

pub mod abstractor;
pub mod differ;
pub mod doc;
pub mod fixer;
pub mod interp;
pub mod lang;
pub mod service;

pub use abstractor::{abstraction_at, build_value_tree, build_value_tree_at, ladder, AbstractionLadder, Level, ValueTree};
pub use differ::{align_and_filter, extract_series, first_divergence, AlignedSeries, Divergence, SeriesKey, SeriesStatus};
pub use doc::{build_diff, build_diff_programs, export, import, DocEnvelope, DocError, DiffDoc, TraceSide};
pub use fixer::{fix, fix_multi, learn_rule, verify, FixResult, Report, RewriteRule, TestCase, TestSuite};
pub use interp::{run, ExecutionTrace, Limits, Outcome, Value};
pub use lang::{parse, Program};
pub use service::{ApiResponse, DocService};
