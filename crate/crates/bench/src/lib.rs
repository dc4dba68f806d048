//! Shared fixtures for the benchmarks.

use std::path::PathBuf;

use stepdiff_core::fixer::corpus::{load_assignment, Assignment};

pub fn assignment(id: &str) -> Assignment {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(id);
    load_assignment(&dir).expect("corpus loads")
}
