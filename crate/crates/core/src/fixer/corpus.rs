//! Loader for assignment directories:
//!
//! ```text
//! <assignment>/solution.mini
//! <assignment>/tests.txt     entry => expected, plus optional @max_steps / @max_depth
//! <assignment>/rules.txt     pattern => replacement, named by a preceding `# id: description`
//! <assignment>/bugs/*.mini   optional `# entry: <call>` line
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use super::rule::{RewriteRule, RuleError};
use super::verify::{CaseError, TestCase, TestSuite};
use crate::interp::Limits;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone)]
pub struct BugFixture {
    pub name: String,
    pub source: String,
    /// Entry call to diff on, from the `# entry:` line.
    pub entry: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Assignment {
    pub id: String,
    pub solution: String,
    pub suite: TestSuite,
    pub rules: Vec<RewriteRule>,
    pub bugs: Vec<BugFixture>,
}

impl Assignment {
    pub fn bug(&self, name: &str) -> Option<&BugFixture> {
        self.bugs.iter().find(|b| b.name == name)
    }
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_error(path: &Path, line: usize, message: impl ToString) -> CorpusError {
    CorpusError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.to_string(),
    }
}

pub fn parse_tests(assignment_id: &str, text: &str, path: &Path) -> Result<TestSuite, CorpusError> {
    let mut limits = Limits::default();
    let mut cases = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(directive) = line.strip_prefix('@') {
            let (key, value) = directive
                .split_once(char::is_whitespace)
                .ok_or_else(|| parse_error(path, i + 1, "directive needs a value"))?;
            let n: usize = value
                .trim()
                .parse()
                .map_err(|_| parse_error(path, i + 1, format!("not a number: {}", value.trim())))?;
            match key {
                "max_steps" => limits.max_steps = n.max(1),
                "max_depth" => limits.max_depth = n.max(1),
                other => return Err(parse_error(path, i + 1, format!("unknown directive @{other}"))),
            }
            continue;
        }
        let (entry, expected) = line
            .rsplit_once("=>")
            .ok_or_else(|| parse_error(path, i + 1, "expected `entry => expected`"))?;
        let case = TestCase::new(entry.trim(), expected.trim()).map_err(|e: CaseError| parse_error(path, i + 1, e))?;
        cases.push(case);
    }
    if cases.is_empty() {
        return Err(parse_error(path, 0, "test suite has no cases"));
    }
    Ok(TestSuite {
        assignment_id: assignment_id.to_string(),
        cases,
        limits,
    })
}

pub fn parse_rules(assignment_id: &str, text: &str, path: &Path) -> Result<Vec<RewriteRule>, CorpusError> {
    let mut rules = Vec::new();
    let mut pending: Option<(String, String)> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((id, desc)) = comment.split_once(':') {
                let id = id.trim();
                if !id.is_empty() && !id.contains(char::is_whitespace) {
                    pending = Some((id.to_string(), desc.trim().to_string()));
                }
            }
            continue;
        }
        let (id, desc) = pending
            .take()
            .unwrap_or_else(|| (format!("{assignment_id}-{}", rules.len() + 1), String::new()));
        let rule = RewriteRule::parse(id, line, desc).map_err(|e: RuleError| parse_error(path, i + 1, e))?;
        rules.push(rule);
    }
    Ok(rules)
}

/// Finds a `# entry: <call>` line.
pub fn entry_header(source: &str) -> Option<String> {
    source.lines().find_map(|l| {
        l.trim()
            .strip_prefix('#')?
            .trim()
            .strip_prefix("entry:")
            .map(|e| e.trim().to_string())
    })
}

pub fn load_assignment(dir: &Path) -> Result<Assignment, CorpusError> {
    let id = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let solution = read(&dir.join("solution.mini"))?;
    let tests_path = dir.join("tests.txt");
    let suite = parse_tests(&id, &read(&tests_path)?, &tests_path)?;
    let rules_path = dir.join("rules.txt");
    let rules = if rules_path.exists() {
        parse_rules(&id, &read(&rules_path)?, &rules_path)?
    } else {
        Vec::new()
    };
    let mut bugs = Vec::new();
    let bugs_dir = dir.join("bugs");
    if bugs_dir.is_dir() {
        let entries = fs::read_dir(&bugs_dir).map_err(|source| CorpusError::Io {
            path: bugs_dir.clone(),
            source,
        })?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "mini"))
            .collect();
        paths.sort();
        for p in paths {
            let source = read(&p)?;
            bugs.push(BugFixture {
                name: p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
                entry: entry_header(&source),
                source,
            });
        }
    }
    Ok(Assignment {
        id,
        solution,
        suite,
        rules,
        bugs,
    })
}

/// Loads every assignment directory under `root`, sorted by id.
pub fn load_corpus(root: &Path) -> Result<Vec<Assignment>, CorpusError> {
    let entries = fs::read_dir(root).map_err(|source| CorpusError::Io {
        path: root.to_path_buf(),
        source,
    })?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("solution.mini").is_file())
        .collect();
    dirs.sort();
    dirs.iter().map(|d| load_assignment(d)).collect()
}
