mod report;
mod serve;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use stepdiff_core::doc::{build_diff, export, to_canonical_json, DocEnvelope};
use stepdiff_core::fixer::corpus::{entry_header, load_assignment, Assignment};
use stepdiff_core::fixer::{fix_multi, FixError, MAX_EDITS};
use stepdiff_core::interp::{run, Limits};
use stepdiff_core::lang::{parse, Program};

const EXIT_NO_FIX: u8 = 2;
const EXIT_ALREADY_CORRECT: u8 = 3;

#[derive(Parser)]
#[command(name = "stepdiff", version, about = "Diff the execution of a buggy program against its repaired version")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a program on one entry call and summarize the trace.
    Run {
        file: PathBuf,
        /// Call to run, e.g. `accumulate(add, 0, 5, identity)`. Defaults to the file's `# entry:` line.
        #[arg(long)]
        entry: Option<String>,
        #[arg(long)]
        max_steps: Option<usize>,
        #[arg(long)]
        max_depth: Option<usize>,
        /// Write the trace as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repair a submission with the assignment's rewrite rules.
    Fix {
        file: PathBuf,
        #[arg(long)]
        assignment: String,
        #[arg(long, env = "STEPDIFF_CORPUS", default_value = "corpus")]
        corpus: PathBuf,
    },
    /// Repair, run both versions and report where their values diverge.
    Diff {
        file: PathBuf,
        #[arg(long)]
        assignment: String,
        #[arg(long)]
        entry: Option<String>,
        #[arg(long, env = "STEPDIFF_CORPUS", default_value = "corpus")]
        corpus: PathBuf,
        /// Write the document envelope as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve a document and the UI bundle over HTTP.
    Serve {
        doc: PathBuf,
        #[arg(long, env = "PORT", default_value_t = 8000)]
        port: u16,
        /// Directory holding the built UI.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
}

fn read_program(path: &Path) -> Result<(String, Program)> {
    let source = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let program = parse(&source).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    Ok((source, program))
}

fn pick_entry(flag: Option<String>, source: &str) -> Result<String> {
    flag.or_else(|| entry_header(source))
        .ok_or_else(|| anyhow!("no --entry given and the file has no `# entry:` line"))
}

fn assignment(corpus: &Path, id: &str) -> Result<Assignment> {
    load_assignment(&corpus.join(id)).with_context(|| format!("loading assignment {id} from {}", corpus.display()))
}

fn write_json(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// `SOURCE_DATE_EPOCH` when set, so documents can be reproduced byte for byte.
fn created_at() -> Result<String> {
    let when = match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(s) => {
            let secs: i64 = s.trim().parse().context("SOURCE_DATE_EPOCH is not an integer")?;
            chrono::DateTime::from_timestamp(secs, 0).context("SOURCE_DATE_EPOCH out of range")?
        }
        Err(_) => chrono::Utc::now(),
    };
    Ok(when.to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
}

fn execute(command: Command) -> Result<u8> {
    match command {
        Command::Run {
            file,
            entry,
            max_steps,
            max_depth,
            out,
        } => {
            let (source, program) = read_program(&file)?;
            let entry = pick_entry(entry, &source)?;
            let d = Limits::default();
            let limits = Limits::new(max_steps.unwrap_or(d.max_steps), max_depth.unwrap_or(d.max_depth));
            let trace = run(&program, &entry, limits)?;
            print!("{}", report::trace_summary(&trace));
            if let Some(out) = out {
                write_json(&out, &serde_json::to_vec(&to_canonical_json(&trace))?)?;
            }
            Ok(0)
        }
        Command::Fix {
            file,
            assignment: id,
            corpus,
        } => {
            let (source, program) = read_program(&file)?;
            let a = assignment(&corpus, &id)?;
            match fix_multi(&program, &a.rules, &a.suite, MAX_EDITS) {
                Ok(f) => {
                    print!("{}", report::fix_summary(&source, &f));
                    Ok(0)
                }
                Err(e) => Ok(report_fix_error(&e)),
            }
        }
        Command::Diff {
            file,
            assignment: id,
            entry,
            corpus,
            out,
        } => {
            let (source, program) = read_program(&file)?;
            let a = assignment(&corpus, &id)?;
            let entry = pick_entry(entry, &source)?;
            let f = match fix_multi(&program, &a.rules, &a.suite, MAX_EDITS) {
                Ok(f) => f,
                Err(e) => return Ok(report_fix_error(&e)),
            };
            let doc = build_diff(&a.id, &program, &f, &entry, a.suite.limits)?;
            print!("{}", report::diff_table(&doc));
            if let Some(out) = out {
                write_json(&out, &export(&DocEnvelope::new(doc, created_at()?)))?;
            }
            Ok(0)
        }
        Command::Serve { doc, port, ui_dir } => {
            let bytes = fs::read(&doc).with_context(|| format!("reading {}", doc.display()))?;
            let envelope = stepdiff_core::doc::import(&bytes).map_err(|e| anyhow!("{}: {e}", doc.display()))?;
            if let Some(dir) = &ui_dir {
                if !dir.is_dir() {
                    bail!("--ui-dir {} is not a directory", dir.display());
                }
            }
            serve::serve(envelope, port, ui_dir)?;
            Ok(0)
        }
    }
}

fn report_fix_error(e: &FixError) -> u8 {
    match e {
        FixError::AlreadyCorrect(r) => {
            println!("already correct: {e}");
            print!("{}", report::test_report(r));
            EXIT_ALREADY_CORRECT
        }
        FixError::NoFix(r) => {
            println!("no fix: {e}");
            print!("{}", report::test_report(r));
            EXIT_NO_FIX
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
