//! Driver behind the `axon` binary: `check` type-checks source files and
//! `solve` runs the shape solver on a constraint file.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use axon_core::builtins::default_table;
use axon_core::solver::{parse_constraint_file, solve_traced, Origin, SolveOutcome};
use axon_core::span::{LineIndex, Span};
use axon_core::syntax::parse_program;
use axon_core::typecheck::{infer_program, infer_program_traced, Status, TraceEvent};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BindingReport {
    pub file: String,
    pub name: String,
    pub signature: Option<String>,
    pub status: String,
    pub residual: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: String,
    pub file: String,
    pub line: Option<usize>,
    pub col: Option<usize>,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
}

impl Diagnostic {
    fn render(&self) -> String {
        let mut out = self.file.clone();
        if let (Some(l), Some(c)) = (self.line, self.col) {
            let _ = write!(out, ":{l}:{c}");
        }
        let _ = write!(out, ": {}: {}", self.severity, self.message);
        if let Some(rule) = &self.rule {
            let _ = write!(out, " [{rule}]");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub bindings: Vec<BindingReport>,
    pub diagnostics: Vec<Diagnostic>,
}

/// What a command prints and the code it exits with.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Output {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

/// The outcome of checking one file.
#[derive(Debug, Clone)]
pub struct FileReport {
    pub bindings: Vec<BindingReport>,
    pub diagnostics: Vec<Diagnostic>,
    pub trace: Vec<String>,
    pub code: i32,
}

fn locate(file: &str, text: &str, span: Option<Span>, severity: &str, message: String, rule: Option<String>) -> Diagnostic {
    let (line, col) = match span {
        Some(s) => {
            let (l, c) = LineIndex::new(text).line_col(s.start.min(text.len()));
            (Some(l), Some(c))
        }
        None => (None, None),
    };
    Diagnostic {
        severity: severity.to_string(),
        file: file.to_string(),
        line,
        col,
        message,
        rule,
    }
}

pub fn check_file(path: &Path, trace: bool) -> FileReport {
    let file = path.display().to_string();
    let mut report = FileReport {
        bindings: Vec::new(),
        diagnostics: Vec::new(),
        trace: Vec::new(),
        code: EXIT_OK,
    };
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            report.diagnostics.push(locate(&file, "", None, "error", format!("cannot read file: {e}"), None));
            report.code = EXIT_IO;
            return report;
        }
    };
    let program = match parse_program(&text) {
        Ok(p) => p,
        Err(e) => {
            report.diagnostics.push(locate(&file, &text, Some(e.span), "error", e.message, None));
            report.code = EXIT_PARSE;
            return report;
        }
    };
    let table = default_table();
    let result = if trace {
        infer_program_traced(&program, &table)
    } else {
        infer_program(&program, &table)
    };
    report.trace = result.trace.iter().map(TraceEvent::to_string).collect();
    for b in &result.bindings {
        report.bindings.push(BindingReport {
            file: file.clone(),
            name: b.name.clone(),
            signature: b.signature.clone(),
            status: b.status.as_str().to_string(),
            residual: b.residual.clone(),
        });
        if let Some(err) = &b.error {
            let severity = if b.status == Status::Unchecked { "note" } else { "error" };
            let message = format!("in `{}`: {err}", b.name);
            let rule = err.rule().map(|r| r.name().to_string());
            report.diagnostics.push(locate(&file, &text, err.span().or(Some(b.span)), severity, message, rule));
        }
        if matches!(b.status, Status::Failed | Status::Unchecked) {
            report.code = EXIT_FAILURE;
        }
    }
    report
}

/// Checks each file on its own thread; results keep the input order and
/// the exit code is the highest of the per-file codes.
pub fn cmd_check(paths: &[PathBuf], json: bool, trace: bool) -> Output {
    let reports: Vec<FileReport> = std::thread::scope(|scope| {
        let handles: Vec<_> = paths.iter().map(|p| scope.spawn(move || check_file(p, trace))).collect();
        handles.into_iter().map(|h| h.join().expect("checker thread panicked")).collect()
    });
    let mut out = Output::default();
    for (path, r) in paths.iter().zip(&reports) {
        if trace {
            let _ = writeln!(out.stderr, "# {}", path.display());
            for line in &r.trace {
                let _ = writeln!(out.stderr, "{line}");
            }
        }
        out.code = out.code.max(r.code);
    }
    if json {
        let report = Report {
            schema: SCHEMA_VERSION,
            bindings: reports.iter().flat_map(|r| r.bindings.clone()).collect(),
            diagnostics: reports.iter().flat_map(|r| r.diagnostics.clone()).collect(),
        };
        out.stdout = serde_json::to_string_pretty(&report).expect("report serializes");
        out.stdout.push('\n');
        return out;
    }
    let many = paths.len() > 1;
    for (path, r) in paths.iter().zip(&reports) {
        if many {
            let _ = writeln!(out.stdout, "# {}", path.display());
        }
        for b in &r.bindings {
            match &b.signature {
                Some(sig) => {
                    let _ = writeln!(out.stdout, "{} : {sig}", b.name);
                    for c in &b.residual {
                        let _ = writeln!(out.stdout, "  where {c}");
                    }
                }
                None => {
                    let _ = writeln!(out.stdout, "{} : {}", b.name, b.status);
                }
            }
        }
        for d in &r.diagnostics {
            let _ = writeln!(out.stderr, "{}", d.render());
        }
    }
    out
}

pub fn cmd_solve(path: &Path, trace: bool) -> Output {
    let file = path.display().to_string();
    let mut out = Output::default();
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            out.stderr = format!("{file}: error: cannot read file: {e}\n");
            out.code = EXIT_IO;
            return out;
        }
    };
    let set = match parse_constraint_file(&text) {
        Ok(s) => s,
        Err(e) => {
            out.stderr = format!("{file}:{}: error: {}\n", e.line, e.message);
            out.code = EXIT_PARSE;
            return out;
        }
    };
    let outcome = solve_traced(&set, |f| {
        if trace {
            let _ = writeln!(out.stderr, "{f}");
        }
    });
    match outcome {
        SolveOutcome::Solved(solution) => {
            for (var, term) in &solution.substitution {
                let _ = writeln!(out.stdout, "{var} = {term}");
            }
            for c in &solution.residual {
                let _ = writeln!(out.stdout, "residual: {c}");
            }
        }
        SolveOutcome::Failed(failure) => {
            let at = match failure.offender.origin {
                Origin::Line(n) => format!("{file}:{n}"),
                _ => file,
            };
            let _ = writeln!(out.stderr, "{at}: error: {failure} [{}]", failure.rule.name());
            out.code = EXIT_FAILURE;
        }
    }
    out
}
