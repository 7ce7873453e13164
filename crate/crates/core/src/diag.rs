//! Source spans and diagnostics shared by the parser, validator and flattener.
//!
//! Codes are stable. The full catalog with explanations lives in the
//! "Diagnostics reference" chapter of the book.

use std::fmt;
use std::path::PathBuf;

/// A 1-based line/column range inside one source file.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub file: PathBuf,
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl Span {
    pub fn new(file: impl Into<PathBuf>, start: (u32, u32), end: (u32, u32)) -> Span {
        Span {
            file: file.into(),
            start_line: start.0,
            start_col: start.1,
            end_line: end.0,
            end_col: end.1,
        }
    }

    /// Smallest span covering both `self` and `other` (same file assumed).
    pub fn to(&self, other: &Span) -> Span {
        let start = (self.start_line, self.start_col).min((other.start_line, other.start_col));
        let end = (self.end_line, self.end_col).max((other.end_line, other.end_col));
        Span::new(self.file.clone(), start, end)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file.display(), self.start_line, self.start_col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
}

/// Stable diagnostic codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Code {
    /// Syntax error.
    E000,
    /// Missing end condition.
    E001,
    /// Missing start condition.
    E002,
    /// `exec` on a composite component.
    E003,
    /// Leaf component without `exec`.
    E004,
    /// Illegal transition endpoint shape.
    E005,
    /// Transition endpoint does not resolve.
    E006,
    /// Duplicate parameter, port or child name inside one component.
    E007,
    /// Level hierarchy violation.
    E008,
    /// Type error in a default, argument or binding.
    E009,
    /// Duplicate top-level definition.
    E010,
    /// Unresolved reference.
    E011,
    /// Malformed device call.
    E012,
    /// Malformed update binding.
    E013,
    /// Expression names an unknown parameter.
    E014,
    /// Reference argument is not a constant expression.
    E015,
    /// Merge collision during extension or flattening.
    E020,
    /// Cyclic reference or extension.
    E021,
    /// Child component is never entered.
    W001,
    /// Condition port is not connected to any transition.
    W002,
}

impl Code {
    pub fn severity(self) -> Severity {
        match self {
            Code::W001 | Code::W002 => Severity::Warning,
            _ => Severity::Error,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Code::E000 => "E000",
            Code::E001 => "E001",
            Code::E002 => "E002",
            Code::E003 => "E003",
            Code::E004 => "E004",
            Code::E005 => "E005",
            Code::E006 => "E006",
            Code::E007 => "E007",
            Code::E008 => "E008",
            Code::E009 => "E009",
            Code::E010 => "E010",
            Code::E011 => "E011",
            Code::E012 => "E012",
            Code::E013 => "E013",
            Code::E014 => "E014",
            Code::E015 => "E015",
            Code::E020 => "E020",
            Code::E021 => "E021",
            Code::W001 => "W001",
            Code::W002 => "W002",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Diagnostic {
    pub code: Code,
    pub severity: Severity,
    pub span: Span,
    pub message: String,
}

impl Diagnostic {
    pub fn new(code: Code, span: Span, message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            code,
            severity: code.severity(),
            span,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: {}[{}]: {}", self.span, sev, self.code, self.message)
    }
}

/// Sorts by file, line, code (then column and message for full determinism)
/// and drops exact duplicates.
pub fn normalize(diags: &mut Vec<Diagnostic>) {
    diags.sort_by(|a, b| {
        (&a.span.file, a.span.start_line, a.code, a.span.start_col, &a.message).cmp(&(
            &b.span.file,
            b.span.start_line,
            b.code,
            b.span.start_col,
            &b.message,
        ))
    });
    diags.dedup();
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}
