//! The model description language: parsing, canonical rendering, checking
//! and elaboration into core objects, plus report formatting.

pub mod ast;
mod elaborate;
mod lexer;
mod parser;
mod render;
pub mod report;

use std::fmt;

pub use ast::{Decl, Kind, Model, Span};
pub use elaborate::{flatten, typecheck_model, AttackPlan, Elaborator, FlatWiring};
pub use parser::parse_model;
pub use render::render_model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub line: usize,
    pub col: usize,
    pub message: String,
    /// Other places involved, such as an earlier declaration of the same name.
    pub related: Vec<(usize, usize, String)>,
}

impl Diagnostic {
    pub fn error(at: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            line: at.line,
            col: at.col,
            message: message.into(),
            related: Vec::new(),
        }
    }

    pub fn warning(at: Span, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Warning, ..Diagnostic::error(at, message) }
    }

    pub fn with_related(mut self, at: Span, note: impl Into<String>) -> Self {
        self.related.push((at.line, at.col, note.into()));
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}: {}", self.line, self.col, self.severity, self.message)?;
        for (l, c, note) in &self.related {
            write!(f, "\n  {l}:{c}: note: {note}")?;
        }
        Ok(())
    }
}

pub fn has_errors(ds: &[Diagnostic]) -> bool {
    ds.iter().any(Diagnostic::is_error)
}

/// Parses and checks in one go; the diagnostics include warnings even when
/// the model is returned.
pub fn load_model(text: &str) -> (Option<Model>, Vec<Diagnostic>) {
    match parse_model(text) {
        Ok(m) => {
            let ds = typecheck_model(&m);
            (Some(m), ds)
        }
        Err(ds) => (None, ds),
    }
}
