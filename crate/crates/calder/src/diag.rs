//! Source positions and compiler diagnostics.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A position inside a named source document. Lines and columns are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pos {
    pub file: u32,
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(file: u32, line: u32, col: u32) -> Self {
        Pos { file, line, col }
    }
}

/// Names of the documents fed to the front-end; index matches [`Pos::file`].
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct FileTable {
    pub names: Vec<String>,
}

impl FileTable {
    pub fn name(&self, file: u32) -> &str {
        self.names
            .get(file as usize)
            .map(String::as_str)
            .unwrap_or("<unknown>")
    }
}

/// A single compiler diagnostic with a source position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub pos: Option<Pos>,
    pub message: String,
}

impl Diagnostic {
    pub fn at(pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic {
            pos: Some(pos),
            message: message.into(),
        }
    }

    pub fn global(message: impl Into<String>) -> Self {
        Diagnostic {
            pos: None,
            message: message.into(),
        }
    }

    pub fn render(&self, files: &FileTable) -> String {
        match self.pos {
            Some(p) => format!(
                "{}:{}:{}: {}",
                files.name(p.file),
                p.line,
                p.col,
                self.message
            ),
            None => self.message.clone(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pos {
            Some(p) => write!(f, "{}:{}: {}", p.line, p.col, self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

/// Front-end failure: one or more diagnostics.
#[derive(Debug, thiserror::Error)]
#[error("{}", render_all(.0))]
pub struct FrontendError(pub Vec<Diagnostic>);

fn render_all(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}
