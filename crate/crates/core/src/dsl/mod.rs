//! Text formats: the pattern DSL (`.pat`), the model format (`.model`) and
//! JSON occurrence reports.

mod lexer;
mod parser;
mod print;
mod report;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::TypedGraph;
use crate::pattern::{Pattern, SyncLink, SynchronizedPatternSet};

pub use parser::{parse_model, parse_model_file, parse_pattern, parse_pattern_file};
pub use print::{print_model, print_pattern};
pub use report::{parse_annotation, serialize_annotation, serialize_occurrences, OutputFormat};

/// 1-based location of a diagnostic; `length` is in bytes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceSpan {
    pub file: String,
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub(crate) struct Pos {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl Pos {
    fn span(self, file: &str) -> SourceSpan {
        SourceSpan { file: file.to_string(), line: self.line, column: self.column, length: self.length }
    }
}

/// A diagnostic before the file name is known.
#[derive(Debug, Clone)]
pub(crate) struct RawDiag {
    pub pos: Pos,
    pub message: String,
}

impl RawDiag {
    pub(crate) fn at(pos: Pos, message: impl Into<String>) -> Self {
        RawDiag { pos, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub span: SourceSpan,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: error: {}", self.span, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct DslError {
    pub diagnostics: Vec<Diagnostic>,
}

impl fmt::Display for DslError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.diagnostics.iter().map(Diagnostic::to_string).collect();
        f.write_str(&lines.join("\n"))
    }
}

impl DslError {
    fn from_raw(file: &str, raw: Vec<RawDiag>) -> Self {
        DslError { diagnostics: raw.into_iter().map(|d| Diagnostic { span: d.pos.span(file), message: d.message }).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetamodelTag {
    ClassDiagram,
    Collaboration,
}

impl MetamodelTag {
    pub fn as_str(self) -> &'static str {
        match self {
            MetamodelTag::ClassDiagram => "classdiagram",
            MetamodelTag::Collaboration => "collaboration",
        }
    }

    pub fn parse(tag: &str) -> Option<Self> {
        match tag {
            "classdiagram" => Some(MetamodelTag::ClassDiagram),
            "collaboration" => Some(MetamodelTag::Collaboration),
            _ => None,
        }
    }
}

/// A parsed `.model` file.
#[derive(Debug, Clone)]
pub struct ModelDocument {
    pub tag: MetamodelTag,
    pub graph: TypedGraph,
    /// Where each node and edge was declared.
    pub spans: BTreeMap<String, SourceSpan>,
}

/// A parsed `.pat` file: one pattern plus any collaboration patterns it is
/// synchronized with.
#[derive(Debug, Clone)]
pub struct PatternFile {
    pub primary: Pattern,
    pub collaborations: Vec<Pattern>,
    pub links: Vec<SyncLink>,
    /// The file marks its equations as reconstructed rather than printed.
    pub derived_equations: bool,
}

impl PatternFile {
    pub fn sync_set(&self) -> SynchronizedPatternSet {
        SynchronizedPatternSet {
            primary: self.primary.clone(),
            secondaries: self.collaborations.clone(),
            links: self.links.clone(),
        }
    }
}
