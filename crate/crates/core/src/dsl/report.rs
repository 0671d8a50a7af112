//! Occurrence reports as compact JSON or a plain-text role table.

use std::fmt::Write;
use std::str::FromStr;

use crate::matcher::{AnnotatedOccurrence, Annotation, Occurrence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Table,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "table" => Ok(OutputFormat::Table),
            other => Err(format!("unknown format `{other}` (expected json or table)")),
        }
    }
}

pub fn serialize_occurrences(occs: &[Occurrence], format: OutputFormat) -> String {
    let doc = Annotation {
        occurrences: occs
            .iter()
            .map(|o| AnnotatedOccurrence { pattern: o.pattern.clone(), assignment: o.assignment.clone(), bindings: o.bindings.clone() })
            .collect(),
    };
    serialize_annotation(&doc, format)
}

pub fn serialize_annotation(doc: &Annotation, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => serde_json::to_string(doc).expect("annotation serializes"),
        OutputFormat::Table => table(doc),
    }
}

pub fn parse_annotation(json: &str) -> Result<Annotation, serde_json::Error> {
    serde_json::from_str(json)
}

fn table(doc: &Annotation) -> String {
    if doc.occurrences.is_empty() {
        return "no occurrences\n".to_string();
    }
    let mut out = String::new();
    for (i, o) in doc.occurrences.iter().enumerate() {
        let _ = writeln!(out, "#{} {} {}", i + 1, o.pattern, o.assignment);
        let role_w = o.bindings.iter().map(|b| b.role.len()).max().unwrap_or(0);
        let elem_w = o.bindings.iter().map(|b| b.element.len()).max().unwrap_or(0);
        for b in &o.bindings {
            let _ = writeln!(out, "  {:role_w$}  {:elem_w$}  {}#{}", b.role, b.element, b.part, b.replica);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::RoleBinding;
    use crate::solver::ReplicaAssignment;

    #[test]
    fn empty_json() {
        assert_eq!(serialize_occurrences(&[], OutputFormat::Json), r#"{"occurrences":[]}"#);
        assert_eq!(serialize_occurrences(&[], OutputFormat::Table), "no occurrences\n");
    }

    #[test]
    fn json_round_trip_and_key_order() {
        let doc = Annotation {
            occurrences: vec![AnnotatedOccurrence {
                pattern: "Singleton".into(),
                assignment: ReplicaAssignment::new(),
                bindings: vec![RoleBinding { element: "Db".into(), role: "Singleton".into(), part: "Singleton".into(), replica: 0 }],
            }],
        };
        let json = serialize_annotation(&doc, OutputFormat::Json);
        assert_eq!(
            json,
            r#"{"occurrences":[{"pattern":"Singleton","assignment":{},"bindings":[{"element":"Db","role":"Singleton","part":"Singleton","replica":0}]}]}"#
        );
        assert_eq!(parse_annotation(&json).unwrap(), doc);
        assert!(serialize_annotation(&doc, OutputFormat::Table).contains("Singleton  Db  Singleton#0"));
    }
}
