//! Canonical text for patterns and models. Output re-parses to an equal
//! value.

use std::fmt::Write;

use crate::graph::{Atom, AttributeValue, Node, Operand, TypedGraph, Value};
use crate::pattern::Pattern;

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && s != "_"
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            other => out.push(other),
        }
    }
    out.push('"');
    out
}

fn id(s: &str) -> String {
    if s.split('.').all(is_ident) {
        s.to_string()
    } else {
        quote(s)
    }
}

fn var(name: &str) -> String {
    if is_ident(name) {
        format!("?{name}")
    } else {
        format!("?{}", quote(name))
    }
}

fn value(v: &Value) -> String {
    match v {
        Value::Str(s) => quote(s),
        Value::Bool(b) => b.to_string(),
        Value::Int(i) => i.to_string(),
        Value::Enum(e) if is_ident(e) => e.clone(),
        Value::Enum(e) => quote(e),
    }
}

fn attr(v: &AttributeValue) -> String {
    match v {
        AttributeValue::Const(c) => value(c),
        AttributeValue::Var(v) => var(&v.name),
    }
}

fn operand(o: &Operand) -> String {
    match o {
        Operand::Var(v) => var(v),
        Operand::Const(c) => value(c),
    }
}

fn atom(a: &Atom) -> String {
    format!("{} {} {}", operand(&a.lhs), a.op.symbol(), operand(&a.rhs))
}

fn node_line(n: &Node, role: Option<&str>) -> String {
    let mut s = format!("node {} : {}", id(n.id.as_str()), n.ty);
    if let Some(r) = role {
        let _ = write!(s, " as {r}");
    }
    let attrs: Vec<String> = n.attrs.iter().map(|(k, v)| format!("{k}: {}", attr(v))).collect();
    let _ = write!(s, " {{ {} }}", attrs.join(", "));
    s
}

/// Elements of `g` that are not in `base`, one per line.
fn body(g: &TypedGraph, base: Option<&TypedGraph>, roles: &dyn Fn(&str) -> Option<String>, indent: &str) -> String {
    let mut out = String::new();
    for n in g.nodes().filter(|n| base.is_none_or(|b| !b.contains_node(n.id.as_str()))) {
        let _ = writeln!(out, "{indent}{}", node_line(n, roles(n.id.as_str()).as_deref()));
    }
    for e in g.edges().filter(|e| base.is_none_or(|b| !b.contains_edge(e.id.as_str()))) {
        let _ = writeln!(
            out,
            "{indent}edge {} {} -> {} [{}]",
            e.ty,
            id(e.source.as_str()),
            id(e.target.as_str()),
            id(e.id.as_str())
        );
    }
    for a in g.atoms().iter().filter(|a| base.is_none_or(|b| !b.atoms().contains(a))) {
        let _ = writeln!(out, "{indent}where {}", atom(a));
    }
    out
}

pub fn print_model(g: &TypedGraph) -> String {
    let mut out = format!("model {}\n", g.metamodel().name());
    out.push_str(&body(g, None, &|_| None, ""));
    out
}

pub fn print_pattern(p: &Pattern) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "pattern {} {} {{", p.name, quote(&p.title));
    if !p.intent.is_empty() {
        let _ = writeln!(out, "  intent {}", quote(&p.intent));
    }
    let _ = writeln!(out, "  metamodel {}", p.metamodel.name());
    if !p.roles.is_empty() {
        let _ = writeln!(out, "  roles {}", p.roles.join(", "));
    }
    for part in &p.parts {
        let roles = |n: &str| part.role_labels.get(n).cloned();
        match part.parent {
            None => {
                let _ = writeln!(out, "  root {{");
                out.push_str(&body(&part.graph, None, &roles, "    "));
            }
            Some(pi) => {
                let _ = writeln!(out, "  part {} in {} {{", part.name, p.parts[pi].name);
                out.push_str(&body(&part.graph, Some(&p.parts[pi].graph), &roles, "    "));
            }
        }
        let _ = writeln!(out, "  }}");
    }
    if !p.equations.is_empty() {
        let _ = writeln!(out, "  equations {}", p.equations);
    }
    let none = |_: &str| None;
    for c in &p.constraints {
        let Some(anchor) = p.part(&c.anchor) else { continue };
        if c.is_nac() {
            let _ = writeln!(out, "  nac {} {} {{", c.anchor, quote(&c.label));
            out.push_str(&body(&c.premise_graph, Some(&anchor.graph), &none, "    "));
        } else {
            let _ = writeln!(out, "  require {} {} {{", c.anchor, quote(&c.label));
            let _ = writeln!(out, "    premise {{");
            out.push_str(&body(&c.premise_graph, Some(&anchor.graph), &none, "      "));
            let _ = writeln!(out, "    }}");
            for cons in &c.consequences {
                let _ = writeln!(out, "    consequence {{");
                out.push_str(&body(&cons.graph, Some(&c.premise_graph), &none, "      "));
                let _ = writeln!(out, "    }}");
            }
        }
        let _ = writeln!(out, "  }}");
    }
    out.push_str("}\n");
    out
}
