use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::metamodel::Metamodel;
use super::value::{AttributeValue, Atom, Sort};
use super::GraphError;

macro_rules! id_type {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

id_type!(NodeId);
id_type!(EdgeId);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub ty: String,
    pub attrs: BTreeMap<String, AttributeValue>,
}

impl Node {
    pub fn new(id: impl Into<NodeId>, ty: impl Into<String>) -> Self {
        Node { id: id.into(), ty: ty.into(), attrs: BTreeMap::new() }
    }

    pub fn with(mut self, attr: impl Into<String>, value: AttributeValue) -> Self {
        self.attrs.insert(attr.into(), value);
        self
    }

    pub fn attr(&self, name: &str) -> Option<&AttributeValue> {
        self.attrs.get(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub ty: String,
    pub source: NodeId,
    pub target: NodeId,
}

impl Edge {
    pub fn new(
        id: impl Into<EdgeId>,
        ty: impl Into<String>,
        source: impl Into<NodeId>,
        target: impl Into<NodeId>,
    ) -> Self {
        Edge { id: id.into(), ty: ty.into(), source: source.into(), target: target.into() }
    }
}

/// A symbolic, typed, attributed graph: nodes and edges typed over a
/// [`Metamodel`], attribute slots holding constants or variables, and a
/// conjunction of relational atoms over those variables.
///
/// Construction is permissive; [`TypedGraph::validate`] reports every
/// metamodel violation. Only duplicate ids are rejected eagerly.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedGraph {
    metamodel: Arc<Metamodel>,
    nodes: BTreeMap<NodeId, Node>,
    edges: BTreeMap<EdgeId, Edge>,
    atoms: Vec<Atom>,
}

impl TypedGraph {
    pub fn new(metamodel: Arc<Metamodel>) -> Self {
        TypedGraph { metamodel, nodes: BTreeMap::new(), edges: BTreeMap::new(), atoms: Vec::new() }
    }

    pub fn metamodel(&self) -> &Arc<Metamodel> {
        &self.metamodel
    }

    pub fn same_metamodel(&self, other: &TypedGraph) -> bool {
        Arc::ptr_eq(&self.metamodel, &other.metamodel) || self.metamodel == other.metamodel
    }

    pub fn add_node(&mut self, node: Node) -> Result<(), GraphError> {
        if self.nodes.contains_key(&node.id) {
            return Err(GraphError::DuplicateNode(node.id.0));
        }
        self.nodes.insert(node.id.clone(), node);
        Ok(())
    }

    pub fn add_edge(&mut self, edge: Edge) -> Result<(), GraphError> {
        if self.edges.contains_key(&edge.id) {
            return Err(GraphError::DuplicateEdge(edge.id.0));
        }
        self.edges.insert(edge.id.clone(), edge);
        Ok(())
    }

    pub fn add_atom(&mut self, atom: Atom) {
        if !self.atoms.contains(&atom) {
            self.atoms.push(atom);
        }
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        self.edges.get(id)
    }

    pub fn contains_node(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn contains_edge(&self, id: &str) -> bool {
        self.edges.contains_key(id)
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &Node> {
        self.nodes.values()
    }

    /// Edges in ascending id order.
    pub fn edges(&self) -> impl ExactSizeIterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.edges.is_empty()
    }

    /// Variables occurring in attribute slots, with their sorts.
    pub fn variables(&self) -> BTreeMap<String, Sort> {
        let mut out = BTreeMap::new();
        for n in self.nodes.values() {
            for v in n.attrs.values() {
                if let AttributeValue::Var(var) = v {
                    out.entry(var.name.clone()).or_insert_with(|| var.sort.clone());
                }
            }
        }
        out
    }

    /// Edges whose endpoints are exactly `source` and `target`.
    pub fn edges_between<'a>(
        &'a self,
        source: &'a str,
        target: &'a str,
    ) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges
            .values()
            .filter(move |e| e.source.as_str() == source && e.target.as_str() == target)
    }

    pub fn validate(&self) -> ValidationReport {
        validate_graph(self, &self.metamodel)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    UnknownNodeType,
    UnknownEdgeType,
    DanglingEdge,
    EndpointTypeMismatch,
    MissingAttribute,
    UndeclaredAttribute,
    SortMismatch,
    OutOfRange,
    VariableSortConflict,
    UnboundAtomVariable,
    FalseAtom,
}

/// One metamodel violation. `subject` is the offending node or edge id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, kind: ViolationKind, subject: impl fmt::Display, message: String) {
        self.violations.push(Violation { kind, subject: subject.to_string(), message });
    }
}

/// Check every structural and typing invariant of `g` against `mm`.
pub fn validate_graph(g: &TypedGraph, mm: &Metamodel) -> ValidationReport {
    use ViolationKind::*;
    let mut report = ValidationReport::default();
    let mut var_sorts: BTreeMap<&str, &Sort> = BTreeMap::new();

    for n in g.nodes() {
        let Some(nt) = mm.node_type(&n.ty) else {
            report.push(UnknownNodeType, &n.id, format!("node `{}` has undeclared type `{}`", n.id, n.ty));
            continue;
        };
        for (attr, decl) in &nt.attrs {
            match n.attrs.get(attr) {
                None => report.push(MissingAttribute, &n.id, format!("missing attribute `{attr}`")),
                Some(v) if !v.fits(&decl.sort) => report.push(
                    SortMismatch,
                    &n.id,
                    format!("attribute `{attr}` = {v} does not fit sort {}", decl.sort),
                ),
                Some(AttributeValue::Const(super::Value::Int(i))) if decl.min.is_some_and(|m| *i < m) => {
                    report.push(
                        OutOfRange,
                        &n.id,
                        format!("attribute `{attr}` = {i} is below {}", decl.min.unwrap_or_default()),
                    )
                }
                Some(_) => {}
            }
        }
        for (attr, v) in &n.attrs {
            if !nt.attrs.contains_key(attr) {
                report.push(UndeclaredAttribute, &n.id, format!("attribute `{attr}` not declared on `{}`", n.ty));
            }
            if let AttributeValue::Var(var) = v {
                match var_sorts.get(var.name.as_str()) {
                    Some(s) if **s != var.sort => report.push(
                        VariableSortConflict,
                        &n.id,
                        format!("variable `{}` used with sorts {s} and {}", var.name, var.sort),
                    ),
                    Some(_) => {}
                    None => {
                        var_sorts.insert(&var.name, &var.sort);
                    }
                }
            }
        }
    }

    for e in g.edges() {
        let Some(et) = mm.edge_type(&e.ty) else {
            report.push(UnknownEdgeType, &e.id, format!("edge `{}` has undeclared type `{}`", e.id, e.ty));
            continue;
        };
        for (end, expected) in [(&e.source, &et.source), (&e.target, &et.target)] {
            match g.node(end.as_str()) {
                None => report.push(DanglingEdge, &e.id, format!("edge `{}` references missing node `{end}`", e.id)),
                Some(n) if &n.ty != expected => report.push(
                    EndpointTypeMismatch,
                    &e.id,
                    format!("`{}` edge endpoint `{end}` has type `{}`, expected `{expected}`", e.ty, n.ty),
                ),
                Some(_) => {}
            }
        }
    }

    for atom in g.atoms() {
        for v in atom.variables() {
            if !var_sorts.contains_key(v) {
                report.push(UnboundAtomVariable, atom, format!("variable `{v}` occurs in no attribute slot"));
            }
        }
        if atom.evaluate() == Some(false) {
            report.push(FalseAtom, atom, "atom is unsatisfiable".to_string());
        }
    }
    report
}

/// Element of a graph, used where nodes and edges share one namespace of
/// results (images, provenance keys).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ElementId {
    Node(NodeId),
    Edge(EdgeId),
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementId::Node(n) => write!(f, "{n}"),
            ElementId::Edge(e) => write!(f, "{e}"),
        }
    }
}

pub type Image = BTreeSet<ElementId>;
