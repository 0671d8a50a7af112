use std::collections::BTreeMap;
use std::sync::{Arc, LazyLock};

use serde::{Deserialize, Serialize};

use super::value::Sort;
use super::GraphError;

/// Declaration of one attribute slot on a node type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttrDecl {
    pub sort: Sort,
    /// Lower bound for integer slots.
    pub min: Option<i64>,
}

impl AttrDecl {
    pub fn new(sort: Sort) -> Self {
        AttrDecl { sort, min: None }
    }

    pub fn natural() -> Self {
        AttrDecl { sort: Sort::Integer, min: Some(0) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeType {
    pub name: String,
    pub attrs: BTreeMap<String, AttrDecl>,
}

impl NodeType {
    pub fn new<I, S>(name: impl Into<String>, attrs: I) -> Self
    where
        I: IntoIterator<Item = (S, AttrDecl)>,
        S: Into<String>,
    {
        NodeType {
            name: name.into(),
            attrs: attrs.into_iter().map(|(n, d)| (n.into(), d)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeType {
    pub name: String,
    pub source: String,
    pub target: String,
}

impl EdgeType {
    pub fn new(name: impl Into<String>, source: impl Into<String>, target: impl Into<String>) -> Self {
        EdgeType { name: name.into(), source: source.into(), target: target.into() }
    }
}

/// The type graph every [`TypedGraph`](super::TypedGraph) is typed over.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metamodel {
    name: String,
    node_types: BTreeMap<String, NodeType>,
    edge_types: BTreeMap<String, EdgeType>,
}

impl Metamodel {
    pub fn new(
        name: impl Into<String>,
        node_types: Vec<NodeType>,
        edge_types: Vec<EdgeType>,
    ) -> Result<Self, GraphError> {
        let name = name.into();
        let mut nodes = BTreeMap::new();
        for nt in node_types {
            if nodes.contains_key(&nt.name) {
                return Err(GraphError::InvalidMetamodel(format!("duplicate node type `{}`", nt.name)));
            }
            nodes.insert(nt.name.clone(), nt);
        }
        let mut edges = BTreeMap::new();
        for et in edge_types {
            if edges.contains_key(&et.name) || nodes.contains_key(&et.name) {
                return Err(GraphError::InvalidMetamodel(format!("duplicate type name `{}`", et.name)));
            }
            for end in [&et.source, &et.target] {
                if !nodes.contains_key(end) {
                    return Err(GraphError::InvalidMetamodel(format!(
                        "edge type `{}` references undeclared node type `{end}`",
                        et.name
                    )));
                }
            }
            edges.insert(et.name.clone(), et);
        }
        Ok(Metamodel { name, node_types: nodes, edge_types: edges })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn node_type(&self, name: &str) -> Option<&NodeType> {
        self.node_types.get(name)
    }

    pub fn edge_type(&self, name: &str) -> Option<&EdgeType> {
        self.edge_types.get(name)
    }

    pub fn node_types(&self) -> impl Iterator<Item = &NodeType> {
        self.node_types.values()
    }

    pub fn edge_types(&self) -> impl Iterator<Item = &EdgeType> {
        self.edge_types.values()
    }

    /// The UML-like class-diagram notation used by structural patterns.
    pub fn class_diagram() -> Arc<Metamodel> {
        CLASS_DIAGRAM.clone()
    }

    /// Lifelines and messages, used by behavioural (collaboration) patterns.
    pub fn collaboration() -> Arc<Metamodel> {
        COLLABORATION.clone()
    }

    pub fn builtin(tag: &str) -> Option<Arc<Metamodel>> {
        match tag {
            "classdiagram" => Some(Self::class_diagram()),
            "collaboration" => Some(Self::collaboration()),
            _ => None,
        }
    }
}

pub fn visibility_sort() -> Sort {
    Sort::Enum(vec!["public".into(), "private".into(), "protected".into()])
}

static CLASS_DIAGRAM: LazyLock<Arc<Metamodel>> = LazyLock::new(|| {
    let s = || AttrDecl::new(Sort::String);
    let b = || AttrDecl::new(Sort::Boolean);
    let vis = || AttrDecl::new(visibility_sort());
    let nodes = vec![
        NodeType::new("Class", [("name", s()), ("abstract", b())]),
        NodeType::new(
            "Operation",
            [("name", s()), ("abstract", b()), ("visibility", vis()), ("static", b())],
        ),
        NodeType::new("Attribute", [("name", s()), ("visibility", vis()), ("static", b())]),
        NodeType::new("Note", [("text", s())]),
    ];
    let edges = vec![
        EdgeType::new("inherits", "Class", "Class"),
        EdgeType::new("assoc", "Class", "Class"),
        EdgeType::new("aggregates", "Class", "Class"),
        EdgeType::new("owns_op", "Class", "Operation"),
        EdgeType::new("owns_attr", "Class", "Attribute"),
        EdgeType::new("creates", "Class", "Class"),
        EdgeType::new("annotates", "Note", "Operation"),
    ];
    Arc::new(Metamodel::new("classdiagram", nodes, edges).expect("built-in metamodel"))
});

static COLLABORATION: LazyLock<Arc<Metamodel>> = LazyLock::new(|| {
    let nodes = vec![
        NodeType::new(
            "Lifeline",
            [("name", AttrDecl::new(Sort::String)), ("type", AttrDecl::new(Sort::String))],
        ),
        NodeType::new(
            "Message",
            [("op_name", AttrDecl::new(Sort::String)), ("order", AttrDecl::natural())],
        ),
    ];
    let edges = vec![
        EdgeType::new("sends", "Lifeline", "Message"),
        EdgeType::new("receives", "Message", "Lifeline"),
        EdgeType::new("next", "Message", "Message"),
    ];
    Arc::new(Metamodel::new("collaboration", nodes, edges).expect("built-in metamodel"))
});
