//! Typed attributed graphs, morphisms, injective matching and colimits.

mod colimit;
mod matching;
mod metamodel;
mod morphism;
mod typed;
mod value;

use thiserror::Error;

pub use colimit::{colimit_tree, disjoint_union, pushout, Colimit, DiagramNode, Pushout};
pub use matching::{find_first_injective_morphism, find_injective_morphisms, for_each_injective_morphism};
pub use metamodel::{visibility_sort, AttrDecl, EdgeType, Metamodel, NodeType};
pub use morphism::GraphMorphism;
pub use typed::{
    validate_graph, Edge, EdgeId, ElementId, Image, Node, NodeId, TypedGraph, ValidationReport, Violation,
    ViolationKind,
};
pub use value::{Atom, AttributeValue, CmpOp, Operand, Sort, Value, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("duplicate edge id `{0}`")]
    DuplicateEdge(String),
    #[error("invalid metamodel: {0}")]
    InvalidMetamodel(String),
    #[error("graphs are typed over different metamodels")]
    MetamodelMismatch,
    #[error("{0} leg of the span is not injective")]
    NonInjectiveLeg(&'static str),
    #[error("invalid morphism: {0}")]
    InvalidMorphism(String),
    #[error("attribute clash while gluing: {0} vs {1}")]
    AttributeClash(String, String),
    #[error("glued graph violates atom `{0}`")]
    AtomClash(String),
    #[error("diagram is not a rooted tree: {0}")]
    NotATree(String),
}
