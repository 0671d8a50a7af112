//! Instantiating a pattern for a replica assignment: the colimit of the
//! replicated part tree.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{colimit_tree, DiagramNode, ElementId, GraphError, GraphMorphism, NodeId, TypedGraph};
use crate::pattern::Pattern;
use crate::solver::{enumerate_solutions, ReplicaAssignment, SolverError};

/// A replica of a part, identified by the replica indices along the path
/// from the root (the root itself has an empty path).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ReplicaId {
    pub part: String,
    pub path: Vec<u64>,
}

impl ReplicaId {
    pub fn root(part: impl Into<String>) -> Self {
        ReplicaId { part: part.into(), path: Vec::new() }
    }

    /// Index among the replicas attached to the same parent replica.
    pub fn index(&self) -> u64 {
        self.path.last().copied().unwrap_or(0)
    }

    /// Label used as id prefix in expansion graphs, e.g. `kids#1` or
    /// `inner#1_0`; the root is `<name>#0`.
    pub fn label(&self) -> String {
        if self.path.is_empty() {
            return format!("{}#0", self.part);
        }
        let path: Vec<String> = self.path.iter().map(u64::to_string).collect();
        format!("{}#{}", self.part, path.join("_"))
    }
}

impl fmt::Display for ReplicaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Where an expansion element comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub part: String,
    pub replica: u64,
    pub path: Vec<u64>,
    /// Id of the element in the part graph.
    pub local: String,
}

#[derive(Debug, Clone)]
pub struct Expansion {
    pub assignment: ReplicaAssignment,
    pub graph: TypedGraph,
    /// Replicas in diagram order (parents before children).
    pub replicas: Vec<ReplicaId>,
    /// Part index of each replica.
    pub replica_parts: Vec<usize>,
    /// Colimit injection of each replica's part graph.
    pub injections: Vec<GraphMorphism>,
    pub provenance: BTreeMap<ElementId, Provenance>,
    pub role_map: BTreeMap<NodeId, String>,
}

impl Expansion {
    /// Number of replicas instantiated for `part` across all paths.
    pub fn replica_count(&self, part: &str) -> usize {
        self.replicas.iter().filter(|r| r.part == part).count()
    }

    pub fn replica_of(&self, element: &ElementId) -> Option<ReplicaId> {
        self.provenance.get(element).map(|p| ReplicaId { part: p.part.clone(), path: p.path.clone() })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExpansionError {
    #[error("assignment has no count for part `{0}`")]
    NotTotal(String),
    #[error("assignment {0} violates the pattern equations")]
    Violates(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// The replicated diagram for `a`: replica list, part index per replica and
/// the diagram objects handed to the colimit.
fn replicate(p: &Pattern, a: &ReplicaAssignment) -> Result<(Vec<ReplicaId>, Vec<usize>, Vec<DiagramNode>), ExpansionError> {
    let mut replicas = vec![ReplicaId::root(p.root_var())];
    let mut parts = vec![0usize];
    let mut diagram = vec![DiagramNode { label: replicas[0].label(), graph: p.root().graph.clone(), parent: None }];
    let mut frontier = vec![0usize];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for r in frontier {
            for c in p.children(parts[r]) {
                let part = &p.parts[c];
                let n = a.get(&part.name).ok_or_else(|| ExpansionError::NotTotal(part.name.clone()))?;
                let emb = part.embedding.clone().unwrap_or_default();
                for k in 0..n {
                    let mut path = replicas[r].path.clone();
                    path.push(k);
                    let id = ReplicaId { part: part.name.clone(), path };
                    diagram.push(DiagramNode { label: id.label(), graph: part.graph.clone(), parent: Some((r, emb.clone())) });
                    next.push(replicas.len());
                    replicas.push(id);
                    parts.push(c);
                }
            }
        }
        frontier = next;
    }
    Ok((replicas, parts, diagram))
}

pub fn expand(p: &Pattern, a: &ReplicaAssignment) -> Result<Expansion, ExpansionError> {
    let sys = p.expansion_system();
    let mut assignment = ReplicaAssignment::new();
    for part in &p.parts[1..] {
        let n = a.get(&part.name).ok_or_else(|| ExpansionError::NotTotal(part.name.clone()))?;
        assignment.set(part.name.clone(), n);
    }
    if !sys.holds(&assignment)? {
        return Err(ExpansionError::Violates(assignment.to_string()));
    }
    build(p, assignment)
}

fn build(p: &Pattern, assignment: ReplicaAssignment) -> Result<Expansion, ExpansionError> {
    let (replicas, replica_parts, diagram) = replicate(p, &assignment)?;
    let colimit = colimit_tree(&diagram)?;

    let mut provenance = BTreeMap::new();
    let mut role_map = BTreeMap::new();
    for (i, inj) in colimit.injections.iter().enumerate() {
        let rep = &replicas[i];
        let part = &p.parts[replica_parts[i]];
        let prov = |local: &str| Provenance {
            part: rep.part.clone(),
            replica: rep.index(),
            path: rep.path.clone(),
            local: local.to_string(),
        };
        for (local, img) in &inj.node_map {
            provenance.entry(ElementId::Node(img.clone())).or_insert_with(|| prov(local.as_str()));
        }
        for (local, img) in &inj.edge_map {
            provenance.entry(ElementId::Edge(img.clone())).or_insert_with(|| prov(local.as_str()));
        }
        for (node, role) in &part.role_labels {
            if let Some(img) = inj.node_map.get(node) {
                role_map.insert(img.clone(), role.clone());
            }
        }
    }
    Ok(Expansion {
        assignment,
        graph: colimit.graph,
        replicas,
        replica_parts,
        injections: colimit.injections,
        provenance,
        role_map,
    })
}

/// One expansion per solution of the expansion system up to `bound`, in
/// solver order.
pub fn enumerate_expansions(p: &Pattern, bound: u64) -> impl Iterator<Item = Result<Expansion, ExpansionError>> + '_ {
    enumerate_solutions(&p.expansion_system(), bound).into_iter().map(move |a| build(p, a))
}
