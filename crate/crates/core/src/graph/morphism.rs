use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::typed::{EdgeId, ElementId, Image, NodeId, TypedGraph};
use super::value::AttributeValue;

/// A structure- and type-preserving map between two [`TypedGraph`]s.
///
/// The morphism stores only its maps; the graphs it relates are passed to
/// the operations that need them. `var_subst` sends each variable of the
/// source to an attribute value of the target.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GraphMorphism {
    pub node_map: BTreeMap<NodeId, NodeId>,
    pub edge_map: BTreeMap<EdgeId, EdgeId>,
    pub var_subst: BTreeMap<String, AttributeValue>,
}

impl GraphMorphism {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn identity(g: &TypedGraph) -> Self {
        GraphMorphism {
            node_map: g.nodes().map(|n| (n.id.clone(), n.id.clone())).collect(),
            edge_map: g.edges().map(|e| (e.id.clone(), e.id.clone())).collect(),
            var_subst: g
                .variables()
                .into_iter()
                .map(|(v, s)| (v.clone(), AttributeValue::var(v, s)))
                .collect(),
        }
    }

    pub fn node(&self, id: &str) -> Option<&NodeId> {
        self.node_map.get(id)
    }

    pub fn edge(&self, id: &str) -> Option<&EdgeId> {
        self.edge_map.get(id)
    }

    pub fn is_injective(&self) -> bool {
        let nodes: BTreeSet<_> = self.node_map.values().collect();
        let edges: BTreeSet<_> = self.edge_map.values().collect();
        nodes.len() == self.node_map.len() && edges.len() == self.edge_map.len()
    }

    /// Apply the variable substitution to a source attribute value. Returns
    /// `None` when a variable is unmapped.
    pub fn apply(&self, value: &AttributeValue) -> Option<AttributeValue> {
        match value {
            AttributeValue::Const(_) => Some(value.clone()),
            AttributeValue::Var(v) => self.var_subst.get(&v.name).cloned(),
        }
    }

    /// `then ∘ self`.
    pub fn compose(&self, then: &GraphMorphism) -> GraphMorphism {
        GraphMorphism {
            node_map: self
                .node_map
                .iter()
                .filter_map(|(a, b)| then.node_map.get(b).map(|c| (a.clone(), c.clone())))
                .collect(),
            edge_map: self
                .edge_map
                .iter()
                .filter_map(|(a, b)| then.edge_map.get(b).map(|c| (a.clone(), c.clone())))
                .collect(),
            var_subst: self
                .var_subst
                .iter()
                .filter_map(|(v, val)| then.apply(val).map(|t| (v.clone(), t)))
                .collect(),
        }
    }

    /// Image of the morphism in its target.
    pub fn image(&self) -> Image {
        self.node_map
            .values()
            .cloned()
            .map(ElementId::Node)
            .chain(self.edge_map.values().cloned().map(ElementId::Edge))
            .collect()
    }

    pub fn is_total_on(&self, source: &TypedGraph) -> bool {
        source.nodes().all(|n| self.node_map.contains_key(&n.id))
            && source.edges().all(|e| self.edge_map.contains_key(&e.id))
    }

    /// List every violated morphism invariant (totality, typing, edge
    /// commutation, attribute compatibility, atom preservation). Empty means
    /// `self` is a valid morphism `source -> target`.
    pub fn check(&self, source: &TypedGraph, target: &TypedGraph) -> Vec<String> {
        let mut out = Vec::new();
        for n in source.nodes() {
            let Some(img) = self.node_map.get(&n.id) else {
                out.push(format!("node `{}` is unmapped", n.id));
                continue;
            };
            let Some(t) = target.node(img.as_str()) else {
                out.push(format!("node `{}` maps to missing `{img}`", n.id));
                continue;
            };
            if t.ty != n.ty {
                out.push(format!("node `{}`: type `{}` maps to `{}`", n.id, n.ty, t.ty));
            }
            for (attr, v) in &n.attrs {
                match (self.apply(v), t.attrs.get(attr)) {
                    (Some(a), Some(b)) if &a == b => {}
                    (mapped, actual) => out.push(format!(
                        "node `{}` attribute `{attr}`: {} maps to {}, target has {}",
                        n.id,
                        v,
                        mapped.map_or("<unmapped>".to_string(), |m| m.to_string()),
                        actual.map_or("<none>".to_string(), |m| m.to_string()),
                    )),
                }
            }
        }
        for e in source.edges() {
            let Some(img) = self.edge_map.get(&e.id) else {
                out.push(format!("edge `{}` is unmapped", e.id));
                continue;
            };
            let Some(t) = target.edge(img.as_str()) else {
                out.push(format!("edge `{}` maps to missing `{img}`", e.id));
                continue;
            };
            if t.ty != e.ty {
                out.push(format!("edge `{}`: type `{}` maps to `{}`", e.id, e.ty, t.ty));
            }
            if self.node_map.get(&e.source) != Some(&t.source) || self.node_map.get(&e.target) != Some(&t.target) {
                out.push(format!("edge `{}` does not commute with source/target", e.id));
            }
        }
        for atom in source.atoms() {
            if atom.evaluate_with(&self.var_subst) == Some(false) {
                out.push(format!("atom `{atom}` is violated under the substitution"));
            }
        }
        for (k, _) in &self.node_map {
            if !source.contains_node(k.as_str()) {
                out.push(format!("node map has foreign key `{k}`"));
            }
        }
        for (k, _) in &self.edge_map {
            if !source.contains_edge(k.as_str()) {
                out.push(format!("edge map has foreign key `{k}`"));
            }
        }
        out
    }

    pub fn is_valid(&self, source: &TypedGraph, target: &TypedGraph) -> bool {
        self.check(source, target).is_empty()
    }
}
