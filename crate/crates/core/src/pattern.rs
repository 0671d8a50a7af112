//! Patterns with nested variable parts, count equations, constraints and
//! synchronization between a primary and secondary patterns.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphMorphism, Metamodel, NodeId, TypedGraph};
use crate::solver::{enumerate_solutions, CountRelation, CountTerm, EquationSystem, RelOp, DEFAULT_BOUND};

/// A variability region. The root part has no parent; every other part is
/// embedded into by its parent's graph.
#[derive(Debug, Clone)]
pub struct VariablePart {
    pub name: String,
    pub graph: TypedGraph,
    pub parent: Option<usize>,
    /// Injective embedding `parent.graph -> graph`.
    pub embedding: Option<GraphMorphism>,
    pub role_labels: BTreeMap<NodeId, String>,
}

#[derive(Debug, Clone)]
pub struct Consequence {
    pub graph: TypedGraph,
    /// Injective morphism from the premise graph.
    pub morphism: GraphMorphism,
}

/// `anchor -> premise -> {consequence_j}`. No consequences makes it a
/// negative constraint: the premise must not be found.
#[derive(Debug, Clone)]
pub struct AtomicConstraint {
    pub label: String,
    pub anchor: String,
    pub premise_graph: TypedGraph,
    /// Injective morphism from the anchor part's graph.
    pub premise: GraphMorphism,
    pub consequences: Vec<Consequence>,
}

impl AtomicConstraint {
    pub fn is_nac(&self) -> bool {
        self.consequences.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Pattern {
    /// Identifier; also the count variable of the root part.
    pub name: String,
    /// Human-readable heading, e.g. "Abstract Factory".
    pub title: String,
    pub intent: String,
    pub metamodel: Arc<Metamodel>,
    /// Declared role vocabulary, in declaration order.
    pub roles: Vec<String>,
    /// `parts[0]` is the root.
    pub parts: Vec<VariablePart>,
    pub equations: EquationSystem,
    pub constraints: Vec<AtomicConstraint>,
}

impl Pattern {
    pub fn root(&self) -> &VariablePart {
        &self.parts[0]
    }

    pub fn root_var(&self) -> &str {
        &self.parts[0].name
    }

    pub fn part(&self, name: &str) -> Option<&VariablePart> {
        self.parts.iter().find(|p| p.name == name)
    }

    pub fn part_index(&self, name: &str) -> Option<usize> {
        self.parts.iter().position(|p| p.name == name)
    }

    pub fn children(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.parts.len()).filter(move |&i| self.parts[i].parent == Some(idx))
    }

    /// Names of the non-root parts, in declaration order.
    pub fn part_variables(&self) -> Vec<&str> {
        self.parts[1..].iter().map(|p| p.name.as_str()).collect()
    }

    pub fn list_roles(&self) -> Vec<String> {
        self.roles.clone()
    }

    /// Relations over the root count variable alone; these bound how often
    /// the pattern may occur in a model.
    pub fn root_relations(&self) -> Vec<&CountRelation> {
        let root = self.root_var();
        self.equations
            .relations()
            .iter()
            .filter(|r| {
                let vars = r.variables();
                !vars.is_empty() && vars.iter().all(|v| *v == root)
            })
            .collect()
    }

    /// The system governing a single expansion: every relation that mentions
    /// a part variable, with the root count fixed to 1, plus `part>=0` for
    /// parts no relation mentions.
    pub fn expansion_system(&self) -> EquationSystem {
        let root = self.root_var();
        let mut sys = EquationSystem::default();
        for r in self.equations.relations() {
            if r.variables().iter().any(|v| *v != root) {
                sys.push(r.bind(root, 1));
            }
        }
        for p in &self.parts[1..] {
            if !sys.variables().contains(&p.name) {
                sys.push(CountRelation::new(CountTerm::var(&p.name), RelOp::Ge, CountTerm::Const(0)));
            }
        }
        sys
    }

    pub fn validate(&self) -> PatternReport {
        validate_pattern(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    EmptyRoot,
    DuplicatePartName,
    NotATree,
    InvalidEmbedding,
    NonInjectiveEmbedding,
    PartAddsNothing,
    GraphViolation,
    UnknownRole,
    RoleConflict,
    UnknownVariable,
    Infeasible,
    UnknownAnchor,
    InvalidConstraint,
    InvalidLink,
}

/// One well-formedness problem; `location` names the part, constraint or
/// link concerned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternIssue {
    pub severity: Severity,
    pub kind: IssueKind,
    pub location: String,
    pub message: String,
}

impl fmt::Display for PatternIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}: {}: {}", self.location, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternReport {
    pub issues: Vec<PatternIssue>,
}

impl PatternReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    /// No error-level issues (warnings allowed).
    pub fn is_valid(&self) -> bool {
        self.issues.iter().all(|i| i.severity != Severity::Error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &PatternIssue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    fn error(&mut self, kind: IssueKind, location: impl Into<String>, message: impl Into<String>) {
        self.issues.push(PatternIssue { severity: Severity::Error, kind, location: location.into(), message: message.into() });
    }

    fn warn(&mut self, kind: IssueKind, location: impl Into<String>, message: impl Into<String>) {
        self.issues.push(PatternIssue { severity: Severity::Warning, kind, location: location.into(), message: message.into() });
    }
}

pub fn validate_pattern(p: &Pattern) -> PatternReport {
    let mut report = PatternReport::default();
    if p.parts.is_empty() {
        report.error(IssueKind::EmptyRoot, &p.name, "pattern has no root part");
        return report;
    }
    let mut seen = BTreeSet::new();
    for part in &p.parts {
        if !seen.insert(part.name.as_str()) {
            report.error(IssueKind::DuplicatePartName, &part.name, format!("part name `{}` is used twice", part.name));
        }
    }
    if p.root().graph.is_empty() {
        report.error(IssueKind::EmptyRoot, &p.root().name, "root graph is empty");
    }
    check_tree(p, &mut report);

    let roles: BTreeSet<&str> = p.roles.iter().map(String::as_str).collect();
    for (i, part) in p.parts.iter().enumerate() {
        for v in part.graph.validate().violations {
            report.error(IssueKind::GraphViolation, &part.name, v.to_string());
        }
        if !part.graph.same_metamodel(&TypedGraph::new(p.metamodel.clone())) {
            report.error(IssueKind::GraphViolation, &part.name, "part graph uses a different metamodel");
        }
        for (node, role) in &part.role_labels {
            if !roles.contains(role.as_str()) {
                report.error(IssueKind::UnknownRole, &part.name, format!("role `{role}` is not declared"));
            }
            if !part.graph.contains_node(node.as_str()) {
                report.error(IssueKind::UnknownRole, &part.name, format!("role label on missing node `{node}`"));
            }
        }
        let (Some(parent), Some(emb)) = (part.parent, part.embedding.as_ref()) else {
            if i != 0 && part.embedding.is_none() {
                report.error(IssueKind::InvalidEmbedding, &part.name, "missing embedding from parent");
            }
            continue;
        };
        let Some(parent_part) = p.parts.get(parent) else { continue };
        if let Some(problem) = emb.check(&parent_part.graph, &part.graph).into_iter().next() {
            report.error(IssueKind::InvalidEmbedding, &part.name, problem);
            continue;
        }
        if !emb.is_injective() {
            report.error(IssueKind::NonInjectiveEmbedding, &part.name, "embedding from parent is not injective");
        }
        if emb.node_map.len() == part.graph.node_count() && emb.edge_map.len() == part.graph.edge_count() {
            report.error(IssueKind::PartAddsNothing, &part.name, "part adds no elements to its parent");
        }
        for (node, role) in &parent_part.role_labels {
            if let Some(img) = emb.node_map.get(node) {
                if let Some(other) = part.role_labels.get(img) {
                    if other != role {
                        report.error(
                            IssueKind::RoleConflict,
                            &part.name,
                            format!("node `{img}` is `{role}` in the parent but `{other}` here"),
                        );
                    }
                }
            }
        }
    }

    let declared: BTreeSet<&str> = p.parts.iter().map(|x| x.name.as_str()).collect();
    for v in p.equations.variables() {
        if !declared.contains(v.as_str()) {
            report.error(IssueKind::UnknownVariable, "equations", format!("unknown count variable `{v}`"));
        }
    }
    if report.is_valid() && enumerate_solutions(&p.expansion_system(), DEFAULT_BOUND).is_empty() {
        report.warn(
            IssueKind::Infeasible,
            "equations",
            format!("no replica assignment up to {DEFAULT_BOUND} satisfies `{}`", p.equations),
        );
    }

    for c in &p.constraints {
        let Some(anchor) = p.part(&c.anchor) else {
            report.error(IssueKind::UnknownAnchor, &c.label, format!("anchor part `{}` does not exist", c.anchor));
            continue;
        };
        for v in c.premise_graph.validate().violations {
            report.error(IssueKind::InvalidConstraint, &c.label, format!("premise: {v}"));
        }
        if let Some(problem) = c.premise.check(&anchor.graph, &c.premise_graph).into_iter().next() {
            report.error(IssueKind::InvalidConstraint, &c.label, format!("premise morphism: {problem}"));
        } else if !c.premise.is_injective() {
            report.error(IssueKind::InvalidConstraint, &c.label, "premise morphism is not injective");
        }
        for (j, cons) in c.consequences.iter().enumerate() {
            for v in cons.graph.validate().violations {
                report.error(IssueKind::InvalidConstraint, &c.label, format!("consequence {j}: {v}"));
            }
            if let Some(problem) = cons.morphism.check(&c.premise_graph, &cons.graph).into_iter().next() {
                report.error(IssueKind::InvalidConstraint, &c.label, format!("consequence {j} morphism: {problem}"));
            } else if !cons.morphism.is_injective() {
                report.error(IssueKind::InvalidConstraint, &c.label, format!("consequence {j} morphism is not injective"));
            }
        }
    }
    report
}

fn check_tree(p: &Pattern, report: &mut PatternReport) {
    if p.parts[0].parent.is_some() {
        report.error(IssueKind::NotATree, &p.parts[0].name, "root part has a parent");
    }
    for part in &p.parts[1..] {
        match part.parent {
            None => report.error(IssueKind::NotATree, &part.name, "non-root part without parent"),
            Some(i) if i >= p.parts.len() => report.error(IssueKind::NotATree, &part.name, "parent index out of range"),
            Some(_) => {}
        }
    }
    // every part must reach the root without revisiting a part
    for (i, part) in p.parts.iter().enumerate() {
        let mut cur = i;
        let mut steps = 0;
        while let Some(parent) = p.parts.get(cur).and_then(|x| x.parent) {
            cur = parent;
            steps += 1;
            if steps > p.parts.len() {
                report.error(IssueKind::NotATree, &part.name, "cycle in part hierarchy");
                break;
            }
        }
    }
}

/// Endpoint pair of one synchronization link.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SyncLink {
    pub primary_part: String,
    pub primary_node: NodeId,
    pub secondary: usize,
    pub secondary_part: String,
    pub secondary_node: NodeId,
}

/// A primary pattern synchronized with secondary patterns through links
/// identifying common elements.
#[derive(Debug, Clone)]
pub struct SynchronizedPatternSet {
    pub primary: Pattern,
    pub secondaries: Vec<Pattern>,
    pub links: Vec<SyncLink>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatternError {
    #[error("invalid sync link: {0}")]
    InvalidLink(String),
}

impl SynchronizedPatternSet {
    pub fn single(primary: Pattern) -> Self {
        SynchronizedPatternSet { primary, secondaries: Vec::new(), links: Vec::new() }
    }

    pub fn validate(&self) -> PatternReport {
        let mut report = self.primary.validate();
        for s in &self.secondaries {
            report.issues.extend(s.validate().issues);
        }
        for link in &self.links {
            if let Err(PatternError::InvalidLink(msg)) = self.check_link(link) {
                report.error(IssueKind::InvalidLink, format!("{}.{}", link.primary_part, link.primary_node), msg);
            }
        }
        report
    }

    fn check_link(&self, link: &SyncLink) -> Result<(), PatternError> {
        let err = |m: String| Err(PatternError::InvalidLink(m));
        let Some(pp) = self.primary.part(&link.primary_part) else {
            return err(format!("primary part `{}` does not exist", link.primary_part));
        };
        let Some(sec) = self.secondaries.get(link.secondary) else {
            return err(format!("secondary pattern #{} does not exist", link.secondary));
        };
        let Some(sp) = sec.part(&link.secondary_part) else {
            return err(format!("part `{}` does not exist in `{}`", link.secondary_part, sec.name));
        };
        if !pp.graph.contains_node(link.primary_node.as_str()) {
            return err(format!("node `{}` not in primary part `{}`", link.primary_node, pp.name));
        }
        if !sp.graph.contains_node(link.secondary_node.as_str()) {
            return err(format!("node `{}` not in part `{}`", link.secondary_node, sp.name));
        }
        let pr = role_of(&self.primary, link.primary_part.as_str(), &link.primary_node);
        let sr = role_of(sec, link.secondary_part.as_str(), &link.secondary_node);
        if pr.is_none() || pr != sr {
            return err(format!(
                "linked nodes must carry the same role (found {} and {})",
                pr.unwrap_or("none"),
                sr.unwrap_or("none")
            ));
        }
        Ok(())
    }

    /// Union of all member systems plus `p = s` for every pair of parts
    /// joined by at least one link.
    pub fn joint_equation_system(&self) -> Result<EquationSystem, PatternError> {
        let mut sys = EquationSystem::default();
        for r in self.primary.equations.relations() {
            sys.push(r.clone());
        }
        for s in &self.secondaries {
            for r in s.equations.relations() {
                if !sys.contains(r) {
                    sys.push(r.clone());
                }
            }
        }
        let mut pairs = BTreeSet::new();
        for link in &self.links {
            self.check_link(link)?;
            pairs.insert((link.primary_part.clone(), link.secondary, link.secondary_part.clone()));
        }
        for (pp, _, sp) in pairs {
            let eq = CountRelation::new(CountTerm::Var(pp), RelOp::Eq, CountTerm::Var(sp));
            if !sys.contains(&eq) {
                sys.push(eq);
            }
        }
        Ok(sys)
    }
}

/// Role of `node` as seen from `part`: its own label or one inherited
/// through the ancestors' embeddings.
pub fn role_of<'a>(p: &'a Pattern, part: &str, node: &NodeId) -> Option<&'a str> {
    let mut idx = p.part_index(part)?;
    let mut node = node.clone();
    loop {
        let cur = &p.parts[idx];
        if let Some(r) = cur.role_labels.get(&node) {
            return Some(r);
        }
        let (parent, emb) = (cur.parent?, cur.embedding.as_ref()?);
        node = emb.node_map.iter().find(|(_, img)| **img == node).map(|(pre, _)| pre.clone())?;
        idx = parent;
    }
}
