//! Deciding satisfaction, enumerating occurrences and checking constraints,
//! root cardinality and synchronization.

mod constraints;
mod search;
mod sync;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expansion::{enumerate_expansions, expand, Expansion, ExpansionError, ReplicaId};
use crate::graph::{find_injective_morphisms, ElementId, GraphMorphism, Image, TypedGraph};
use crate::pattern::Pattern;
use crate::solver::{enumerate_solutions, ReplicaAssignment, DEFAULT_BOUND};

pub use constraints::{check_constraints, ConstraintReport, ConstraintViolation, ViolationKind};
pub use sync::{check_sync, SyncReason, SyncRejection, SyncReport, SyncTuple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    #[default]
    Satisfy,
    FindAll,
    FindMaximal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchConfig {
    /// Largest replica count tried for any part; at least 1.
    pub replica_bound: u64,
    pub max_occurrences: Option<usize>,
    pub mode: MatchMode,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig { replica_bound: DEFAULT_BOUND, max_occurrences: None, mode: MatchMode::Satisfy }
    }
}

impl MatchConfig {
    pub fn with_bound(mut self, bound: u64) -> Self {
        self.replica_bound = bound.max(1);
        self
    }

    pub fn with_mode(mut self, mode: MatchMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_max_occurrences(mut self, cap: Option<usize>) -> Self {
        self.max_occurrences = cap;
        self
    }

    fn bound(&self) -> u64 {
        self.replica_bound.max(1)
    }
}

/// A model element bound to a pattern role.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RoleBinding {
    pub element: String,
    pub role: String,
    pub part: String,
    pub replica: u64,
}

/// An injective embedding of one expansion into a model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Occurrence {
    pub pattern: String,
    pub assignment: ReplicaAssignment,
    /// Expansion graph -> model.
    pub embedding: GraphMorphism,
    pub bindings: Vec<RoleBinding>,
}

impl Occurrence {
    /// Model elements covered by the occurrence; its identity.
    pub fn image(&self) -> Image {
        self.embedding.image()
    }

    /// Rebuild the expansion this occurrence embeds.
    pub fn expansion(&self, p: &Pattern) -> Result<Expansion, ExpansionError> {
        expand(p, &self.assignment)
    }

    /// Matches of each replica's part graph, in expansion replica order.
    pub fn replica_matches(&self, expansion: &Expansion) -> Vec<(ReplicaId, usize, GraphMorphism)> {
        replica_matches(expansion, &self.embedding)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    NotSatisfied,
    /// A root match exists but a witness may need more replicas than the
    /// bound allows.
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct Satisfaction {
    pub verdict: Verdict,
    pub witness: Option<Occurrence>,
    pub root_matches: usize,
}

impl Satisfaction {
    pub fn is_satisfied(&self) -> bool {
        self.verdict == Verdict::Satisfied
    }
}

#[derive(Debug, Clone, Default)]
pub struct Matches {
    pub occurrences: Vec<Occurrence>,
    /// The occurrence cap was hit; the list is incomplete.
    pub truncated: bool,
    /// Some part had more candidate replicas than the bound.
    pub beyond_bound: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("pattern `{pattern}` is typed over `{expected}` but the model is a `{found}` model")]
    MetamodelMismatch { pattern: String, expected: String, found: String },
    #[error("occurrence refers to unknown model element `{0}`")]
    DanglingElement(String),
    #[error(transparent)]
    Expansion(#[from] ExpansionError),
}

fn check_inputs(model: &TypedGraph, p: &Pattern) -> Result<(), MatchError> {
    if model.metamodel().name() != p.metamodel.name() {
        return Err(MatchError::MetamodelMismatch {
            pattern: p.name.clone(),
            expected: p.metamodel.name().to_string(),
            found: model.metamodel().name().to_string(),
        });
    }
    let report = model.validate();
    if let Some(v) = report.violations.first() {
        let more = report.violations.len() - 1;
        let suffix = if more > 0 { format!(" (and {more} more)") } else { String::new() };
        return Err(MatchError::InvalidModel(format!("{v}{suffix}")));
    }
    Ok(())
}

/// Incremental strategy: match the root, then grow variable parts replica
/// by replica from the root's image.
pub fn satisfies(model: &TypedGraph, p: &Pattern, cfg: &MatchConfig) -> Result<Satisfaction, MatchError> {
    check_inputs(model, p)?;
    search::satisfy(model, p, cfg.bound())
}

/// Reference strategy: enumerate expansions smallest first and match each
/// one as a whole.
pub fn satisfies_naive(model: &TypedGraph, p: &Pattern, cfg: &MatchConfig) -> Result<Satisfaction, MatchError> {
    check_inputs(model, p)?;
    let root_matches = find_injective_morphisms(&p.root().graph, model, &GraphMorphism::empty()).len();
    let solutions = crate::solver::solutions_minimal_first(&p.expansion_system(), cfg.bound());
    for a in solutions {
        let e = expand(p, &a)?;
        for emb in find_injective_morphisms(&e.graph, model, &GraphMorphism::empty()) {
            let reps = replica_matches(&e, &emb);
            if constraints::violations(model, p, &reps, true).is_empty() {
                let witness = occurrence_from(p, &e, emb);
                return Ok(Satisfaction { verdict: Verdict::Satisfied, witness: Some(witness), root_matches });
            }
        }
    }
    Ok(Satisfaction { verdict: Verdict::NotSatisfied, witness: None, root_matches })
}

/// Occurrences whose constraints hold, deduplicated by image, in a
/// deterministic order. `FindMaximal` drops occurrences strictly contained
/// in another one; `Satisfy` behaves like `FindAll`.
pub fn find_occurrences(model: &TypedGraph, p: &Pattern, cfg: &MatchConfig) -> Result<Matches, MatchError> {
    check_inputs(model, p)?;
    let mut m = search::find_all(model, p, cfg.bound(), cfg.max_occurrences, true)?;
    if cfg.mode == MatchMode::FindMaximal {
        m.occurrences = maximal(m.occurrences);
    }
    Ok(m)
}

/// Like [`find_occurrences`] but ignores the pattern's constraints; useful
/// to explain why a structurally present pattern is rejected.
pub fn find_structural_occurrences(model: &TypedGraph, p: &Pattern, cfg: &MatchConfig) -> Result<Matches, MatchError> {
    check_inputs(model, p)?;
    let mut m = search::find_all(model, p, cfg.bound(), cfg.max_occurrences, false)?;
    if cfg.mode == MatchMode::FindMaximal {
        m.occurrences = maximal(m.occurrences);
    }
    Ok(m)
}

/// All occurrences found by expanding first and matching each expansion.
pub fn find_occurrences_naive(model: &TypedGraph, p: &Pattern, cfg: &MatchConfig) -> Result<Vec<Occurrence>, MatchError> {
    check_inputs(model, p)?;
    let mut found = BTreeMap::new();
    for e in enumerate_expansions(p, cfg.bound()) {
        let e = e?;
        for emb in find_injective_morphisms(&e.graph, model, &GraphMorphism::empty()) {
            let image = emb.image();
            if found.contains_key(&image) {
                continue;
            }
            let reps = replica_matches(&e, &emb);
            if constraints::violations(model, p, &reps, true).is_empty() {
                found.insert(image, occurrence_from(p, &e, emb));
            }
        }
    }
    let mut out: Vec<Occurrence> = found.into_values().collect();
    if cfg.mode == MatchMode::FindMaximal {
        out = maximal(out);
    }
    Ok(out)
}

/// Keep occurrences whose image is not strictly contained in another's.
pub fn maximal(occurrences: Vec<Occurrence>) -> Vec<Occurrence> {
    let images: Vec<Image> = occurrences.iter().map(Occurrence::image).collect();
    occurrences
        .into_iter()
        .enumerate()
        .filter(|(i, _)| {
            !images.iter().enumerate().any(|(j, other)| j != *i && other.len() > images[*i].len() && images[*i].is_subset(other))
        })
        .map(|(_, o)| o)
        .collect()
}

fn replica_matches(expansion: &Expansion, emb: &GraphMorphism) -> Vec<(ReplicaId, usize, GraphMorphism)> {
    expansion
        .replicas
        .iter()
        .zip(&expansion.replica_parts)
        .zip(&expansion.injections)
        .map(|((id, part), inj)| (id.clone(), *part, inj.compose(emb)))
        .collect()
}

fn occurrence_from(p: &Pattern, expansion: &Expansion, embedding: GraphMorphism) -> Occurrence {
    let mut bindings: Vec<RoleBinding> = expansion
        .role_map
        .iter()
        .filter_map(|(node, role)| {
            let target = embedding.node_map.get(node)?;
            let prov = expansion.provenance.get(&ElementId::Node(node.clone()))?;
            Some(RoleBinding {
                element: target.to_string(),
                role: role.clone(),
                part: prov.part.clone(),
                replica: prov.replica,
            })
        })
        .collect();
    bindings.sort_by(|a, b| (&a.part, a.replica, &a.role, &a.element).cmp(&(&b.part, b.replica, &b.role, &b.element)));
    Occurrence { pattern: p.name.clone(), assignment: expansion.assignment.clone(), embedding, bindings }
}

/// Outcome of one root-variable relation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardinalityCheck {
    pub relation: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardinalityReport {
    /// Number of maximal occurrences in the model.
    pub count: usize,
    pub checks: Vec<CardinalityCheck>,
}

impl CardinalityReport {
    pub fn is_ok(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

/// Evaluate the relations over the root count variable with that variable
/// bound to the number of maximal occurrences.
pub fn check_root_cardinality(model: &TypedGraph, p: &Pattern, cfg: &MatchConfig) -> Result<CardinalityReport, MatchError> {
    let count = find_occurrences(model, p, &cfg.with_mode(MatchMode::FindMaximal))?.occurrences.len();
    let a = ReplicaAssignment::new().with(p.root_var(), count as u64);
    let checks = p
        .root_relations()
        .into_iter()
        .map(|r| CardinalityCheck { relation: r.to_string(), holds: r.evaluate(&a).unwrap_or(false) })
        .collect();
    Ok(CardinalityReport { count, checks })
}

/// One occurrence in an annotation document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedOccurrence {
    pub pattern: String,
    pub assignment: ReplicaAssignment,
    pub bindings: Vec<RoleBinding>,
}

/// Role annotations for a model: the correspondence part of a triple graph.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub occurrences: Vec<AnnotatedOccurrence>,
}

impl Annotation {
    /// Roles carried by each model element, over all occurrences.
    pub fn roles_by_element(&self) -> BTreeMap<&str, Vec<(&str, &str)>> {
        let mut out: BTreeMap<&str, Vec<(&str, &str)>> = BTreeMap::new();
        for o in &self.occurrences {
            for b in &o.bindings {
                out.entry(b.element.as_str()).or_default().push((o.pattern.as_str(), b.role.as_str()));
            }
        }
        out
    }
}

pub fn annotate(model: &TypedGraph, occurrences: &[Occurrence]) -> Result<Annotation, MatchError> {
    let mut out = Vec::with_capacity(occurrences.len());
    for o in occurrences {
        for b in &o.bindings {
            if !model.contains_node(&b.element) && !model.contains_edge(&b.element) {
                return Err(MatchError::DanglingElement(b.element.clone()));
            }
        }
        out.push(AnnotatedOccurrence { pattern: o.pattern.clone(), assignment: o.assignment.clone(), bindings: o.bindings.clone() });
    }
    Ok(Annotation { occurrences: out })
}

/// Whether the expansion system has any solution within `bound`.
pub fn feasible_within(p: &Pattern, bound: u64) -> bool {
    !enumerate_solutions(&p.expansion_system(), bound).is_empty()
}
