use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use super::search::transfer;
use super::{replica_matches, MatchError, Occurrence};
use crate::expansion::ReplicaId;
use crate::graph::{find_first_injective_morphism, for_each_injective_morphism, GraphMorphism, TypedGraph};
use crate::pattern::Pattern;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// The premise of a negative constraint was found.
    Forbidden,
    /// The premise was found but none of the consequences.
    Unfulfilled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintViolation {
    pub constraint: String,
    pub part: String,
    pub replica: String,
    pub kind: ViolationKind,
    /// Premise graph -> model.
    pub premise_match: GraphMorphism,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub violations: Vec<ConstraintViolation>,
}

impl ConstraintReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check every constraint of `p` at every replica of its anchor part in
/// `occ`. Premise and consequence matches may use any model element.
pub fn check_constraints(model: &TypedGraph, occ: &Occurrence, p: &Pattern) -> Result<ConstraintReport, MatchError> {
    let expansion = occ.expansion(p)?;
    let reps = replica_matches(&expansion, &occ.embedding);
    Ok(ConstraintReport { violations: violations(model, p, &reps, false) })
}

pub(super) fn violations(
    model: &TypedGraph,
    p: &Pattern,
    reps: &[(ReplicaId, usize, GraphMorphism)],
    first_only: bool,
) -> Vec<ConstraintViolation> {
    let mut out = Vec::new();
    for c in &p.constraints {
        let Some(anchor) = p.part_index(&c.anchor) else { continue };
        for (id, part, m) in reps.iter().filter(|(_, part, _)| *part == anchor) {
            let Some(seed) = transfer(m, &c.premise) else { continue };
            let flow = for_each_injective_morphism(&c.premise_graph, model, &seed, |x| {
                let fulfilled = !c.is_nac()
                    && c.consequences.iter().any(|cons| {
                        transfer(&x, &cons.morphism)
                            .and_then(|s| find_first_injective_morphism(&cons.graph, model, &s))
                            .is_some()
                    });
                if fulfilled {
                    return ControlFlow::Continue(());
                }
                out.push(ConstraintViolation {
                    constraint: c.label.clone(),
                    part: p.parts[*part].name.clone(),
                    replica: id.label(),
                    kind: if c.is_nac() { ViolationKind::Forbidden } else { ViolationKind::Unfulfilled },
                    premise_match: x,
                });
                if first_only {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            });
            if flow.is_break() {
                return out;
            }
        }
    }
    out
}
