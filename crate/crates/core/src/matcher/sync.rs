use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{find_occurrences, replica_matches, MatchConfig, MatchError, MatchMode, Occurrence};
use crate::graph::{AttributeValue, GraphMorphism, NodeId, TypedGraph};
use crate::pattern::{Pattern, SyncLink, SynchronizedPatternSet};
use crate::solver::ReplicaAssignment;

/// Indices into the primary and per-secondary occurrence lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncTuple {
    pub primary: usize,
    pub secondaries: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum SyncReason {
    AttributeMismatch { link: String, variable: String, primary: String, secondary: String },
    CountMismatch { relation: String },
}

impl fmt::Display for SyncReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyncReason::AttributeMismatch { link, variable, primary, secondary } => {
                write!(f, "attribute mismatch on {link}: ?{variable} is {primary} vs {secondary}")
            }
            SyncReason::CountMismatch { relation } => write!(f, "count mismatch: {relation} does not hold"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncRejection {
    pub tuple: SyncTuple,
    pub reason: SyncReason,
}

#[derive(Debug, Clone, Default)]
pub struct SyncReport {
    pub primary: Vec<Occurrence>,
    pub secondaries: Vec<Vec<Occurrence>>,
    pub accepted: Vec<SyncTuple>,
    pub rejected: Vec<SyncRejection>,
}

/// Per-replica matches of one occurrence, grouped by part name.
type PartMatches = BTreeMap<String, Vec<GraphMorphism>>;

fn part_matches(p: &Pattern, occ: &Occurrence) -> Result<PartMatches, MatchError> {
    let e = occ.expansion(p)?;
    let mut out: PartMatches = BTreeMap::new();
    for (_, part, m) in replica_matches(&e, &occ.embedding) {
        out.entry(p.parts[part].name.clone()).or_default().push(m);
    }
    Ok(out)
}

/// Match each member in its own model, then test every tuple of maximal
/// occurrences against the joint equations and the linked attributes.
pub fn check_sync(
    primary_model: &TypedGraph,
    secondary_models: &[TypedGraph],
    s: &SynchronizedPatternSet,
    cfg: &MatchConfig,
) -> Result<SyncReport, MatchError> {
    if secondary_models.len() != s.secondaries.len() {
        return Err(MatchError::InvalidModel(format!(
            "expected {} collaboration model(s), got {}",
            s.secondaries.len(),
            secondary_models.len()
        )));
    }
    let joint = s.joint_equation_system().map_err(|e| MatchError::InvalidModel(e.to_string()))?;
    let cfg = cfg.with_mode(MatchMode::FindMaximal);
    let primary = find_occurrences(primary_model, &s.primary, &cfg)?.occurrences;
    let mut secondaries = Vec::new();
    for (p, m) in s.secondaries.iter().zip(secondary_models) {
        secondaries.push(find_occurrences(m, p, &cfg)?.occurrences);
    }
    let primary_parts: Vec<PartMatches> = primary.iter().map(|o| part_matches(&s.primary, o)).collect::<Result<_, _>>()?;
    let mut secondary_parts = Vec::new();
    for (p, occs) in s.secondaries.iter().zip(&secondaries) {
        secondary_parts.push(occs.iter().map(|o| part_matches(p, o)).collect::<Result<Vec<_>, _>>()?);
    }

    let mut groups: BTreeMap<(String, usize, String), Vec<&SyncLink>> = BTreeMap::new();
    for l in &s.links {
        groups.entry((l.primary_part.clone(), l.secondary, l.secondary_part.clone())).or_default().push(l);
    }

    let mut report = SyncReport { primary, secondaries, ..Default::default() };
    for pi in 0..report.primary.len() {
        for combo in product(&report.secondaries.iter().map(Vec::len).collect::<Vec<_>>()) {
            let tuple = SyncTuple { primary: pi, secondaries: combo };
            match judge(s, &joint, &report, &primary_parts[pi], &secondary_parts, &groups, &tuple) {
                None => report.accepted.push(tuple),
                Some(reason) => report.rejected.push(SyncRejection { tuple, reason }),
            }
        }
    }
    Ok(report)
}

fn judge(
    s: &SynchronizedPatternSet,
    joint: &crate::solver::EquationSystem,
    report: &SyncReport,
    primary_parts: &PartMatches,
    secondary_parts: &[Vec<PartMatches>],
    groups: &BTreeMap<(String, usize, String), Vec<&SyncLink>>,
    tuple: &SyncTuple,
) -> Option<SyncReason> {
    let mut a = ReplicaAssignment::new().with(s.primary.root_var(), 1);
    for (k, v) in report.primary[tuple.primary].assignment.iter() {
        a.set(k, v);
    }
    for (i, &oi) in tuple.secondaries.iter().enumerate() {
        a.set(s.secondaries[i].root_var(), 1);
        for (k, v) in report.secondaries[i][oi].assignment.iter() {
            a.set(k, v);
        }
    }
    if let Some(r) = joint.relations().iter().find(|r| !r.evaluate(&a).unwrap_or(false)) {
        return Some(SyncReason::CountMismatch { relation: r.to_string() });
    }
    for ((pp, si, sp), links) in groups {
        let empty = Vec::new();
        let left = primary_parts.get(pp).unwrap_or(&empty);
        let right = secondary_parts[*si][tuple.secondaries[*si]].get(sp).unwrap_or(&empty);
        if left.len() != right.len() {
            return Some(SyncReason::CountMismatch { relation: format!("{pp}={sp}") });
        }
        let secondary = &s.secondaries[*si];
        let compat = |l: &GraphMorphism, r: &GraphMorphism| -> Option<(usize, SyncReason)> {
            links.iter().enumerate().find_map(|(k, link)| mismatch(&s.primary, secondary, link, l, r).map(|m| (k, m)))
        };
        let mut used = vec![false; right.len()];
        let mut closest = None;
        if !pair_up(left, right, 0, &mut used, &compat, &mut closest) {
            return closest.map(|(_, r)| r).or(Some(SyncReason::CountMismatch { relation: format!("{pp}={sp}") }));
        }
    }
    None
}

/// Backtracking search for a bijection between replicas that keeps every
/// linked pair compatible. On failure `closest` holds the mismatch of the
/// rejected pair that agreed on the most leading links.
fn pair_up<F>(
    left: &[GraphMorphism],
    right: &[GraphMorphism],
    i: usize,
    used: &mut [bool],
    compat: &F,
    closest: &mut Option<(usize, SyncReason)>,
) -> bool
where
    F: Fn(&GraphMorphism, &GraphMorphism) -> Option<(usize, SyncReason)>,
{
    if i == left.len() {
        return true;
    }
    for j in 0..right.len() {
        if used[j] {
            continue;
        }
        match compat(&left[i], &right[j]) {
            Some((k, reason)) => {
                if closest.as_ref().is_none_or(|(best, _)| k > *best) {
                    *closest = Some((k, reason));
                }
            }
            None => {
                used[j] = true;
                if pair_up(left, right, i + 1, used, compat, closest) {
                    return true;
                }
                used[j] = false;
            }
        }
    }
    false
}

fn node_vars(p: &Pattern, part: &str, node: &NodeId) -> BTreeSet<String> {
    p.part(part)
        .and_then(|x| x.graph.node(node.as_str()))
        .map(|n| n.attrs.values().filter_map(AttributeValue::as_var).map(|v| v.name.clone()).collect())
        .unwrap_or_default()
}

fn mismatch(
    primary: &Pattern,
    secondary: &Pattern,
    link: &SyncLink,
    l: &GraphMorphism,
    r: &GraphMorphism,
) -> Option<SyncReason> {
    let shared: Vec<String> = node_vars(primary, &link.primary_part, &link.primary_node)
        .intersection(&node_vars(secondary, &link.secondary_part, &link.secondary_node))
        .cloned()
        .collect();
    for v in shared {
        let (lv, rv) = (l.var_subst.get(&v), r.var_subst.get(&v));
        if lv != rv {
            let show = |x: Option<&AttributeValue>| x.map_or("unbound".to_string(), ToString::to_string);
            return Some(SyncReason::AttributeMismatch {
                link: format!("{}.{} ~ {}.{}", link.primary_part, link.primary_node, link.secondary_part, link.secondary_node),
                variable: v,
                primary: show(lv),
                secondary: show(rv),
            });
        }
    }
    None
}

/// Cartesian product of `0..sizes[i]`, in lexicographic order.
fn product(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &n in sizes {
        out = out.into_iter().flat_map(|prefix| (0..n).map(move |i| [prefix.clone(), vec![i]].concat())).collect();
    }
    out
}
