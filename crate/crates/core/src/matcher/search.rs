use std::collections::{BTreeMap, HashMap, HashSet};
use std::ops::ControlFlow;
use std::sync::Arc;

use rayon::prelude::*;

use super::{constraints, feasible_within, occurrence_from, MatchError, Matches, Occurrence, Satisfaction, Verdict};
use crate::expansion::{expand, Expansion, ReplicaId};
use crate::graph::{find_injective_morphisms, AttributeValue, ElementId, GraphMorphism, Image, TypedGraph};
use crate::pattern::Pattern;
use crate::solver::{CountRelation, EquationSystem, ReplicaAssignment};

/// Seed for matching `B` given a match of `A` and an injective `along: A -> B`.
/// `None` when the match contradicts a constant `along` pins a variable to.
pub(super) fn transfer(m: &GraphMorphism, along: &GraphMorphism) -> Option<GraphMorphism> {
    let mut seed = GraphMorphism::empty();
    for (a, b) in &along.node_map {
        if let Some(h) = m.node_map.get(a) {
            seed.node_map.insert(b.clone(), h.clone());
        }
    }
    for (a, b) in &along.edge_map {
        if let Some(h) = m.edge_map.get(a) {
            seed.edge_map.insert(b.clone(), h.clone());
        }
    }
    for (v, val) in &along.var_subst {
        let Some(hv) = m.var_subst.get(v) else { continue };
        match val {
            AttributeValue::Var(w) => {
                if let Some(prev) = seed.var_subst.insert(w.name.clone(), hv.clone()) {
                    if &prev != hv {
                        return None;
                    }
                }
            }
            AttributeValue::Const(_) => {
                if hv.as_const().is_some() && hv != val {
                    return None;
                }
            }
        }
    }
    Some(seed)
}

struct Rep {
    id: ReplicaId,
    part: usize,
    m: GraphMorphism,
    image: Image,
}

struct Candidate {
    m: GraphMorphism,
    image: Image,
    new: Vec<ElementId>,
}

struct State {
    reps: Vec<Rep>,
    used: HashSet<ElementId>,
    assignment: ReplicaAssignment,
    beyond: bool,
}

impl State {
    fn replica_matches(&self) -> Vec<(ReplicaId, usize, GraphMorphism)> {
        self.reps.iter().map(|r| (r.id.clone(), r.part, r.m.clone())).collect()
    }
}

struct Plan<'a> {
    model: &'a TypedGraph,
    p: &'a Pattern,
    bound: u64,
    /// Non-root parts, parents before children.
    order: Vec<usize>,
    /// Relations to test once `order[k]` has a count.
    checks: Vec<Vec<CountRelation>>,
}

impl<'a> Plan<'a> {
    fn new(model: &'a TypedGraph, p: &'a Pattern, bound: u64) -> Self {
        let mut order = Vec::new();
        let mut frontier = vec![0];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for i in frontier {
                for c in p.children(i) {
                    order.push(c);
                    next.push(c);
                }
            }
            frontier = next;
        }
        let sys: EquationSystem = p.expansion_system();
        let position: HashMap<&str, usize> = order.iter().enumerate().map(|(k, &c)| (p.parts[c].name.as_str(), k)).collect();
        let mut checks = vec![Vec::new(); order.len()];
        for r in sys.relations() {
            // unknown variables never get a count; such relations fail at the last stage
            let last = r.variables().iter().map(|v| position.get(v).copied().unwrap_or(usize::MAX)).max();
            match last {
                Some(usize::MAX) | None => {
                    if let Some(l) = checks.last_mut() {
                        l.push(r.clone());
                    }
                }
                Some(k) => checks[k].push(r.clone()),
            }
        }
        Plan { model, p, bound, order, checks }
    }

    fn root_state(&self, m0: &GraphMorphism) -> State {
        let image = m0.image();
        State {
            used: image.iter().cloned().collect(),
            reps: vec![Rep { id: ReplicaId::root(self.p.root_var()), part: 0, m: m0.clone(), image }],
            assignment: ReplicaAssignment::new(),
            beyond: false,
        }
    }

    fn stage<F>(&self, k: usize, st: &mut State, visit: &mut F) -> ControlFlow<()>
    where
        F: FnMut(&State) -> ControlFlow<()>,
    {
        if k == self.order.len() {
            return visit(st);
        }
        let c = self.order[k];
        let part = &self.p.parts[c];
        let parent = part.parent.expect("non-root part");
        let emb = part.embedding.clone().unwrap_or_default();
        let parents: Vec<usize> = (0..st.reps.len()).filter(|&i| st.reps[i].part == parent).collect();

        let mut cands: Vec<Vec<Candidate>> = Vec::with_capacity(parents.len());
        for &r in &parents {
            let rep = &st.reps[r];
            let found = transfer(&rep.m, &emb)
                .map(|seed| find_injective_morphisms(&part.graph, self.model, &seed))
                .unwrap_or_default();
            let mut list = Vec::new();
            let mut distinct = HashSet::new();
            for m in found {
                let image = m.image();
                let new: Vec<ElementId> = image.difference(&rep.image).cloned().collect();
                if new.iter().any(|e| st.used.contains(e)) {
                    continue;
                }
                distinct.insert(new.clone());
                list.push(Candidate { m, image, new });
            }
            if distinct.len() as u64 > self.bound {
                st.beyond = true;
            }
            cands.push(list);
        }
        let most = cands.iter().map(Vec::len).min().unwrap_or(usize::MAX) as u64;

        for n in 0..=self.bound {
            if !parents.is_empty() && n > most {
                break;
            }
            st.assignment.set(part.name.clone(), n);
            if !self.checks[k].iter().all(|r| r.evaluate(&st.assignment).unwrap_or(false)) {
                continue;
            }
            self.choose(k, &parents, &cands, 0, n, 0, 0, st, visit)?;
        }
        ControlFlow::Continue(())
    }

    /// Pick `n` pairwise disjoint candidates for every parent replica, as
    /// increasing index combinations.
    #[allow(clippy::too_many_arguments)]
    fn choose<F>(
        &self,
        k: usize,
        parents: &[usize],
        cands: &[Vec<Candidate>],
        pi: usize,
        n: u64,
        start: usize,
        picked: u64,
        st: &mut State,
        visit: &mut F,
    ) -> ControlFlow<()>
    where
        F: FnMut(&State) -> ControlFlow<()>,
    {
        if pi == parents.len() {
            return self.stage(k + 1, st, visit);
        }
        if picked == n {
            return self.choose(k, parents, cands, pi + 1, n, 0, 0, st, visit);
        }
        let list = &cands[pi];
        let c = self.order[k];
        for (ci, cand) in list.iter().enumerate().skip(start) {
            if ((list.len() - ci) as u64) < n - picked {
                break;
            }
            if cand.new.iter().any(|e| st.used.contains(e)) {
                continue;
            }
            let mut path = st.reps[parents[pi]].id.path.clone();
            path.push(picked);
            st.used.extend(cand.new.iter().cloned());
            st.reps.push(Rep {
                id: ReplicaId { part: self.p.parts[c].name.clone(), path },
                part: c,
                m: cand.m.clone(),
                image: cand.image.clone(),
            });
            let flow = self.choose(k, parents, cands, pi, n, ci + 1, picked + 1, st, visit);
            st.reps.pop();
            for e in &cand.new {
                st.used.remove(e);
            }
            flow?;
        }
        ControlFlow::Continue(())
    }
}

#[derive(Default)]
struct ExpansionCache(HashMap<String, Arc<Expansion>>);

impl ExpansionCache {
    fn get(&mut self, p: &Pattern, a: &ReplicaAssignment) -> Result<Arc<Expansion>, MatchError> {
        let key = a.to_string();
        if let Some(e) = self.0.get(&key) {
            return Ok(e.clone());
        }
        let e = Arc::new(expand(p, a)?);
        self.0.insert(key, e.clone());
        Ok(e)
    }
}

/// Glue the per-replica matches into one embedding of the expansion.
fn build(p: &Pattern, expansion: &Expansion, st: &State) -> Occurrence {
    let by_id: BTreeMap<&ReplicaId, &Rep> = st.reps.iter().map(|r| (&r.id, r)).collect();
    let mut emb = GraphMorphism::empty();
    for (id, inj) in expansion.replicas.iter().zip(&expansion.injections) {
        let Some(rep) = by_id.get(id) else { continue };
        for (x, y) in &inj.node_map {
            if let Some(h) = rep.m.node_map.get(x) {
                emb.node_map.insert(y.clone(), h.clone());
            }
        }
        for (x, y) in &inj.edge_map {
            if let Some(h) = rep.m.edge_map.get(x) {
                emb.edge_map.insert(y.clone(), h.clone());
            }
        }
        for (v, val) in &inj.var_subst {
            if let (AttributeValue::Var(w), Some(hv)) = (val, rep.m.var_subst.get(v)) {
                emb.var_subst.insert(w.name.clone(), hv.clone());
            }
        }
    }
    occurrence_from(p, expansion, emb)
}

struct RootResult {
    occurrences: Vec<Occurrence>,
    beyond: bool,
    capped: bool,
}

fn grow_root(
    plan: &Plan<'_>,
    m0: &GraphMorphism,
    first_only: bool,
    cap: Option<usize>,
    enforce: bool,
) -> Result<RootResult, MatchError> {
    let mut st = plan.root_state(m0);
    let mut cache = ExpansionCache::default();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut err = None;
    let mut capped = false;
    let _ = plan.stage(0, &mut st, &mut |s: &State| {
        let image: Image = s.reps.iter().flat_map(|r| r.image.iter().cloned()).collect();
        if !first_only && seen.contains(&image) {
            return ControlFlow::Continue(());
        }
        if enforce && !constraints::violations(plan.model, plan.p, &s.replica_matches(), true).is_empty() {
            return ControlFlow::Continue(());
        }
        let e = match cache.get(plan.p, &s.assignment) {
            Ok(e) => e,
            Err(e) => {
                err = Some(e);
                return ControlFlow::Break(());
            }
        };
        seen.insert(image);
        out.push(build(plan.p, &e, s));
        if first_only {
            return ControlFlow::Break(());
        }
        if cap.is_some_and(|c| out.len() >= c) {
            capped = true;
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(RootResult { occurrences: out, beyond: st.beyond, capped })
}

pub(super) fn satisfy(model: &TypedGraph, p: &Pattern, bound: u64) -> Result<Satisfaction, MatchError> {
    let roots = find_injective_morphisms(&p.root().graph, model, &GraphMorphism::empty());
    let plan = Plan::new(model, p, bound);
    let results: Vec<Result<RootResult, MatchError>> =
        roots.par_iter().map(|m0| grow_root(&plan, m0, true, None, true)).collect();
    let mut beyond = false;
    for r in results {
        let r = r?;
        beyond |= r.beyond;
        if let Some(w) = r.occurrences.into_iter().next() {
            return Ok(Satisfaction { verdict: Verdict::Satisfied, witness: Some(w), root_matches: roots.len() });
        }
    }
    let verdict = if !roots.is_empty() && (beyond || !feasible_within(p, bound)) {
        Verdict::Inconclusive
    } else {
        Verdict::NotSatisfied
    };
    Ok(Satisfaction { verdict, witness: None, root_matches: roots.len() })
}

pub(super) fn find_all(
    model: &TypedGraph,
    p: &Pattern,
    bound: u64,
    cap: Option<usize>,
    enforce: bool,
) -> Result<Matches, MatchError> {
    let roots = find_injective_morphisms(&p.root().graph, model, &GraphMorphism::empty());
    let plan = Plan::new(model, p, bound);
    let results: Vec<Result<RootResult, MatchError>> =
        roots.par_iter().map(|m0| grow_root(&plan, m0, false, cap, enforce)).collect();
    let mut by_image: BTreeMap<Image, Occurrence> = BTreeMap::new();
    let mut out = Matches::default();
    for r in results {
        let r = r?;
        out.beyond_bound |= r.beyond;
        out.truncated |= r.capped;
        for o in r.occurrences {
            by_image.entry(o.image()).or_insert(o);
        }
    }
    out.occurrences = by_image.into_values().collect();
    if let Some(c) = cap {
        if out.occurrences.len() > c {
            out.occurrences.truncate(c);
            out.truncated = true;
        }
    }
    Ok(out)
}
