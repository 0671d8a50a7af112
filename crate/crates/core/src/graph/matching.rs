use std::collections::{BTreeMap, HashMap};
use std::ops::ControlFlow;

use super::morphism::GraphMorphism;
use super::typed::{Edge, Node, NodeId, TypedGraph};
use super::value::{AttributeValue, Atom};

/// All total injective morphisms `pat -> host` extending `seed`, sorted by
/// their node map (then edge map, then substitution).
///
/// An inconsistent seed yields no morphisms.
pub fn find_injective_morphisms(pat: &TypedGraph, host: &TypedGraph, seed: &GraphMorphism) -> Vec<GraphMorphism> {
    let mut out = Vec::new();
    let _ = for_each_injective_morphism(pat, host, seed, |m| {
        out.push(m);
        ControlFlow::Continue(())
    });
    out.sort();
    out
}

/// First morphism in search order, if any.
pub fn find_first_injective_morphism(
    pat: &TypedGraph,
    host: &TypedGraph,
    seed: &GraphMorphism,
) -> Option<GraphMorphism> {
    let mut found = None;
    let _ = for_each_injective_morphism(pat, host, seed, |m| {
        found = Some(m);
        ControlFlow::Break(())
    });
    found
}

/// Stream morphisms to `visit` in search order until it breaks. Returns
/// `Break` when the visitor stopped the search.
pub fn for_each_injective_morphism<F>(pat: &TypedGraph, host: &TypedGraph, seed: &GraphMorphism, mut visit: F) -> ControlFlow<()>
where
    F: FnMut(GraphMorphism) -> ControlFlow<()>,
{
    if !pat.same_metamodel(host) {
        return ControlFlow::Continue(());
    }
    let Some(mut search) = Search::new(pat, host, seed) else {
        return ControlFlow::Continue(());
    };
    search.nodes(0, &mut visit)
}

struct Search<'a> {
    pat_nodes: Vec<&'a Node>,
    pat_edges: Vec<&'a Edge>,
    host_nodes: Vec<&'a Node>,
    host_edges: Vec<&'a Edge>,
    /// incident pattern edges per pattern node
    incident: Vec<Vec<usize>>,
    /// host edges per (source, target) host node pair
    host_adj: HashMap<(usize, usize), Vec<usize>>,
    host_by_type: HashMap<&'a str, Vec<usize>>,
    order: Vec<usize>,
    /// number of leading entries of `order` fixed by the seed
    seeded: usize,
    node_map: Vec<Option<usize>>,
    node_used: Vec<bool>,
    edge_map: Vec<Option<usize>>,
    edge_used: Vec<bool>,
    seeded_edges: Vec<bool>,
    subst: BTreeMap<String, AttributeValue>,
    trail: Vec<String>,
    atoms: &'a [Atom],
}

impl<'a> Search<'a> {
    fn new(pat: &'a TypedGraph, host: &'a TypedGraph, seed: &GraphMorphism) -> Option<Self> {
        let pat_nodes: Vec<&Node> = pat.nodes().collect();
        let pat_edges: Vec<&Edge> = pat.edges().collect();
        let host_nodes: Vec<&Node> = host.nodes().collect();
        let host_edges: Vec<&Edge> = host.edges().collect();
        let p_index: HashMap<&str, usize> = pat_nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
        let h_index: HashMap<&str, usize> = host_nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();

        let mut incident = vec![Vec::new(); pat_nodes.len()];
        for (i, e) in pat_edges.iter().enumerate() {
            let s = *p_index.get(e.source.as_str())?;
            let t = *p_index.get(e.target.as_str())?;
            incident[s].push(i);
            if t != s {
                incident[t].push(i);
            }
        }
        let mut host_adj: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (i, e) in host_edges.iter().enumerate() {
            if let (Some(&s), Some(&t)) = (h_index.get(e.source.as_str()), h_index.get(e.target.as_str())) {
                host_adj.entry((s, t)).or_default().push(i);
            }
        }
        let mut host_by_type: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, n) in host_nodes.iter().enumerate() {
            host_by_type.entry(n.ty.as_str()).or_default().push(i);
        }

        let mut s = Search {
            node_map: vec![None; pat_nodes.len()],
            node_used: vec![false; host_nodes.len()],
            edge_map: vec![None; pat_edges.len()],
            edge_used: vec![false; host_edges.len()],
            seeded_edges: vec![false; pat_edges.len()],
            pat_nodes,
            pat_edges,
            host_nodes,
            host_edges,
            incident,
            host_adj,
            host_by_type,
            order: Vec::new(),
            seeded: 0,
            subst: BTreeMap::new(),
            trail: Vec::new(),
            atoms: pat.atoms(),
        };

        // Seed variables first so node attributes unify against them.
        for (v, val) in &seed.var_subst {
            s.subst.insert(v.clone(), val.clone());
        }
        let h_edge_index: HashMap<&str, usize> =
            s.host_edges.iter().enumerate().map(|(i, e)| (e.id.as_str(), i)).collect();
        for (p, h) in &seed.node_map {
            let pi = *p_index.get(p.as_str())?;
            let hi = *h_index.get(h.as_str())?;
            if s.node_used[hi] || !s.node_compatible(pi, hi) {
                return None;
            }
            s.node_map[pi] = Some(hi);
            s.node_used[hi] = true;
            s.order.push(pi);
        }
        s.seeded = s.order.len();
        let p_edge_index: HashMap<&str, usize> =
            s.pat_edges.iter().enumerate().map(|(i, e)| (e.id.as_str(), i)).collect();
        for (p, h) in &seed.edge_map {
            let pi = *p_edge_index.get(p.as_str())?;
            let hi = *h_edge_index.get(h.as_str())?;
            let (pe, he) = (s.pat_edges[pi], s.host_edges[hi]);
            let src = s.node_map[p_index[pe.source.as_str()]]?;
            let tgt = s.node_map[p_index[pe.target.as_str()]]?;
            if s.edge_used[hi] || pe.ty != he.ty || s.host_nodes[src].id != he.source || s.host_nodes[tgt].id != he.target {
                return None;
            }
            s.edge_map[pi] = Some(hi);
            s.edge_used[hi] = true;
            s.seeded_edges[pi] = true;
        }
        if s.atoms_violated() {
            return None;
        }
        s.plan_order(&p_index);
        Some(s)
    }

    /// Remaining pattern nodes in matching order: most edges into the
    /// already-ordered set first, then higher degree, then smaller id.
    fn plan_order(&mut self, p_index: &HashMap<&str, usize>) {
        let n = self.pat_nodes.len();
        let mut placed = vec![false; n];
        for &i in &self.order {
            placed[i] = true;
        }
        while self.order.len() < n {
            let mut best: Option<(usize, usize, usize)> = None;
            for i in (0..n).filter(|&i| !placed[i]) {
                let links = self.incident[i]
                    .iter()
                    .filter(|&&e| {
                        let pe = self.pat_edges[e];
                        let other = if pe.source == self.pat_nodes[i].id { &pe.target } else { &pe.source };
                        placed[p_index[other.as_str()]]
                    })
                    .count();
                let degree = self.incident[i].len();
                // ties go to the smaller id; pat_nodes is sorted by id
                if best.is_none_or(|(_, bl, bd)| (links, degree) > (bl, bd)) {
                    best = Some((i, links, degree));
                }
            }
            let (i, _, _) = best.expect("an unplaced node exists");
            placed[i] = true;
            self.order.push(i);
        }
    }

    fn node_compatible(&mut self, p: usize, h: usize) -> bool {
        let (pn, hn) = (self.pat_nodes[p], self.host_nodes[h]);
        if pn.ty != hn.ty {
            return false;
        }
        let mark = self.trail.len();
        for (attr, pv) in &pn.attrs {
            let Some(hv) = hn.attrs.get(attr) else {
                self.undo(mark);
                return false;
            };
            let ok = match pv {
                AttributeValue::Const(_) => pv == hv,
                AttributeValue::Var(v) => match self.subst.get(&v.name) {
                    Some(bound) => bound == hv,
                    None => {
                        if !hv.fits(&v.sort) {
                            false
                        } else {
                            self.subst.insert(v.name.clone(), hv.clone());
                            self.trail.push(v.name.clone());
                            true
                        }
                    }
                },
            };
            if !ok {
                self.undo(mark);
                return false;
            }
        }
        true
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().expect("trail entry");
            self.subst.remove(&v);
        }
    }

    fn atoms_violated(&self) -> bool {
        self.atoms.iter().any(|a| a.evaluate_with(&self.subst) == Some(false))
    }

    /// Every pattern edge between `p` and an already mapped node must have
    /// enough same-typed host edges between the images.
    fn edges_feasible(&self, p: usize) -> bool {
        let mut need: HashMap<(usize, usize, &str), usize> = HashMap::new();
        for &e in &self.incident[p] {
            let pe = self.pat_edges[e];
            let s = self.mapped(&pe.source);
            let t = self.mapped(&pe.target);
            if let (Some(s), Some(t)) = (s, t) {
                *need.entry((s, t, pe.ty.as_str())).or_default() += 1;
            }
        }
        need.into_iter().all(|((s, t, ty), count)| {
            let avail = self
                .host_adj
                .get(&(s, t))
                .map_or(0, |es| es.iter().filter(|&&h| self.host_edges[h].ty == ty).count());
            avail >= count
        })
    }

    fn mapped(&self, id: &NodeId) -> Option<usize> {
        // pat_nodes is sorted by id
        let i = self.pat_nodes.binary_search_by(|n| n.id.cmp(id)).ok()?;
        self.node_map[i]
    }

    fn nodes<F>(&mut self, depth: usize, visit: &mut F) -> ControlFlow<()>
    where
        F: FnMut(GraphMorphism) -> ControlFlow<()>,
    {
        if depth == self.order.len() {
            return self.edges(0, visit);
        }
        if depth < self.seeded {
            return self.nodes(depth + 1, visit);
        }
        let p = self.order[depth];
        let ty = self.pat_nodes[p].ty.as_str();
        let candidates = self.host_by_type.get(ty).cloned().unwrap_or_default();
        for h in candidates {
            if self.node_used[h] {
                continue;
            }
            let mark = self.trail.len();
            if !self.node_compatible(p, h) {
                continue;
            }
            self.node_map[p] = Some(h);
            self.node_used[h] = true;
            if self.edges_feasible(p) && !self.atoms_violated() {
                self.nodes(depth + 1, visit)?;
            }
            self.node_map[p] = None;
            self.node_used[h] = false;
            self.undo(mark);
        }
        ControlFlow::Continue(())
    }

    fn edges<F>(&mut self, i: usize, visit: &mut F) -> ControlFlow<()>
    where
        F: FnMut(GraphMorphism) -> ControlFlow<()>,
    {
        if i == self.pat_edges.len() {
            return visit(self.emit());
        }
        if self.seeded_edges[i] {
            return self.edges(i + 1, visit);
        }
        let pe = self.pat_edges[i];
        let (Some(s), Some(t)) = (self.mapped(&pe.source), self.mapped(&pe.target)) else {
            return ControlFlow::Continue(());
        };
        let candidates = self.host_adj.get(&(s, t)).cloned().unwrap_or_default();
        for h in candidates {
            if self.edge_used[h] || self.host_edges[h].ty != pe.ty {
                continue;
            }
            self.edge_map[i] = Some(h);
            self.edge_used[h] = true;
            self.edges(i + 1, visit)?;
            self.edge_map[i] = None;
            self.edge_used[h] = false;
        }
        ControlFlow::Continue(())
    }

    fn emit(&self) -> GraphMorphism {
        let node_map = self
            .node_map
            .iter()
            .enumerate()
            .map(|(p, h)| (self.pat_nodes[p].id.clone(), self.host_nodes[h.expect("total")].id.clone()))
            .collect();
        let edge_map = self
            .edge_map
            .iter()
            .enumerate()
            .map(|(p, h)| (self.pat_edges[p].id.clone(), self.host_edges[h.expect("total")].id.clone()))
            .collect();
        GraphMorphism { node_map, edge_map, var_subst: self.subst.clone() }
    }
}
