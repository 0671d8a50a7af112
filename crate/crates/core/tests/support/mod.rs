//! Independent reference implementations used by the integration tests and
//! the CLI acceptance suite. Nothing here calls the code it checks, except
//! to obtain the value under test.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use patternforge::expansion::Expansion;
use patternforge::graph::{
    Atom, AttributeValue, CmpOp, Edge, GraphMorphism, Metamodel, Node, Operand, Sort, TypedGraph, Value,
};
use patternforge::pattern::{Pattern, VariablePart};
use patternforge::solver::{CountRelation, CountTerm, EquationSystem, RelOp, ReplicaAssignment};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

// ---------------------------------------------------------------- solver

pub fn random_term(rng: &mut StdRng, vars: &[&str], depth: u32) -> CountTerm {
    if depth == 0 || rng.gen_bool(0.5) {
        return if rng.gen_bool(0.6) {
            CountTerm::var(*vars.choose(rng).expect("vars"))
        } else {
            CountTerm::Const(rng.gen_range(0..6))
        };
    }
    let l = Box::new(random_term(rng, vars, depth - 1));
    let r = Box::new(random_term(rng, vars, depth - 1));
    match rng.gen_range(0..3) {
        0 => CountTerm::Add(l, r),
        1 => CountTerm::Sub(l, r),
        _ => CountTerm::Mul(l, r),
    }
}

/// Up to 4 variables and 5 relations.
pub fn random_system(rng: &mut StdRng) -> EquationSystem {
    let all = ["a", "b", "c", "d"];
    let vars = &all[..rng.gen_range(1..=4)];
    let ops = [RelOp::Lt, RelOp::Le, RelOp::Eq, RelOp::Gt, RelOp::Ge];
    let n = rng.gen_range(1..=5);
    let rels = (0..n)
        .map(|_| CountRelation::new(random_term(rng, vars, 2), *ops.choose(rng).expect("ops"), random_term(rng, vars, 2)))
        .collect();
    EquationSystem::new(rels)
}

fn eval_term(t: &CountTerm, env: &BTreeMap<String, i128>) -> i128 {
    match t {
        CountTerm::Const(c) => i128::from(*c),
        CountTerm::Var(v) => env[v],
        CountTerm::Add(a, b) => eval_term(a, env) + eval_term(b, env),
        CountTerm::Sub(a, b) => eval_term(a, env) - eval_term(b, env),
        CountTerm::Mul(a, b) => eval_term(a, env) * eval_term(b, env),
    }
}

fn holds(r: &CountRelation, env: &BTreeMap<String, i128>) -> bool {
    let (l, rr) = (eval_term(&r.lhs, env), eval_term(&r.rhs, env));
    match r.rel {
        RelOp::Lt => l < rr,
        RelOp::Le => l <= rr,
        RelOp::Eq => l == rr,
        RelOp::Gt => l > rr,
        RelOp::Ge => l >= rr,
    }
}

/// Every assignment in `0..=bound`, by nested counting.
pub fn brute_solutions(sys: &EquationSystem, bound: u64) -> BTreeSet<ReplicaAssignment> {
    let vars = sys.variables().to_vec();
    let width = bound + 1;
    let total = width.pow(vars.len() as u32);
    let mut out = BTreeSet::new();
    for code in 0..total {
        let mut rest = code;
        let mut env = BTreeMap::new();
        let mut a = ReplicaAssignment::new();
        for v in &vars {
            let x = rest % width;
            rest /= width;
            env.insert(v.clone(), i128::from(x));
            a.set(v.clone(), x);
        }
        if sys.relations().iter().all(|r| holds(r, &env)) {
            out.insert(a);
        }
    }
    out
}

/// Solutions no other solution is component-wise below.
pub fn dominance_filter(sols: &BTreeSet<ReplicaAssignment>) -> BTreeSet<ReplicaAssignment> {
    let below = |x: &ReplicaAssignment, y: &ReplicaAssignment| x != y && x.iter().all(|(k, v)| v <= y.get(k).unwrap_or(0));
    sols.iter().filter(|s| !sols.iter().any(|o| below(o, s))).cloned().collect()
}

// ---------------------------------------------------------------- colimit

fn class_node(id: &str, name: AttributeValue, abs: AttributeValue) -> Node {
    Node::new(id, "Class").with("name", name).with("abstract", abs)
}

fn fresh_attr(rng: &mut StdRng, prefix: &str, k: usize, boolean: bool) -> AttributeValue {
    match (boolean, rng.gen_range(0..3)) {
        (false, 0) => AttributeValue::str(format!("c{k}")),
        (true, 0) => AttributeValue::bool(rng.gen()),
        (false, _) => AttributeValue::var(format!("{prefix}N{k}"), Sort::String),
        (true, _) => AttributeValue::var(format!("{prefix}A{k}"), Sort::Boolean),
    }
}

/// A random tree of at most 3 levels whose part graphs have at most 4
/// nodes, with an assignment of at most 3 replicas per part. Inherited
/// elements are renamed in the child and variables are sometimes renamed
/// or specialized to constants along the embedding.
pub fn random_part_tree(rng: &mut StdRng) -> (Pattern, ReplicaAssignment) {
    let mm = Metamodel::class_diagram();
    let edge_types = ["assoc", "inherits", "aggregates"];
    let mut root = TypedGraph::new(mm.clone());
    let n_root = rng.gen_range(1..=2);
    for k in 0..n_root {
        let name = fresh_attr(rng, "r", k, false);
        let abs = fresh_attr(rng, "r", k, true);
        root.add_node(class_node(&format!("r{k}"), name, abs)).unwrap();
    }
    if rng.gen_bool(0.5) {
        let s = format!("r{}", rng.gen_range(0..n_root));
        let t = format!("r{}", rng.gen_range(0..n_root));
        root.add_edge(Edge::new("re0", *edge_types.choose(rng).unwrap(), s, t)).unwrap();
    }
    let mut parts = vec![VariablePart {
        name: "P".into(),
        graph: root,
        parent: None,
        embedding: None,
        role_labels: BTreeMap::new(),
    }];
    let mut depth = vec![1usize];
    let n_parts = rng.gen_range(1..=4);
    for pi in 1..n_parts {
        let candidates: Vec<usize> = (0..parts.len()).filter(|&i| depth[i] < 3 && parts[i].graph.node_count() < 4).collect();
        let Some(&parent) = candidates.choose(rng) else { break };
        let (graph, emb) = random_child(rng, &parts[parent].graph, pi, &edge_types);
        parts.push(VariablePart {
            name: format!("p{pi}"),
            graph,
            parent: Some(parent),
            embedding: Some(emb),
            role_labels: BTreeMap::new(),
        });
        depth.push(depth[parent] + 1);
    }
    let mut a = ReplicaAssignment::new();
    for p in &parts[1..] {
        a.set(p.name.clone(), rng.gen_range(0..=3));
    }
    let pattern = Pattern {
        name: "P".into(),
        title: "P".into(),
        intent: String::new(),
        metamodel: mm,
        roles: Vec::new(),
        parts,
        equations: EquationSystem::default(),
        constraints: Vec::new(),
    };
    (pattern, a)
}

fn random_child(rng: &mut StdRng, parent: &TypedGraph, pi: usize, edge_types: &[&str]) -> (TypedGraph, GraphMorphism) {
    let mut g = TypedGraph::new(parent.metamodel().clone());
    let mut emb = GraphMorphism::empty();
    // one decision per parent variable: keep, rename or specialize
    for (v, sort) in parent.variables() {
        let image = match rng.gen_range(0..4) {
            0 => AttributeValue::var(format!("{v}_{pi}"), sort.clone()),
            1 => match sort {
                Sort::Boolean => AttributeValue::bool(true),
                _ => AttributeValue::str(format!("k_{v}")),
            },
            _ => AttributeValue::var(v.clone(), sort.clone()),
        };
        emb.var_subst.insert(v, image);
    }
    for n in parent.nodes() {
        let id = format!("{}'{pi}", n.id.as_str());
        let attrs = n.attrs.iter().map(|(k, v)| (k.clone(), emb.apply(v).expect("total substitution"))).collect();
        g.add_node(Node { id: id.as_str().into(), ty: n.ty.clone(), attrs }).unwrap();
        emb.node_map.insert(n.id.clone(), id.as_str().into());
    }
    for e in parent.edges() {
        let id = format!("{}'{pi}", e.id.as_str());
        let s = emb.node_map[&e.source].clone();
        let t = emb.node_map[&e.target].clone();
        g.add_edge(Edge::new(id.as_str(), e.ty.clone(), s, t)).unwrap();
        emb.edge_map.insert(e.id.clone(), id.as_str().into());
    }
    let room = 4 - parent.node_count();
    let new_nodes = rng.gen_range(1..=room.min(2));
    let inherited_vars: Vec<AttributeValue> = emb.var_subst.values().filter(|v| v.as_var().is_some()).cloned().collect();
    for k in 0..new_nodes {
        let mut name = fresh_attr(rng, &format!("p{pi}"), k, false);
        if rng.gen_bool(0.25) {
            if let Some(shared) = inherited_vars.iter().find(|v| v.as_var().is_some_and(|x| x.sort == Sort::String)) {
                name = shared.clone();
            }
        }
        let abs = fresh_attr(rng, &format!("p{pi}"), k, true);
        g.add_node(class_node(&format!("n{pi}_{k}"), name, abs)).unwrap();
    }
    let ids: Vec<String> = g.nodes().map(|n| n.id.as_str().to_string()).collect();
    let fresh: Vec<String> = (0..new_nodes).map(|k| format!("n{pi}_{k}")).collect();
    for k in 0..rng.gen_range(1..=2) {
        let s = fresh.choose(rng).unwrap().clone();
        let t = ids.choose(rng).unwrap().clone();
        let (s, t) = if rng.gen_bool(0.5) { (s, t) } else { (t, s) };
        g.add_edge(Edge::new(format!("e{pi}_{k}"), *edge_types.choose(rng).unwrap(), s, t)).unwrap();
    }
    (g, emb)
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let p = self.0[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.0[x] = r;
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[b.max(a)] = a.min(b);
        }
    }
}

/// An attribute value of the oracle graph: a constant or a variable class.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum OVal {
    Const(Value),
    Var(usize),
}

/// Disjoint union of one copy of each replica's part graph, quotiented by
/// the equivalence the embeddings generate.
pub struct NaiveColimit {
    /// (part name, path) of each replica.
    replicas: Vec<(String, Vec<u64>)>,
    node_class: BTreeMap<(usize, String), usize>,
    edge_class: BTreeMap<(usize, String), usize>,
    node_info: BTreeMap<usize, (String, BTreeMap<String, OVal>)>,
    edge_info: BTreeMap<usize, (String, usize, usize)>,
}

pub fn naive_colimit(p: &Pattern, a: &ReplicaAssignment) -> Result<NaiveColimit, String> {
    // replica tree
    let mut replicas: Vec<(usize, Option<usize>, Vec<u64>)> = vec![(0, None, Vec::new())];
    let mut i = 0;
    while i < replicas.len() {
        let (part, _, path) = replicas[i].clone();
        for (c, cp) in p.parts.iter().enumerate() {
            if cp.parent == Some(part) {
                for k in 0..a.get(&cp.name).unwrap_or(0) {
                    let mut path = path.clone();
                    path.push(k);
                    replicas.push((c, Some(i), path));
                }
            }
        }
        i += 1;
    }
    // element and variable copies
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut vars = Vec::new();
    for (r, (part, _, _)) in replicas.iter().enumerate() {
        let g = &p.parts[*part].graph;
        nodes.extend(g.nodes().map(|n| (r, n.id.as_str().to_string())));
        edges.extend(g.edges().map(|e| (r, e.id.as_str().to_string())));
        vars.extend(g.variables().into_keys().map(|v| (r, v)));
    }
    let idx = |v: &[(usize, String)]| -> BTreeMap<(usize, String), usize> { v.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect() };
    let (ni, ei, vi) = (idx(&nodes), idx(&edges), idx(&vars));
    let mut nuf = UnionFind((0..nodes.len()).collect());
    let mut euf = UnionFind((0..edges.len()).collect());
    let mut vuf = UnionFind((0..vars.len()).collect());
    let mut pins: Vec<(usize, Value)> = Vec::new();
    for (c, (part, parent, _)) in replicas.iter().enumerate() {
        let Some(r) = parent else { continue };
        let emb = p.parts[*part].embedding.as_ref().ok_or("missing embedding")?;
        for (x, y) in &emb.node_map {
            nuf.union(ni[&(*r, x.as_str().to_string())], ni[&(c, y.as_str().to_string())]);
        }
        for (x, y) in &emb.edge_map {
            euf.union(ei[&(*r, x.as_str().to_string())], ei[&(c, y.as_str().to_string())]);
        }
        for (v, img) in &emb.var_subst {
            let Some(&pv) = vi.get(&(*r, v.clone())) else { continue };
            match img {
                AttributeValue::Var(w) => vuf.union(pv, vi[&(c, w.name.clone())]),
                AttributeValue::Const(k) => pins.push((pv, k.clone())),
            }
        }
    }
    let mut pinned: BTreeMap<usize, Value> = BTreeMap::new();
    for (v, k) in pins {
        let root = vuf.find(v);
        if let Some(old) = pinned.insert(root, k.clone()) {
            if old != k {
                return Err(format!("conflicting constants {old} and {k}"));
            }
        }
    }
    let mut oval = |r: usize, v: &AttributeValue| -> OVal {
        match v {
            AttributeValue::Const(k) => OVal::Const(k.clone()),
            AttributeValue::Var(x) => {
                let root = vuf.find(vi[&(r, x.name.clone())]);
                pinned.get(&root).map_or(OVal::Var(root), |k| OVal::Const(k.clone()))
            }
        }
    };
    let mut node_class = BTreeMap::new();
    let mut node_info: BTreeMap<usize, (String, BTreeMap<String, OVal>)> = BTreeMap::new();
    for (k, (r, id)) in nodes.iter().enumerate() {
        let class = nuf.find(k);
        node_class.insert((*r, id.clone()), class);
        let n = p.parts[replicas[*r].0].graph.node(id).expect("node");
        let attrs: BTreeMap<String, OVal> = n.attrs.iter().map(|(a, v)| (a.clone(), oval(*r, v))).collect();
        let info = (n.ty.clone(), attrs);
        match node_info.get(&class) {
            Some(old) if *old != info => return Err(format!("copies of node class {class} disagree")),
            Some(_) => {}
            None => {
                node_info.insert(class, info);
            }
        }
    }
    let mut edge_class = BTreeMap::new();
    let mut edge_info = BTreeMap::new();
    for (k, (r, id)) in edges.iter().enumerate() {
        let class = euf.find(k);
        edge_class.insert((*r, id.clone()), class);
        let e = p.parts[replicas[*r].0].graph.edge(id).expect("edge");
        let s = node_class[&(*r, e.source.as_str().to_string())];
        let t = node_class[&(*r, e.target.as_str().to_string())];
        let info = (e.ty.clone(), s, t);
        match edge_info.get(&class) {
            Some(old) if *old != info => return Err(format!("copies of edge class {class} disagree")),
            Some(_) => {}
            None => {
                edge_info.insert(class, info);
            }
        }
    }
    Ok(NaiveColimit {
        replicas: replicas.iter().map(|(part, _, path)| (p.parts[*part].name.clone(), path.clone())).collect(),
        node_class,
        edge_class,
        node_info,
        edge_info,
    })
}

/// Check that `e.graph` and the oracle are isomorphic, using the replica
/// injections as the candidate bijection.
pub fn isomorphic_to_oracle(e: &Expansion, o: &NaiveColimit) -> Result<(), String> {
    let rep_index: BTreeMap<(String, Vec<u64>), usize> = o.replicas.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
    if e.replicas.len() != o.replicas.len() {
        return Err(format!("{} replicas vs {}", e.replicas.len(), o.replicas.len()));
    }
    let mut fnode: BTreeMap<String, usize> = BTreeMap::new();
    let mut fedge: BTreeMap<String, usize> = BTreeMap::new();
    for (i, rid) in e.replicas.iter().enumerate() {
        let r = *rep_index.get(&(rid.part.clone(), rid.path.clone())).ok_or(format!("unknown replica {rid}"))?;
        for (local, img) in &e.injections[i].node_map {
            let class = o.node_class[&(r, local.as_str().to_string())];
            if *fnode.entry(img.as_str().to_string()).or_insert(class) != class {
                return Err(format!("node {img} maps to two classes"));
            }
        }
        for (local, img) in &e.injections[i].edge_map {
            let class = o.edge_class[&(r, local.as_str().to_string())];
            if *fedge.entry(img.as_str().to_string()).or_insert(class) != class {
                return Err(format!("edge {img} maps to two classes"));
            }
        }
    }
    let g = &e.graph;
    if fnode.len() != g.node_count() || fnode.len() != o.node_info.len() {
        return Err(format!("node counts {} / {} / {}", fnode.len(), g.node_count(), o.node_info.len()));
    }
    if fedge.len() != g.edge_count() || fedge.len() != o.edge_info.len() {
        return Err(format!("edge counts {} / {} / {}", fedge.len(), g.edge_count(), o.edge_info.len()));
    }
    if fnode.values().collect::<BTreeSet<_>>().len() != fnode.len() {
        return Err("node map is not injective".into());
    }
    if fedge.values().collect::<BTreeSet<_>>().len() != fedge.len() {
        return Err("edge map is not injective".into());
    }
    let mut var_fwd: BTreeMap<String, usize> = BTreeMap::new();
    let mut var_bwd: BTreeMap<usize, String> = BTreeMap::new();
    for n in g.nodes() {
        let (ty, attrs) = &o.node_info[&fnode[n.id.as_str()]];
        if &n.ty != ty || n.attrs.len() != attrs.len() {
            return Err(format!("node {} differs in type or attributes", n.id));
        }
        for (k, v) in &n.attrs {
            match (v, attrs.get(k)) {
                (AttributeValue::Const(a), Some(OVal::Const(b))) if a == b => {}
                (AttributeValue::Var(x), Some(OVal::Var(c))) => {
                    let f = var_fwd.entry(x.name.clone()).or_insert(*c);
                    let b = var_bwd.entry(*c).or_insert(x.name.clone());
                    if *f != *c || *b != x.name {
                        return Err(format!("variable {} is not renamed consistently", x.name));
                    }
                }
                (v, o) => return Err(format!("node {} attribute {k}: {v} vs {o:?}", n.id)),
            }
        }
    }
    for ed in g.edges() {
        let (ty, s, t) = &o.edge_info[&fedge[ed.id.as_str()]];
        if &ed.ty != ty || fnode[ed.source.as_str()] != *s || fnode[ed.target.as_str()] != *t {
            return Err(format!("edge {} differs", ed.id));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- matching

const NAMES: [&str; 3] = ["A", "B", "C"];
const VIS: [&str; 3] = ["public", "private", "protected"];

fn vis_sort() -> Sort {
    Sort::Enum(VIS.iter().map(|s| s.to_string()).collect())
}

fn random_host_node(rng: &mut StdRng, id: &str) -> Node {
    if rng.gen_bool(0.6) {
        Node::new(id, "Class")
            .with("name", AttributeValue::str(*NAMES.choose(rng).unwrap()))
            .with("abstract", AttributeValue::bool(rng.gen()))
    } else {
        Node::new(id, "Operation")
            .with("name", AttributeValue::str(*NAMES.choose(rng).unwrap()))
            .with("abstract", AttributeValue::bool(rng.gen()))
            .with("visibility", AttributeValue::enumeration(*VIS.choose(rng).unwrap()))
            .with("static", AttributeValue::bool(rng.gen()))
    }
}

fn random_edges(rng: &mut StdRng, g: &mut TypedGraph, max: usize, prefix: &str) {
    let ids: Vec<(String, String)> = g.nodes().map(|n| (n.id.as_str().to_string(), n.ty.clone())).collect();
    let mut k = 0;
    for _ in 0..max {
        let (s, st) = ids.choose(rng).unwrap().clone();
        let (t, tt) = ids.choose(rng).unwrap().clone();
        let ty = match (st.as_str(), tt.as_str()) {
            ("Class", "Class") => *["assoc", "inherits"].choose(rng).unwrap(),
            ("Class", "Operation") => "owns_op",
            _ => continue,
        };
        g.add_edge(Edge::new(format!("{prefix}{k}"), ty, s, t)).unwrap();
        k += 1;
    }
}

/// Host of up to 6 nodes; pattern of up to 4 nodes whose attributes are
/// constants, shared variables or absent, sometimes with an atom.
pub fn random_match_instance(rng: &mut StdRng) -> (TypedGraph, TypedGraph) {
    let mm: Arc<Metamodel> = Metamodel::class_diagram();
    let mut host = TypedGraph::new(mm.clone());
    for k in 0..rng.gen_range(1..=6) {
        host.add_node(random_host_node(rng, &format!("h{k}"))).unwrap();
    }
    let n_edges = rng.gen_range(0..=8);
    random_edges(rng, &mut host, n_edges, "he");
    let mut pat = TypedGraph::new(mm);
    if rng.gen_bool(0.5) {
        // generalize a random subgraph of the host
        let mut picked: Vec<&Node> = host.nodes().collect();
        picked.shuffle(rng);
        picked.truncate(rng.gen_range(1..=4));
        let mut ids = BTreeMap::new();
        for (k, h) in picked.iter().enumerate() {
            let id = format!("p{k}");
            ids.insert(h.id.as_str().to_string(), id.clone());
            let n = generalize(rng, &Node::new(id, h.ty.clone()), h);
            pat.add_node(n).unwrap();
        }
        let mut k = 0;
        for e in host.edges() {
            if let (Some(s), Some(t)) = (ids.get(e.source.as_str()), ids.get(e.target.as_str())) {
                if rng.gen_bool(0.7) {
                    pat.add_edge(Edge::new(format!("pe{k}"), e.ty.clone(), s.clone(), t.clone())).unwrap();
                    k += 1;
                }
            }
        }
    } else {
        for k in 0..rng.gen_range(1..=4) {
            let template = random_host_node(rng, &format!("p{k}"));
            let n = generalize(rng, &Node::new(format!("p{k}"), template.ty.clone()), &template);
            pat.add_node(n).unwrap();
        }
        let n_edges = rng.gen_range(0..=4);
        random_edges(rng, &mut pat, n_edges, "pe");
    }
    if rng.gen_bool(0.3) {
        let atom = if rng.gen_bool(0.5) {
            Atom::new(Operand::Var("S1".into()), CmpOp::Ne, Operand::Var("S2".into()))
        } else {
            Atom::new(Operand::Var("S1".into()), CmpOp::Eq, Operand::Const(Value::Str("A".into())))
        };
        pat.add_atom(atom);
    }
    (pat, host)
}

/// Copy of `template`'s attributes onto `n`, each kept, dropped or
/// replaced by a variable from a small shared pool.
fn generalize(rng: &mut StdRng, n: &Node, template: &Node) -> Node {
    let mut n = n.clone();
    for (a, v) in &template.attrs {
        let sort = match a.as_str() {
            "name" => Sort::String,
            "visibility" => vis_sort(),
            _ => Sort::Boolean,
        };
        let value = match rng.gen_range(0..4) {
            0 => continue,
            1 => v.clone(),
            _ => {
                let pool = match sort {
                    Sort::String => ["S1", "S2"],
                    Sort::Boolean => ["B1", "B2"],
                    _ => ["V1", "V2"],
                };
                AttributeValue::var(*pool.choose(rng).unwrap(), sort)
            }
        };
        n = n.with(a.clone(), value);
    }
    n
}

fn unify(pn: &Node, hn: &Node, subst: &mut BTreeMap<String, AttributeValue>) -> bool {
    if pn.ty != hn.ty {
        return false;
    }
    for (a, pv) in &pn.attrs {
        let Some(hv) = hn.attrs.get(a) else { return false };
        match pv {
            AttributeValue::Const(_) => {
                if pv != hv {
                    return false;
                }
            }
            AttributeValue::Var(v) => match subst.get(&v.name) {
                Some(b) if b != hv => return false,
                Some(_) => {}
                None => {
                    if !hv.fits(&v.sort) {
                        return false;
                    }
                    subst.insert(v.name.clone(), hv.clone());
                }
            },
        }
    }
    true
}

/// Every injective morphism, by trying all injective node maps and then
/// all injective edge assignments.
pub fn brute_force_morphisms(pat: &TypedGraph, host: &TypedGraph) -> Vec<GraphMorphism> {
    let pn: Vec<&Node> = pat.nodes().collect();
    let hn: Vec<&Node> = host.nodes().collect();
    let pe: Vec<&Edge> = pat.edges().collect();
    let he: Vec<&Edge> = host.edges().collect();
    let mut out = Vec::new();
    let mut node_maps = Vec::new();
    injective_maps(pn.len(), hn.len(), &mut Vec::new(), &mut node_maps);
    for nm in node_maps {
        let mut subst = BTreeMap::new();
        if !pn.iter().zip(&nm).all(|(p, &h)| unify(p, hn[h], &mut subst)) {
            continue;
        }
        if pat.atoms().iter().any(|a| a.evaluate_with(&subst) == Some(false)) {
            continue;
        }
        let node_of = |id: &str| nm[pn.iter().position(|n| n.id.as_str() == id).unwrap()];
        let options: Vec<Vec<usize>> = pe
            .iter()
            .map(|e| {
                (0..he.len())
                    .filter(|&j| {
                        he[j].ty == e.ty
                            && he[j].source.as_str() == hn[node_of(e.source.as_str())].id.as_str()
                            && he[j].target.as_str() == hn[node_of(e.target.as_str())].id.as_str()
                    })
                    .collect()
            })
            .collect();
        let mut choice = Vec::new();
        edge_choices(&options, &mut choice, &mut |c: &[usize]| {
            let mut m = GraphMorphism::empty();
            for (p, &h) in pn.iter().zip(&nm) {
                m.node_map.insert(p.id.clone(), hn[h].id.clone());
            }
            for (e, &h) in pe.iter().zip(c) {
                m.edge_map.insert(e.id.clone(), he[h].id.clone());
            }
            m.var_subst = subst.clone();
            out.push(m);
        });
    }
    out.sort();
    out
}

fn injective_maps(k: usize, n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for h in 0..n {
        if !cur.contains(&h) {
            cur.push(h);
            injective_maps(k, n, cur, out);
            cur.pop();
        }
    }
}

fn edge_choices(options: &[Vec<usize>], cur: &mut Vec<usize>, emit: &mut dyn FnMut(&[usize])) {
    if cur.len() == options.len() {
        emit(cur);
        return;
    }
    for &h in &options[cur.len()] {
        if !cur.contains(&h) {
            cur.push(h);
            edge_choices(options, cur, emit);
            cur.pop();
        }
    }
}
