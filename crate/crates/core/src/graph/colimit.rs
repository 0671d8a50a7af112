use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::morphism::GraphMorphism;
use super::typed::{Edge, EdgeId, Node, NodeId, TypedGraph};
use super::value::{AttributeValue, Sort, Value};
use super::GraphError;

/// Result of a pushout: the glued graph and the two coprojections.
#[derive(Debug, Clone)]
pub struct Pushout {
    pub graph: TypedGraph,
    pub left: GraphMorphism,
    pub right: GraphMorphism,
}

/// How elements coming only from the right-hand graph are named.
struct Naming<'a> {
    /// Prefix `<prefix>.<id>` for new node and edge ids.
    prefix: Option<&'a str>,
    /// Suffix `<var>@<suffix>` for new variables.
    var_suffix: Option<&'a str>,
}

impl Naming<'_> {
    const KEEP: Naming<'static> = Naming { prefix: None, var_suffix: None };

    fn id(&self, id: &str) -> String {
        match self.prefix {
            Some(p) => format!("{p}.{id}"),
            None => id.to_string(),
        }
    }

    fn var(&self, v: &str) -> String {
        match self.var_suffix {
            Some(s) => format!("{v}@{s}"),
            None => v.to_string(),
        }
    }
}

fn fresh(mut name: String, taken: impl Fn(&str) -> bool) -> String {
    while taken(&name) {
        name.push('\'');
    }
    name
}

/// Coproduct of two graphs. Right-hand ids and variables that clash with
/// left-hand ones are primed.
pub fn disjoint_union(g1: &TypedGraph, g2: &TypedGraph) -> Result<Pushout, GraphError> {
    let k = TypedGraph::new(g1.metamodel().clone());
    let empty = GraphMorphism::empty();
    glue(&k, (g1, &empty), (g2, &empty), &Naming::KEEP)
}

/// Pushout of the span `left.0 <-f- k -g-> right.0` along injective legs.
///
/// Left-hand ids and variables are preserved; right-hand elements outside
/// the image of `k` keep their ids unless they clash. Variables identified
/// through `k` are unified; a variable glued to a constant is replaced by
/// it, and two different constants glued together are an error.
pub fn pushout(
    k: &TypedGraph,
    left: (&TypedGraph, &GraphMorphism),
    right: (&TypedGraph, &GraphMorphism),
) -> Result<Pushout, GraphError> {
    glue(k, left, right, &Naming::KEEP)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Side {
    L,
    R,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn glue(
    k: &TypedGraph,
    (l, f): (&TypedGraph, &GraphMorphism),
    (r, g): (&TypedGraph, &GraphMorphism),
    naming: &Naming<'_>,
) -> Result<Pushout, GraphError> {
    if !k.same_metamodel(l) || !k.same_metamodel(r) {
        return Err(GraphError::MetamodelMismatch);
    }
    if let Some(p) = f.check(k, l).into_iter().next() {
        return Err(GraphError::InvalidMorphism(format!("left leg: {p}")));
    }
    if let Some(p) = g.check(k, r).into_iter().next() {
        return Err(GraphError::InvalidMorphism(format!("right leg: {p}")));
    }
    if !f.is_injective() {
        return Err(GraphError::NonInjectiveLeg("left"));
    }
    if !g.is_injective() {
        return Err(GraphError::NonInjectiveLeg("right"));
    }

    // Variable classes: left and right variables glued through k.
    let lvars = l.variables();
    let rvars = r.variables();
    let mut terms: Vec<(Side, &str, &Sort)> = Vec::new();
    terms.extend(lvars.iter().map(|(v, s)| (Side::L, v.as_str(), s)));
    terms.extend(rvars.iter().map(|(v, s)| (Side::R, v.as_str(), s)));
    let index: HashMap<(Side, &str), usize> = terms.iter().enumerate().map(|(i, (s, v, _))| ((*s, *v), i)).collect();
    let mut uf = UnionFind::new(terms.len());
    let mut pinned: Vec<(usize, Value)> = Vec::new();
    for v in k.variables().keys() {
        let lv = f.var_subst.get(v);
        let rv = g.var_subst.get(v);
        match (lv, rv) {
            (Some(AttributeValue::Var(a)), Some(AttributeValue::Var(b))) => {
                if let (Some(&i), Some(&j)) = (index.get(&(Side::L, a.name.as_str())), index.get(&(Side::R, b.name.as_str()))) {
                    uf.union(i, j);
                }
            }
            (Some(AttributeValue::Var(a)), Some(AttributeValue::Const(c))) => {
                if let Some(&i) = index.get(&(Side::L, a.name.as_str())) {
                    pinned.push((i, c.clone()));
                }
            }
            (Some(AttributeValue::Const(c)), Some(AttributeValue::Var(b))) => {
                if let Some(&j) = index.get(&(Side::R, b.name.as_str())) {
                    pinned.push((j, c.clone()));
                }
            }
            (Some(AttributeValue::Const(c)), Some(AttributeValue::Const(d))) if c != d => {
                return Err(GraphError::AttributeClash(c.to_string(), d.to_string()));
            }
            _ => {}
        }
    }
    let mut class_const: BTreeMap<usize, Value> = BTreeMap::new();
    for (t, c) in pinned {
        let root = uf.find(t);
        match class_const.get(&root) {
            Some(existing) if existing != &c => {
                return Err(GraphError::AttributeClash(existing.to_string(), c.to_string()));
            }
            _ => {
                class_const.insert(root, c);
            }
        }
    }

    // Representatives: constant, else smallest left variable, else a fresh
    // name for the right variable. Left terms come first and in order, so
    // the first left member seen for a class is its smallest.
    let mut rep: BTreeMap<usize, AttributeValue> = BTreeMap::new();
    let mut taken: BTreeSet<String> = lvars.keys().cloned().collect();
    for (i, (side, v, sort)) in terms.iter().enumerate() {
        let root = uf.find(i);
        if rep.contains_key(&root) {
            continue;
        }
        let value = if let Some(c) = class_const.get(&root) {
            AttributeValue::Const(c.clone())
        } else if *side == Side::L {
            AttributeValue::var(*v, (*sort).clone())
        } else {
            let name = fresh(naming.var(v), |n| taken.contains(n));
            taken.insert(name.clone());
            AttributeValue::var(name, (*sort).clone())
        };
        rep.insert(root, value);
    }
    let mut left_subst = BTreeMap::new();
    let mut right_subst = BTreeMap::new();
    for (i, (side, v, _)) in terms.iter().enumerate() {
        let value = rep[&uf.find(i)].clone();
        match side {
            Side::L => left_subst.insert(v.to_string(), value),
            Side::R => right_subst.insert(v.to_string(), value),
        };
    }
    let map_attrs = |n: &Node, subst: &BTreeMap<String, AttributeValue>| -> BTreeMap<String, AttributeValue> {
        n.attrs
            .iter()
            .map(|(a, v)| {
                let mapped = match v {
                    AttributeValue::Var(var) => subst.get(&var.name).cloned().unwrap_or_else(|| v.clone()),
                    AttributeValue::Const(_) => v.clone(),
                };
                (a.clone(), mapped)
            })
            .collect()
    };

    let mut out = TypedGraph::new(l.metamodel().clone());
    let mut left = GraphMorphism { var_subst: left_subst, ..GraphMorphism::empty() };
    let mut right = GraphMorphism { var_subst: right_subst, ..GraphMorphism::empty() };
    for n in l.nodes() {
        out.add_node(Node { id: n.id.clone(), ty: n.ty.clone(), attrs: map_attrs(n, &left.var_subst) })?;
        left.node_map.insert(n.id.clone(), n.id.clone());
    }
    let g_inv_nodes: HashMap<&NodeId, &NodeId> = g.node_map.iter().map(|(k, r)| (r, k)).collect();
    for n in r.nodes() {
        let id = match g_inv_nodes.get(&n.id) {
            Some(kid) => f.node_map[*kid].clone(),
            None => {
                let id = NodeId(fresh(naming.id(n.id.as_str()), |c| out.contains_node(c)));
                out.add_node(Node { id: id.clone(), ty: n.ty.clone(), attrs: map_attrs(n, &right.var_subst) })?;
                id
            }
        };
        right.node_map.insert(n.id.clone(), id);
    }
    for e in l.edges() {
        out.add_edge(e.clone())?;
        left.edge_map.insert(e.id.clone(), e.id.clone());
    }
    let g_inv_edges: HashMap<&EdgeId, &EdgeId> = g.edge_map.iter().map(|(k, r)| (r, k)).collect();
    for e in r.edges() {
        let id = match g_inv_edges.get(&e.id) {
            Some(kid) => f.edge_map[*kid].clone(),
            None => {
                let id = EdgeId(fresh(naming.id(e.id.as_str()), |c| out.contains_edge(c)));
                let (Some(s), Some(t)) = (right.node_map.get(&e.source), right.node_map.get(&e.target)) else {
                    return Err(GraphError::InvalidMorphism(format!("right graph edge `{}` is dangling", e.id)));
                };
                out.add_edge(Edge { id: id.clone(), ty: e.ty.clone(), source: s.clone(), target: t.clone() })?;
                id
            }
        };
        right.edge_map.insert(e.id.clone(), id);
    }
    for (graph, m) in [(l, &left), (r, &right)] {
        for atom in graph.atoms() {
            let a = atom.substitute(&m.var_subst);
            match a.evaluate() {
                Some(true) => {}
                Some(false) => return Err(GraphError::AtomClash(atom.to_string())),
                None => out.add_atom(a),
            }
        }
    }
    Ok(Pushout { graph: out, left, right })
}

/// One object of a tree-shaped diagram. `parent` holds the index of the
/// parent object and the embedding `parent.graph -> graph`.
#[derive(Debug, Clone)]
pub struct DiagramNode {
    pub label: String,
    pub graph: TypedGraph,
    pub parent: Option<(usize, GraphMorphism)>,
}

#[derive(Debug, Clone)]
pub struct Colimit {
    pub graph: TypedGraph,
    /// Injection of each diagram object, indexed like the diagram.
    pub injections: Vec<GraphMorphism>,
}

/// Colimit of a rooted tree of graphs with injective parent-to-child
/// embeddings, computed as iterated pushouts from the root outwards.
///
/// Elements first introduced by the object labelled `L` get ids `L.<local>`;
/// variables first introduced by a non-root object get `<var>@L`.
pub fn colimit_tree(diagram: &[DiagramNode]) -> Result<Colimit, GraphError> {
    let order = tree_order(diagram)?;
    let root = order[0];
    let mm = diagram[root].graph.metamodel().clone();
    let empty_graph = TypedGraph::new(mm);
    let empty = GraphMorphism::empty();
    let naming = Naming { prefix: Some(&diagram[root].label), var_suffix: None };
    let po = glue(&empty_graph, (&empty_graph, &empty), (&diagram[root].graph, &empty), &naming)?;
    let mut graph = po.graph;
    let mut injections: Vec<Option<GraphMorphism>> = vec![None; diagram.len()];
    injections[root] = Some(po.right);

    for &c in &order[1..] {
        let (p, emb) = diagram[c].parent.as_ref().expect("non-root has a parent");
        let naming = Naming { prefix: Some(&diagram[c].label), var_suffix: Some(&diagram[c].label) };
        let parent_inj = injections[*p].as_ref().expect("parents are processed first");
        let po = glue(&diagram[*p].graph, (&graph, parent_inj), (&diagram[c].graph, emb), &naming)?;
        let renames_vars = po.left.var_subst.iter().any(|(v, val)| val.as_var().is_none_or(|w| &w.name != v));
        if renames_vars {
            for inj in injections.iter_mut().flatten() {
                *inj = inj.compose(&po.left);
            }
        }
        injections[c] = Some(po.right);
        graph = po.graph;
    }
    Ok(Colimit { graph, injections: injections.into_iter().map(|i| i.expect("tree covers all")).collect() })
}

/// Breadth-first order from the unique root; rejects forests, cycles and
/// duplicate labels.
fn tree_order(diagram: &[DiagramNode]) -> Result<Vec<usize>, GraphError> {
    if diagram.is_empty() {
        return Err(GraphError::NotATree("empty diagram".into()));
    }
    let roots: Vec<usize> = (0..diagram.len()).filter(|&i| diagram[i].parent.is_none()).collect();
    let [root] = roots[..] else {
        return Err(GraphError::NotATree(format!("expected one root, found {}", roots.len())));
    };
    let mut labels = BTreeSet::new();
    let mut children = vec![Vec::new(); diagram.len()];
    for (i, d) in diagram.iter().enumerate() {
        if !labels.insert(d.label.as_str()) {
            return Err(GraphError::NotATree(format!("duplicate label `{}`", d.label)));
        }
        if let Some((p, _)) = &d.parent {
            if *p >= diagram.len() || *p == i {
                return Err(GraphError::NotATree(format!("`{}` has invalid parent {p}", d.label)));
            }
            children[*p].push(i);
        }
    }
    let mut order = Vec::with_capacity(diagram.len());
    let mut queue = VecDeque::from([root]);
    while let Some(i) = queue.pop_front() {
        order.push(i);
        queue.extend(children[i].iter().copied());
    }
    if order.len() != diagram.len() {
        return Err(GraphError::NotATree("cycle or unreachable object".into()));
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Metamodel, Sort};

    fn class(id: &str, name: AttributeValue) -> Node {
        Node::new(id, "Class").with("name", name).with("abstract", AttributeValue::bool(false))
    }

    fn graph(nodes: Vec<Node>, edges: &[(&str, &str, &str)]) -> TypedGraph {
        let mut g = TypedGraph::new(Metamodel::class_diagram());
        for n in nodes {
            g.add_node(n).unwrap();
        }
        for (id, s, t) in edges {
            g.add_edge(Edge::new(*id, "assoc", *s, *t)).unwrap();
        }
        g
    }

    fn inclusion(from: &TypedGraph) -> GraphMorphism {
        GraphMorphism::identity(from)
    }

    #[test]
    fn disjoint_union_sizes_and_freshness() {
        let n = || AttributeValue::var("N", Sort::String);
        let g1 = graph(vec![class("A", n())], &[]);
        let g2 = graph(vec![class("A", n())], &[]);
        let po = disjoint_union(&g1, &g2).unwrap();
        assert_eq!(po.graph.node_count(), 2);
        assert!(po.left.is_injective() && po.right.is_injective());
        let vars: Vec<_> = po.graph.variables().into_keys().collect();
        assert_eq!(vars, vec!["N".to_string(), "N'".to_string()]);
        assert!(po.left.is_valid(&g1, &po.graph));
        assert!(po.right.is_valid(&g2, &po.graph));
    }

    #[test]
    fn disjoint_union_with_empty_is_unit() {
        let g2 = graph(vec![class("B", AttributeValue::str("B"))], &[]);
        let empty = TypedGraph::new(Metamodel::class_diagram());
        let po = disjoint_union(&empty, &g2).unwrap();
        assert_eq!(po.graph, g2);
    }

    #[test]
    fn pushout_glues_on_shared_node() {
        let k = graph(vec![class("x", AttributeValue::str("X"))], &[]);
        let l = graph(vec![class("x", AttributeValue::str("X")), class("a", AttributeValue::str("A"))], &[("xa", "x", "a")]);
        let r = graph(vec![class("x", AttributeValue::str("X")), class("b", AttributeValue::str("B"))], &[("xb", "x", "b")]);
        let po = pushout(&k, (&l, &inclusion(&k)), (&r, &inclusion(&k))).unwrap();
        assert_eq!(po.graph.node_count(), 3);
        assert_eq!(po.graph.edge_count(), 2);
        let left_via = inclusion(&k).compose(&po.left);
        let right_via = inclusion(&k).compose(&po.right);
        assert_eq!(left_via.node_map, right_via.node_map);
    }

    #[test]
    fn pushout_of_identities_is_k() {
        let k = graph(vec![class("x", AttributeValue::var("N", Sort::String))], &[]);
        let id = inclusion(&k);
        let po = pushout(&k, (&k, &id), (&k, &id)).unwrap();
        assert_eq!(po.graph, k);
    }

    #[test]
    fn variable_glued_to_constant_is_specialised() {
        let k = graph(vec![class("x", AttributeValue::var("N", Sort::String))], &[]);
        let l = k.clone();
        let r = graph(vec![class("x", AttributeValue::str("Foo"))], &[]);
        let mut g = inclusion(&k);
        g.var_subst.insert("N".into(), AttributeValue::str("Foo"));
        let po = pushout(&k, (&l, &inclusion(&k)), (&r, &g)).unwrap();
        assert_eq!(po.graph.node("x").unwrap().attrs["name"], AttributeValue::str("Foo"));
        assert_eq!(po.left.var_subst["N"], AttributeValue::str("Foo"));
    }

    #[test]
    fn constant_clash_is_an_error() {
        let k = graph(vec![class("x", AttributeValue::var("N", Sort::String))], &[]);
        let l = graph(vec![class("x", AttributeValue::str("Foo"))], &[]);
        let r = graph(vec![class("x", AttributeValue::str("Bar"))], &[]);
        let mut f = inclusion(&k);
        f.var_subst.insert("N".into(), AttributeValue::str("Foo"));
        let mut g = inclusion(&k);
        g.var_subst.insert("N".into(), AttributeValue::str("Bar"));
        assert!(matches!(pushout(&k, (&l, &f), (&r, &g)), Err(GraphError::AttributeClash(..))));
    }

    #[test]
    fn non_injective_leg_rejected() {
        let k = graph(vec![class("x", AttributeValue::str("S")), class("y", AttributeValue::str("S"))], &[]);
        let l = graph(vec![class("z", AttributeValue::str("S"))], &[]);
        let mut f = GraphMorphism::empty();
        f.node_map.insert("x".into(), "z".into());
        f.node_map.insert("y".into(), "z".into());
        let err = pushout(&k, (&l, &f), (&k, &inclusion(&k))).unwrap_err();
        assert_eq!(err, GraphError::NonInjectiveLeg("left"));
    }

    #[test]
    fn tree_colimit_replicates_children() {
        let root = graph(vec![class("A", AttributeValue::str("A"))], &[]);
        let child = graph(
            vec![class("A", AttributeValue::str("A")), class("B", AttributeValue::var("B", Sort::String))],
            &[("AB", "A", "B")],
        );
        let emb = inclusion(&root);
        let diagram = vec![
            DiagramNode { label: "root#0".into(), graph: root.clone(), parent: None },
            DiagramNode { label: "kids#0".into(), graph: child.clone(), parent: Some((0, emb.clone())) },
            DiagramNode { label: "kids#1".into(), graph: child, parent: Some((0, emb)) },
        ];
        let c = colimit_tree(&diagram).unwrap();
        let ids: Vec<_> = c.graph.nodes().map(|n| n.id.to_string()).collect();
        assert_eq!(ids, vec!["kids#0.B", "kids#1.B", "root#0.A"]);
        assert_eq!(c.graph.edge_count(), 2);
        let vars: Vec<_> = c.graph.variables().into_keys().collect();
        assert_eq!(vars, vec!["B@kids#0", "B@kids#1"]);
        for (d, inj) in diagram.iter().zip(&c.injections) {
            assert!(inj.is_valid(&d.graph, &c.graph), "{:?}", inj.check(&d.graph, &c.graph));
        }
    }

    #[test]
    fn rejects_forests_and_bad_morphisms() {
        let root = graph(vec![class("A", AttributeValue::str("A"))], &[]);
        let two_roots = vec![
            DiagramNode { label: "a".into(), graph: root.clone(), parent: None },
            DiagramNode { label: "b".into(), graph: root.clone(), parent: None },
        ];
        assert!(matches!(colimit_tree(&two_roots), Err(GraphError::NotATree(_))));
        let mut bad = GraphMorphism::empty();
        bad.node_map.insert("A".into(), "missing".into());
        let mismatched = vec![
            DiagramNode { label: "a".into(), graph: root.clone(), parent: None },
            DiagramNode { label: "b".into(), graph: root, parent: Some((0, bad)) },
        ];
        assert!(matches!(colimit_tree(&mismatched), Err(GraphError::InvalidMorphism(_))));
    }
}
