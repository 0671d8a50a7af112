//! Recursive-descent parser shared by the pattern DSL and the model format.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::lexer::{Lexer, Tok, Token};
use super::{DslError, MetamodelTag, ModelDocument, PatternFile, Pos, RawDiag};
use crate::graph::{
    Atom, AttributeValue, CmpOp, Edge, GraphMorphism, Metamodel, Node, NodeId, Operand, Sort, TypedGraph, Value,
};
use crate::pattern::{
    AtomicConstraint, Consequence, Pattern, SyncLink, SynchronizedPatternSet, VariablePart,
};
use crate::solver::EquationSystem;

type PResult<T> = Result<T, RawDiag>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Pattern,
    Model,
}

/// A graph under construction and where its elements were declared.
#[derive(Debug, Clone)]
struct Block {
    graph: TypedGraph,
    roles: BTreeMap<NodeId, String>,
    spans: BTreeMap<String, Pos>,
    /// Keyed by the atom's text.
    atom_spans: BTreeMap<String, Pos>,
    pos: Pos,
}

impl Block {
    fn new(mm: Arc<Metamodel>, pos: Pos) -> Self {
        Block { graph: TypedGraph::new(mm), roles: BTreeMap::new(), spans: BTreeMap::new(), atom_spans: BTreeMap::new(), pos }
    }

    /// A block extending `self`; only new role labels are recorded.
    fn extend(&self, pos: Pos) -> Self {
        Block {
            graph: self.graph.clone(),
            roles: BTreeMap::new(),
            spans: self.spans.clone(),
            atom_spans: self.atom_spans.clone(),
            pos,
        }
    }
}

#[derive(Debug, Clone)]
enum PropVal {
    Ident(String),
    Str(String),
    Int(i64),
    Var(String),
    Anon,
}

#[derive(Debug, Default)]
struct Props {
    attrs: Vec<(String, PropVal, Pos)>,
    ops: Vec<(String, Pos)>,
    fields: Vec<(String, Pos)>,
}

struct Parser<'a> {
    lx: Lexer<'a>,
    mode: Mode,
    mm: Arc<Metamodel>,
    roles: Vec<String>,
}

fn unexpected(t: &Token, expected: &str) -> RawDiag {
    RawDiag::at(t.pos, format!("expected {expected}, found {}", t.tok.describe()))
}

fn is_upper(s: &str) -> bool {
    s.starts_with(|c: char| c.is_ascii_uppercase())
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, mode: Mode) -> Self {
        Parser { lx: Lexer::new(src), mode, mm: Metamodel::class_diagram(), roles: Vec::new() }
    }

    fn peek(&mut self) -> PResult<&Token> {
        self.lx.peek()
    }

    fn next(&mut self) -> PResult<Token> {
        self.lx.next()
    }

    fn at_punct(&mut self, p: &str) -> PResult<bool> {
        Ok(matches!(&self.peek()?.tok, Tok::Punct(q) if *q == p))
    }

    fn eat(&mut self, p: &str) -> PResult<bool> {
        if self.at_punct(p)? {
            self.next()?;
            return Ok(true);
        }
        Ok(false)
    }

    fn expect(&mut self, p: &str) -> PResult<Pos> {
        let t = self.next()?;
        match &t.tok {
            Tok::Punct(q) if *q == p => Ok(t.pos),
            _ => Err(unexpected(&t, &format!("`{p}`"))),
        }
    }

    fn at_kw(&mut self, kw: &str) -> PResult<bool> {
        Ok(matches!(&self.peek()?.tok, Tok::Ident(s) if s == kw))
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Pos> {
        let t = self.next()?;
        match &t.tok {
            Tok::Ident(s) if s == kw => Ok(t.pos),
            _ => Err(unexpected(&t, &format!("`{kw}`"))),
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Pos)> {
        let t = self.next()?;
        match t.tok {
            Tok::Ident(s) => Ok((s, t.pos)),
            _ => Err(unexpected(&t, what)),
        }
    }

    fn string(&mut self, what: &str) -> PResult<(String, Pos)> {
        let t = self.next()?;
        match t.tok {
            Tok::Str(s) => Ok((s, t.pos)),
            _ => Err(unexpected(&t, what)),
        }
    }

    /// `Ident ('.' Ident)*` or a quoted string.
    fn reference(&mut self, what: &str) -> PResult<(String, Pos)> {
        let t = self.next()?;
        match t.tok {
            Tok::Str(s) => Ok((s, t.pos)),
            Tok::Ident(mut s) => {
                let mut pos = t.pos;
                while self.at_punct(".")? {
                    self.next()?;
                    let (more, p) = self.ident("an identifier after `.`")?;
                    s.push('.');
                    s.push_str(&more);
                    pos.length = p.offset + p.length - pos.offset;
                }
                Ok((s, pos))
            }
            _ => Err(unexpected(&t, what)),
        }
    }

    fn skip_separators(&mut self) -> PResult<()> {
        while self.eat(";")? || self.eat(",")? {}
        Ok(())
    }

    // ---- elements ----

    /// Elements up to the closing `}` (which is consumed).
    fn elements(&mut self, b: &mut Block) -> PResult<()> {
        loop {
            self.skip_separators()?;
            if self.eat("}")? {
                return Ok(());
            }
            if matches!(self.peek()?.tok, Tok::Eof) {
                let t = self.next()?;
                return Err(unexpected(&t, "`}`"));
            }
            self.element(b)?;
        }
    }

    fn element(&mut self, b: &mut Block) -> PResult<()> {
        let t = self.next()?;
        let Tok::Ident(kw) = &t.tok else {
            return Err(unexpected(&t, "an element (class, op, attr, note, lifeline, message, node, edge, where)"));
        };
        match kw.as_str() {
            "class" => {
                let (id, pos) = self.reference("a class id")?;
                let role = self.role()?;
                let props = self.props()?;
                let local = id.clone();
                let (ops, fields) = (props.ops.clone(), props.fields.clone());
                self.add_node(b, &id, "Class", &local, role, props, pos)?;
                for (name, p) in ops {
                    self.add_owned(b, "Operation", "owns_op", &name, &id, None, Props::default(), p)?;
                }
                for (name, p) in fields {
                    self.add_owned(b, "Attribute", "owns_attr", &name, &id, None, Props::default(), p)?;
                }
            }
            "op" | "attr" => {
                let (name, pos) = self.reference("a member name")?;
                self.expect_kw("in")?;
                let (owner, opos) = self.reference("the owning class")?;
                if !b.graph.contains_node(&owner) {
                    return Err(RawDiag::at(opos, format!("unknown node `{owner}`")));
                }
                let role = self.role()?;
                let props = self.props()?;
                let (ty, edge) = if kw == "op" { ("Operation", "owns_op") } else { ("Attribute", "owns_attr") };
                self.add_owned(b, ty, edge, &name, &owner, role, props, pos)?;
            }
            "note" => {
                let (id, pos) = self.reference("a note id")?;
                self.expect_kw("on")?;
                let (target, tpos) = self.reference("the annotated element")?;
                self.require_node(b, &target, tpos)?;
                let role = self.role()?;
                let props = self.props()?;
                self.add_node(b, &id, "Note", &id, role, props, pos)?;
                self.add_edge(b, "annotates", &id, &target, None, pos)?;
            }
            "lifeline" => {
                let (id, pos) = self.reference("a lifeline id")?;
                let role = self.role()?;
                let props = self.props()?;
                self.add_node(b, &id, "Lifeline", &id, role, props, pos)?;
            }
            "message" => {
                let (id, pos) = self.reference("a message id")?;
                self.expect_kw("from")?;
                let (from, fpos) = self.reference("the sending lifeline")?;
                self.require_node(b, &from, fpos)?;
                self.expect_kw("to")?;
                let (to, tpos) = self.reference("the receiving lifeline")?;
                self.require_node(b, &to, tpos)?;
                let role = self.role()?;
                let props = self.props()?;
                self.add_node(b, &id, "Message", &id, role, props, pos)?;
                self.add_edge(b, "sends", &from, &id, None, pos)?;
                self.add_edge(b, "receives", &id, &to, None, pos)?;
            }
            "node" => {
                let (id, pos) = self.reference("a node id")?;
                self.expect(":")?;
                let (ty, tpos) = self.ident("a node type")?;
                if self.mm.node_type(&ty).is_none() {
                    return Err(RawDiag::at(tpos, format!("`{}` has no node type `{ty}`", self.mm.name())));
                }
                let role = self.role()?;
                let props = self.props()?;
                let local = id.rsplit('.').next().unwrap_or(&id).to_string();
                self.add_node(b, &id, &ty, &local, role, props, pos)?;
            }
            "edge" => {
                let (ty, tpos) = self.ident("an edge type")?;
                if self.mm.edge_type(&ty).is_none() {
                    return Err(RawDiag::at(tpos, format!("`{}` has no edge type `{ty}`", self.mm.name())));
                }
                let (src, spos) = self.reference("the source node")?;
                self.require_node(b, &src, spos)?;
                self.expect("->")?;
                let (tgt, gpos) = self.reference("the target node")?;
                self.require_node(b, &tgt, gpos)?;
                let label = if self.eat("[")? {
                    let (l, _) = self.reference("an edge label")?;
                    self.expect("]")?;
                    Some(l)
                } else {
                    None
                };
                self.add_edge(b, &ty, &src, &tgt, label, t.pos)?;
            }
            "where" => loop {
                let atom = self.atom()?;
                b.atom_spans.insert(atom.to_string(), t.pos);
                b.graph.add_atom(atom);
                if !self.eat(",")? {
                    break;
                }
            },
            _ => return Err(unexpected(&t, "an element (class, op, attr, note, lifeline, message, node, edge, where)")),
        }
        Ok(())
    }

    fn require_node(&self, b: &Block, id: &str, pos: Pos) -> PResult<()> {
        if b.graph.contains_node(id) {
            Ok(())
        } else {
            Err(RawDiag::at(pos, format!("unknown node `{id}`")))
        }
    }

    fn role(&mut self) -> PResult<Option<(String, Pos)>> {
        if !self.at_kw("as")? {
            return Ok(None);
        }
        let t = self.next()?;
        if self.mode == Mode::Model {
            return Err(RawDiag::at(t.pos, "role labels are only allowed in patterns"));
        }
        let (role, pos) = self.ident("a role name")?;
        if !self.roles.contains(&role) {
            return Err(RawDiag::at(pos, format!("role `{role}` is not declared in `roles`")));
        }
        Ok(Some((role, pos)))
    }

    fn props(&mut self) -> PResult<Props> {
        let mut props = Props::default();
        if !self.eat("{")? {
            return Ok(props);
        }
        loop {
            self.skip_separators()?;
            if self.eat("}")? {
                return Ok(props);
            }
            let (key, pos) = self.ident("an attribute name or `}`")?;
            if !self.eat(":")? {
                let (k, v) = match key.as_str() {
                    "abstract" | "static" => (key.clone(), "true"),
                    "public" | "private" | "protected" => ("visibility".to_string(), key.as_str()),
                    _ => return Err(RawDiag::at(pos, format!("`{key}` is not a flag; write `{key}: <value>`"))),
                };
                props.attrs.push((k, PropVal::Ident(v.to_string()), pos));
                continue;
            }
            match key.as_str() {
                "ops" | "attrs" => {
                    let items = self.member_list()?;
                    if key == "ops" {
                        props.ops.extend(items);
                    } else {
                        props.fields.extend(items);
                    }
                }
                _ => {
                    let v = self.value()?;
                    props.attrs.push((key, v, pos));
                }
            }
        }
    }

    /// `name`, `name()` or `[name(), ...]`.
    fn member_list(&mut self) -> PResult<Vec<(String, Pos)>> {
        let bracketed = self.eat("[")?;
        let mut out = Vec::new();
        loop {
            if bracketed && self.eat("]")? {
                return Ok(out);
            }
            let (name, pos) = self.reference("a member name")?;
            if self.eat("(")? {
                self.expect(")")?;
            }
            out.push((name, pos));
            if !bracketed {
                return Ok(out);
            }
            if !self.eat(",")? {
                self.expect("]")?;
                return Ok(out);
            }
        }
    }

    fn value(&mut self) -> PResult<PropVal> {
        let t = self.next()?;
        Ok(match t.tok {
            Tok::Ident(s) if s == "_" => PropVal::Anon,
            Tok::Ident(s) => PropVal::Ident(s),
            Tok::Str(s) => PropVal::Str(s),
            Tok::Int(i) => PropVal::Int(i),
            Tok::Var(v) => PropVal::Var(v),
            _ => return Err(unexpected(&t, "a value")),
        })
    }

    fn operand(&mut self) -> PResult<Operand> {
        let t = self.next()?;
        Ok(match t.tok {
            Tok::Var(v) => Operand::Var(v),
            Tok::Ident(s) if self.mode == Mode::Pattern && is_upper(&s) => Operand::Var(s),
            Tok::Ident(s) if s == "true" || s == "false" => Operand::Const(Value::Bool(s == "true")),
            Tok::Ident(s) | Tok::Str(s) => Operand::Const(Value::Str(s)),
            Tok::Int(i) => Operand::Const(Value::Int(i)),
            _ => return Err(unexpected(&t, "a variable or constant")),
        })
    }

    fn atom(&mut self) -> PResult<Atom> {
        let lhs = self.operand()?;
        let t = self.next()?;
        let op = match t.tok {
            Tok::Punct("==") => CmpOp::Eq,
            Tok::Punct("!=") => CmpOp::Ne,
            Tok::Punct("<") => CmpOp::Lt,
            Tok::Punct("<=") => CmpOp::Le,
            Tok::Punct(">") => CmpOp::Gt,
            Tok::Punct(">=") => CmpOp::Ge,
            _ => return Err(unexpected(&t, "a comparison (==, !=, <, <=, >, >=)")),
        };
        let rhs = self.operand()?;
        Ok(Atom::new(lhs, op, rhs))
    }

    fn convert(&self, node: &str, attr: &str, v: &PropVal, sort: &Sort, pos: Pos) -> PResult<AttributeValue> {
        let bad = |what: String| RawDiag::at(pos, format!("attribute `{attr}` expects {sort}, found {what}"));
        Ok(match v {
            PropVal::Var(name) => AttributeValue::var(name.clone(), sort.clone()),
            PropVal::Anon => AttributeValue::var(format!("_{}_{attr}", sanitize(node)), sort.clone()),
            PropVal::Ident(s) if self.mode == Mode::Pattern && is_upper(s) => AttributeValue::var(s.clone(), sort.clone()),
            PropVal::Ident(s) | PropVal::Str(s) => match sort {
                Sort::String => AttributeValue::str(s.clone()),
                Sort::Boolean if s == "true" || s == "false" => AttributeValue::bool(s == "true"),
                Sort::Enum(values) if values.contains(s) => AttributeValue::enumeration(s.clone()),
                _ => return Err(bad(format!("`{s}`"))),
            },
            PropVal::Int(i) => match sort {
                Sort::Integer => AttributeValue::int(*i),
                _ => return Err(bad(format!("integer {i}"))),
            },
        })
    }

    fn default_value(&self, ty: &str, node: &str, local: &str, attr: &str, sort: &Sort, given: &BTreeMap<String, AttributeValue>) -> AttributeValue {
        if self.mode == Mode::Pattern {
            if attr == "name" && *sort == Sort::String {
                return if is_upper(local) { AttributeValue::var(local, Sort::String) } else { AttributeValue::str(local) };
            }
            return AttributeValue::var(format!("_{}_{attr}", sanitize(node)), sort.clone());
        }
        match (ty, attr) {
            ("Attribute", "visibility") => return AttributeValue::enumeration("private"),
            ("Lifeline", "type") => return given.get("name").cloned().unwrap_or_else(|| AttributeValue::str(local)),
            (_, "name") | (_, "op_name") => return AttributeValue::str(local),
            _ => {}
        }
        match sort {
            Sort::String => AttributeValue::str(""),
            Sort::Boolean => AttributeValue::bool(false),
            Sort::Integer => AttributeValue::int(0),
            Sort::Enum(values) => AttributeValue::enumeration(values.first().cloned().unwrap_or_default()),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn add_node(
        &self,
        b: &mut Block,
        id: &str,
        ty: &str,
        local: &str,
        role: Option<(String, Pos)>,
        props: Props,
        pos: Pos,
    ) -> PResult<()> {
        let Some(nt) = self.mm.node_type(ty) else {
            return Err(RawDiag::at(pos, format!("`{}` has no node type `{ty}`", self.mm.name())));
        };
        if b.graph.contains_node(id) {
            return Err(RawDiag::at(pos, format!("node `{id}` is already declared")));
        }
        let mut attrs = BTreeMap::new();
        for (key, v, p) in &props.attrs {
            let Some(decl) = nt.attrs.get(key) else {
                return Err(RawDiag::at(*p, format!("`{ty}` has no attribute `{key}`")));
            };
            if attrs.contains_key(key) {
                return Err(RawDiag::at(*p, format!("attribute `{key}` is given twice")));
            }
            attrs.insert(key.clone(), self.convert(id, key, v, &decl.sort, *p)?);
        }
        // `type` defaults from `name`, so fill `name` first
        let mut keys: Vec<&String> = nt.attrs.keys().collect();
        keys.sort_by_key(|k| *k != "name");
        for key in keys {
            if !attrs.contains_key(key) {
                let v = self.default_value(ty, id, local, key, &nt.attrs[key].sort, &attrs);
                attrs.insert(key.clone(), v);
            }
        }
        let mut node = Node::new(id, ty);
        node.attrs = attrs;
        b.graph.add_node(node).map_err(|e| RawDiag::at(pos, e.to_string()))?;
        b.spans.insert(id.to_string(), pos);
        let role = match role {
            Some((r, _)) => Some(r),
            None if self.mode == Mode::Pattern && self.roles.iter().any(|r| r == local) => Some(local.to_string()),
            None => None,
        };
        if let Some(r) = role {
            b.roles.insert(NodeId::from(id), r);
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn add_owned(
        &self,
        b: &mut Block,
        ty: &str,
        edge: &str,
        name: &str,
        owner: &str,
        role: Option<(String, Pos)>,
        props: Props,
        pos: Pos,
    ) -> PResult<()> {
        let id = format!("{owner}.{name}");
        self.add_node(b, &id, ty, name, role, props, pos)?;
        self.add_edge(b, edge, owner, &id, None, pos)
    }

    fn add_edge(&self, b: &mut Block, ty: &str, src: &str, tgt: &str, label: Option<String>, pos: Pos) -> PResult<()> {
        let id = match label {
            Some(l) => {
                if b.graph.contains_edge(&l) {
                    return Err(RawDiag::at(pos, format!("edge `{l}` is already declared")));
                }
                l
            }
            None => {
                let base = format!("{ty}({src},{tgt})");
                let mut id = base.clone();
                let mut n = 2;
                while b.graph.contains_edge(&id) {
                    id = format!("{base}#{n}");
                    n += 1;
                }
                id
            }
        };
        b.graph.add_edge(Edge::new(id.as_str(), ty, src, tgt)).map_err(|e| RawDiag::at(pos, e.to_string()))?;
        b.spans.insert(id, pos);
        Ok(())
    }

    // ---- pattern files ----

    fn pattern_block(&mut self, collaboration: bool) -> PResult<RawPattern> {
        let (name, name_pos) = self.ident("a pattern name")?;
        let title = if matches!(self.peek()?.tok, Tok::Str(_)) { self.string("a title")?.0 } else { name.clone() };
        self.expect("{")?;
        self.mm = if collaboration { Metamodel::collaboration() } else { Metamodel::class_diagram() };
        self.roles.clear();

        let mut intent = String::new();
        let mut blocks: Vec<(VariablePart, Block)> = Vec::new();
        let mut equations: Option<(EquationSystem, Pos)> = None;
        let mut constraints: Vec<(AtomicConstraint, Vec<Block>, Pos)> = Vec::new();
        let mut links = Vec::new();

        loop {
            self.skip_separators()?;
            let t = self.next()?;
            let kw = match &t.tok {
                Tok::Punct("}") => break,
                Tok::Ident(k) => k.clone(),
                _ => return Err(unexpected(&t, "a pattern item or `}`")),
            };
            match kw.as_str() {
                "intent" => intent = self.string("the intent text")?.0,
                "metamodel" => {
                    let (tag, pos) = self.ident("a metamodel name")?;
                    if !blocks.is_empty() {
                        return Err(RawDiag::at(pos, "`metamodel` must come before `root`"));
                    }
                    self.mm = Metamodel::builtin(&tag)
                        .ok_or_else(|| RawDiag::at(pos, format!("unknown metamodel `{tag}` (expected classdiagram or collaboration)")))?;
                }
                "roles" => loop {
                    let (r, pos) = self.ident("a role name")?;
                    if self.roles.contains(&r) {
                        return Err(RawDiag::at(pos, format!("role `{r}` is declared twice")));
                    }
                    self.roles.push(r);
                    if !self.eat(",")? {
                        break;
                    }
                },
                "root" => {
                    if !blocks.is_empty() {
                        return Err(RawDiag::at(t.pos, "a pattern has exactly one `root`"));
                    }
                    self.expect("{")?;
                    let mut b = Block::new(self.mm.clone(), t.pos);
                    self.elements(&mut b)?;
                    let part = VariablePart {
                        name: name.clone(),
                        graph: b.graph.clone(),
                        parent: None,
                        embedding: None,
                        role_labels: b.roles.clone(),
                    };
                    blocks.push((part, b));
                }
                "part" => {
                    let (pname, ppos) = self.ident("a part name")?;
                    self.expect_kw("in")?;
                    let (parent, parent_pos) = self.ident("the parent part")?;
                    let parent = if parent == "root" { name.clone() } else { parent };
                    if blocks.is_empty() {
                        return Err(RawDiag::at(t.pos, "`root` must be declared before any `part`"));
                    }
                    let Some(pi) = blocks.iter().position(|(p, _)| p.name == parent) else {
                        return Err(RawDiag::at(parent_pos, format!("unknown part `{parent}`; declare parents first")));
                    };
                    if blocks.iter().any(|(p, _)| p.name == pname) {
                        return Err(RawDiag::at(ppos, format!("part `{pname}` is declared twice")));
                    }
                    self.expect("{")?;
                    let mut b = blocks[pi].1.extend(ppos);
                    self.elements(&mut b)?;
                    let part = VariablePart {
                        name: pname,
                        graph: b.graph.clone(),
                        parent: Some(pi),
                        embedding: Some(GraphMorphism::identity(&blocks[pi].1.graph)),
                        role_labels: b.roles.clone(),
                    };
                    blocks.push((part, b));
                }
                "equations" => {
                    let (text, pos) = self.lx.raw_line();
                    if equations.is_some() {
                        return Err(RawDiag::at(t.pos, "`equations` is given twice"));
                    }
                    let sys = EquationSystem::parse(&text).map_err(|e| {
                        let column = pos.column + text[..e.offset.min(text.len())].chars().count();
                        RawDiag::at(
                            Pos { offset: pos.offset + e.offset, line: pos.line, column, length: e.len.max(1) },
                            e.message,
                        )
                    })?;
                    equations = Some((sys, pos));
                }
                "nac" | "require" => {
                    let (anchor, apos) = self.ident("the anchor part")?;
                    let anchor = if anchor == "root" { name.clone() } else { anchor };
                    let label = if matches!(self.peek()?.tok, Tok::Str(_)) {
                        self.string("a label")?.0
                    } else {
                        format!("{kw}#{}", constraints.len() + 1)
                    };
                    let Some((_, anchor_block)) = blocks.iter().find(|(p, _)| p.name == anchor) else {
                        return Err(RawDiag::at(apos, format!("unknown part `{anchor}`")));
                    };
                    let anchor_block = anchor_block.clone();
                    self.expect("{")?;
                    let premise_morphism = GraphMorphism::identity(&anchor_block.graph);
                    let c = if kw == "nac" {
                        let mut x = anchor_block.extend(t.pos);
                        self.elements(&mut x)?;
                        let c = AtomicConstraint {
                            label,
                            anchor,
                            premise_graph: x.graph.clone(),
                            premise: premise_morphism,
                            consequences: Vec::new(),
                        };
                        (c, vec![x], t.pos)
                    } else {
                        self.skip_separators()?;
                        let ppos = self.expect_kw("premise")?;
                        self.expect("{")?;
                        let mut x = anchor_block.extend(ppos);
                        self.elements(&mut x)?;
                        let mut used = vec![x.clone()];
                        let mut consequences = Vec::new();
                        loop {
                            self.skip_separators()?;
                            if self.eat("}")? {
                                break;
                            }
                            let cpos = self.expect_kw("consequence")?;
                            self.expect("{")?;
                            let mut cb = x.extend(cpos);
                            self.elements(&mut cb)?;
                            consequences.push(Consequence { graph: cb.graph.clone(), morphism: GraphMorphism::identity(&x.graph) });
                            used.push(cb);
                        }
                        if consequences.is_empty() {
                            return Err(RawDiag::at(t.pos, "`require` needs at least one `consequence`; use `nac` to forbid the premise"));
                        }
                        let c = AtomicConstraint { label, anchor, premise_graph: x.graph.clone(), premise: premise_morphism, consequences };
                        (c, used, t.pos)
                    };
                    constraints.push(c);
                }
                "sync" => {
                    if collaboration {
                        return Err(RawDiag::at(t.pos, "`sync` belongs in the primary pattern"));
                    }
                    let (secondary, _) = self.ident("a collaboration name")?;
                    self.expect("{")?;
                    loop {
                        self.skip_separators()?;
                        if self.eat("}")? {
                            break;
                        }
                        let lpos = self.expect_kw("link")?;
                        let (pp, _) = self.ident("a primary part")?;
                        let (pn, _) = self.reference("a primary node")?;
                        self.expect("~")?;
                        let (sp, _) = self.ident("a collaboration part")?;
                        let (sn, _) = self.reference("a collaboration node")?;
                        let pp = if pp == "root" { name.clone() } else { pp };
                        links.push(RawLink { secondary: secondary.clone(), pp, pn, sp, sn, pos: lpos });
                    }
                }
                _ => return Err(unexpected(&t, "a pattern item (intent, metamodel, roles, root, part, equations, nac, require, sync)")),
            }
        }
        if blocks.is_empty() {
            return Err(RawDiag::at(name_pos, format!("pattern `{name}` has no `root` block")));
        }
        let (equations, eq_pos) = match equations {
            Some((s, p)) => (s, Some(p)),
            None => (EquationSystem::default(), None),
        };
        let mut graph_blocks: Vec<(String, Block)> = blocks.iter().map(|(p, b)| (p.name.clone(), b.clone())).collect();
        let mut constraint_pos = BTreeMap::new();
        let mut cons = Vec::new();
        for (c, bs, pos) in constraints {
            constraint_pos.insert(c.label.clone(), pos);
            graph_blocks.extend(bs.into_iter().map(|b| (c.label.clone(), b)));
            cons.push(c);
        }
        let part_pos = blocks.iter().map(|(p, b)| (p.name.clone(), b.pos)).collect();
        let pattern = Pattern {
            name,
            title,
            intent,
            metamodel: self.mm.clone(),
            roles: self.roles.clone(),
            parts: blocks.into_iter().map(|(p, _)| p).collect(),
            equations,
            constraints: cons,
        };
        Ok(RawPattern { pattern, links, blocks: graph_blocks, part_pos, constraint_pos, eq_pos, header: name_pos })
    }
}

struct RawLink {
    secondary: String,
    pp: String,
    pn: String,
    sp: String,
    sn: String,
    pos: Pos,
}

struct RawPattern {
    pattern: Pattern,
    links: Vec<RawLink>,
    blocks: Vec<(String, Block)>,
    part_pos: BTreeMap<String, Pos>,
    constraint_pos: BTreeMap<String, Pos>,
    eq_pos: Option<Pos>,
    header: Pos,
}

/// Enum-typed variables compared with string literals compare as enums.
fn coerce_atoms(g: &mut TypedGraph) {
    let sorts = g.variables();
    let coerce = |a: &Atom| {
        let fix = |o: &Operand, other: &Operand| match (o, other) {
            (Operand::Const(c), Operand::Var(v)) => match sorts.get(v) {
                Some(s @ Sort::Enum(_)) => Operand::Const(c.clone().coerce(s)),
                _ => o.clone(),
            },
            _ => o.clone(),
        };
        Atom::new(fix(&a.lhs, &a.rhs), a.op, fix(&a.rhs, &a.lhs))
    };
    let atoms: Vec<Atom> = g.atoms().iter().map(coerce).collect();
    let mut fresh = TypedGraph::new(g.metamodel().clone());
    for n in g.nodes() {
        let _ = fresh.add_node(n.clone());
    }
    for e in g.edges() {
        let _ = fresh.add_edge(e.clone());
    }
    for a in atoms {
        fresh.add_atom(a);
    }
    *g = fresh;
}

fn graph_diagnostics(b: &Block, out: &mut Vec<RawDiag>) {
    for v in b.graph.validate().violations {
        let pos = b.spans.get(&v.subject).or_else(|| b.atom_spans.get(&v.subject)).copied().unwrap_or(b.pos);
        out.push(RawDiag::at(pos, v.to_string()));
    }
}

fn finish_pattern(raw: &mut RawPattern) -> Vec<RawDiag> {
    let mut diags = Vec::new();
    for (_, b) in &mut raw.blocks {
        coerce_atoms(&mut b.graph);
        graph_diagnostics(b, &mut diags);
    }
    // the pattern holds copies of the block graphs; refresh them after coercion
    let p = &mut raw.pattern;
    for part in &mut p.parts {
        coerce_atoms(&mut part.graph);
    }
    for c in &mut p.constraints {
        coerce_atoms(&mut c.premise_graph);
        for cons in &mut c.consequences {
            coerce_atoms(&mut cons.graph);
        }
    }
    if !diags.is_empty() {
        return diags;
    }
    for issue in p.validate().errors() {
        let pos = raw
            .part_pos
            .get(&issue.location)
            .or_else(|| raw.constraint_pos.get(&issue.location))
            .copied()
            .or(if issue.location == "equations" { raw.eq_pos } else { None })
            .unwrap_or(raw.header);
        diags.push(RawDiag::at(pos, issue.message.clone()));
    }
    diags
}

fn parse_pattern_raw(text: &str) -> Result<PatternFile, Vec<RawDiag>> {
    let mut parser = Parser::new(text, Mode::Pattern);
    let mut primary: Option<RawPattern> = None;
    let mut collaborations: Vec<RawPattern> = Vec::new();
    loop {
        parser.skip_separators().map_err(|d| vec![d])?;
        let t = parser.next().map_err(|d| vec![d])?;
        match &t.tok {
            Tok::Eof => break,
            Tok::Ident(k) if k == "pattern" => {
                if primary.is_some() {
                    return Err(vec![RawDiag::at(t.pos, "a file holds one `pattern` (plus any `collaboration` blocks)")]);
                }
                primary = Some(parser.pattern_block(false).map_err(|d| vec![d])?);
            }
            Tok::Ident(k) if k == "collaboration" => {
                collaborations.push(parser.pattern_block(true).map_err(|d| vec![d])?);
            }
            _ => return Err(vec![unexpected(&t, "`pattern` or `collaboration`")]),
        }
    }
    let Some(mut primary) = primary else {
        return Err(vec![RawDiag::at(Pos { line: 1, column: 1, ..Pos::default() }, "file declares no `pattern`")]);
    };
    let mut diags = finish_pattern(&mut primary);
    for c in &mut collaborations {
        diags.extend(finish_pattern(c));
    }
    let mut names = BTreeSet::new();
    for c in &collaborations {
        if !names.insert(c.pattern.name.clone()) || c.pattern.name == primary.pattern.name {
            diags.push(RawDiag::at(c.header, format!("pattern name `{}` is used twice", c.pattern.name)));
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    let mut links = Vec::new();
    for l in &primary.links {
        let Some(si) = collaborations.iter().position(|c| c.pattern.name == l.secondary) else {
            diags.push(RawDiag::at(l.pos, format!("unknown collaboration `{}`", l.secondary)));
            continue;
        };
        let link = SyncLink {
            primary_part: l.pp.clone(),
            primary_node: NodeId::from(l.pn.as_str()),
            secondary: si,
            secondary_part: if l.sp == "root" { collaborations[si].pattern.name.clone() } else { l.sp.clone() },
            secondary_node: NodeId::from(l.sn.as_str()),
        };
        let single = SynchronizedPatternSet {
            primary: primary.pattern.clone(),
            secondaries: collaborations.iter().map(|c| c.pattern.clone()).collect(),
            links: vec![link.clone()],
        };
        if let Err(e) = single.joint_equation_system() {
            diags.push(RawDiag::at(l.pos, e.to_string()));
        }
        links.push(link);
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    Ok(PatternFile {
        primary: primary.pattern,
        collaborations: collaborations.into_iter().map(|c| c.pattern).collect(),
        links,
        derived_equations: text.lines().any(|l| l.trim_start().starts_with('#') && l.contains("derived from GoF94")),
    })
}

/// Parse a `.pat` file; `file` names it in diagnostics.
pub fn parse_pattern_file(text: &str, file: &str) -> Result<PatternFile, DslError> {
    parse_pattern_raw(text).map_err(|d| DslError::from_raw(file, d))
}

/// Parse pattern DSL text and return its primary pattern.
pub fn parse_pattern(text: &str) -> Result<Pattern, DslError> {
    parse_pattern_file(text, "<input>").map(|f| f.primary)
}

fn parse_model_raw(text: &str) -> Result<(MetamodelTag, Block), Vec<RawDiag>> {
    let mut parser = Parser::new(text, Mode::Model);
    let one = |d| vec![d];
    let mut tag = MetamodelTag::ClassDiagram;
    if parser.at_kw("model").map_err(one)? {
        parser.next().map_err(one)?;
        let (t, pos) = parser.ident("a metamodel name").map_err(one)?;
        tag = MetamodelTag::parse(&t)
            .ok_or_else(|| vec![RawDiag::at(pos, format!("unknown metamodel `{t}` (expected classdiagram or collaboration)"))])?;
    }
    parser.mm = Metamodel::builtin(tag.as_str()).expect("built-in tag");
    let mut b = Block::new(parser.mm.clone(), Pos { line: 1, column: 1, ..Pos::default() });
    loop {
        parser.skip_separators().map_err(one)?;
        if matches!(parser.peek().map_err(one)?.tok, Tok::Eof) {
            break;
        }
        parser.element(&mut b).map_err(one)?;
    }
    coerce_atoms(&mut b.graph);
    let mut diags = Vec::new();
    graph_diagnostics(&b, &mut diags);
    if !diags.is_empty() {
        return Err(diags);
    }
    Ok((tag, b))
}

/// Parse a `.model` file; `file` names it in diagnostics.
pub fn parse_model_file(text: &str, file: &str) -> Result<ModelDocument, DslError> {
    let (tag, b) = parse_model_raw(text).map_err(|d| DslError::from_raw(file, d))?;
    let spans = b.spans.iter().map(|(k, p)| (k.clone(), p.span(file))).collect();
    Ok(ModelDocument { tag, graph: b.graph, spans })
}

pub fn parse_model(text: &str) -> Result<ModelDocument, DslError> {
    parse_model_file(text, "<input>")
}
