//! Replica-count equation systems over the naturals.
//!
//! Terms combine natural constants and count variables with `+`, `-` and
//! `*`; relations use `<`, `<=`, `=`, `>`, `>=`. Subtraction is evaluated
//! over the integers, only variable values are restricted to naturals.
//! Products of variables make unbounded feasibility undecidable, so solving
//! is a bounded exhaustive search.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_BOUND: u64 = 8;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CountTerm {
    Const(u64),
    Var(String),
    Add(Box<CountTerm>, Box<CountTerm>),
    Sub(Box<CountTerm>, Box<CountTerm>),
    Mul(Box<CountTerm>, Box<CountTerm>),
}

impl CountTerm {
    pub fn var(name: impl Into<String>) -> Self {
        CountTerm::Var(name.into())
    }

    pub fn eval(&self, a: &ReplicaAssignment) -> Result<i128, SolverError> {
        Ok(match self {
            CountTerm::Const(c) => *c as i128,
            CountTerm::Var(v) => a.get(v).ok_or_else(|| SolverError::UnboundVariable(v.clone()))? as i128,
            CountTerm::Add(x, y) => x.eval(a)?.saturating_add(y.eval(a)?),
            CountTerm::Sub(x, y) => x.eval(a)?.saturating_sub(y.eval(a)?),
            CountTerm::Mul(x, y) => x.eval(a)?.saturating_mul(y.eval(a)?),
        })
    }

    pub fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            CountTerm::Const(_) => {}
            CountTerm::Var(v) => {
                if !out.contains(&v.as_str()) {
                    out.push(v);
                }
            }
            CountTerm::Add(x, y) | CountTerm::Sub(x, y) | CountTerm::Mul(x, y) => {
                x.collect_vars(out);
                y.collect_vars(out);
            }
        }
    }

    /// Replace a variable by a constant.
    pub fn bind(&self, var: &str, value: u64) -> CountTerm {
        match self {
            CountTerm::Var(v) if v == var => CountTerm::Const(value),
            CountTerm::Const(_) | CountTerm::Var(_) => self.clone(),
            CountTerm::Add(x, y) => CountTerm::Add(Box::new(x.bind(var, value)), Box::new(y.bind(var, value))),
            CountTerm::Sub(x, y) => CountTerm::Sub(Box::new(x.bind(var, value)), Box::new(y.bind(var, value))),
            CountTerm::Mul(x, y) => CountTerm::Mul(Box::new(x.bind(var, value)), Box::new(y.bind(var, value))),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            CountTerm::Add(..) | CountTerm::Sub(..) => 1,
            CountTerm::Mul(..) => 2,
            CountTerm::Const(_) | CountTerm::Var(_) => 3,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let p = self.precedence();
        if p < min {
            f.write_str("(")?;
        }
        match self {
            CountTerm::Const(c) => write!(f, "{c}")?,
            CountTerm::Var(v) => f.write_str(v)?,
            CountTerm::Add(x, y) => {
                x.fmt_prec(f, 1)?;
                f.write_str("+")?;
                y.fmt_prec(f, 2)?;
            }
            CountTerm::Sub(x, y) => {
                x.fmt_prec(f, 1)?;
                f.write_str("-")?;
                y.fmt_prec(f, 2)?;
            }
            CountTerm::Mul(x, y) => {
                x.fmt_prec(f, 2)?;
                f.write_str("*")?;
                y.fmt_prec(f, 3)?;
            }
        }
        if p < min {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for CountTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RelOp {
    Lt,
    Le,
    Eq,
    Gt,
    Ge,
}

impl RelOp {
    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Eq => "=",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
        }
    }

    fn holds(self, l: i128, r: i128) -> bool {
        match self {
            RelOp::Lt => l < r,
            RelOp::Le => l <= r,
            RelOp::Eq => l == r,
            RelOp::Gt => l > r,
            RelOp::Ge => l >= r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CountRelation {
    pub lhs: CountTerm,
    pub rel: RelOp,
    pub rhs: CountTerm,
}

impl CountRelation {
    pub fn new(lhs: CountTerm, rel: RelOp, rhs: CountTerm) -> Self {
        CountRelation { lhs, rel, rhs }
    }

    pub fn evaluate(&self, a: &ReplicaAssignment) -> Result<bool, SolverError> {
        Ok(self.rel.holds(self.lhs.eval(a)?, self.rhs.eval(a)?))
    }

    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.lhs.collect_vars(&mut out);
        self.rhs.collect_vars(&mut out);
        out
    }

    pub fn mentions(&self, var: &str) -> bool {
        self.variables().contains(&var)
    }

    pub fn bind(&self, var: &str, value: u64) -> CountRelation {
        CountRelation::new(self.lhs.bind(var, value), self.rel, self.rhs.bind(var, value))
    }
}

impl fmt::Display for CountRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.lhs, self.rel.symbol(), self.rhs)
    }
}

/// Free function form of [`CountRelation::evaluate`].
pub fn evaluate(rel: &CountRelation, a: &ReplicaAssignment) -> Result<bool, SolverError> {
    rel.evaluate(a)
}

/// A conjunction of count relations. `variables` lists every variable in
/// order of first occurrence.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquationSystem {
    relations: Vec<CountRelation>,
    variables: Vec<String>,
}

impl EquationSystem {
    pub fn new(relations: Vec<CountRelation>) -> Self {
        let mut sys = EquationSystem::default();
        for r in relations {
            sys.push(r);
        }
        sys
    }

    pub fn push(&mut self, rel: CountRelation) {
        for v in rel.variables() {
            if !self.variables.iter().any(|x| x == v) {
                self.variables.push(v.to_string());
            }
        }
        self.relations.push(rel);
    }

    pub fn relations(&self) -> &[CountRelation] {
        &self.relations
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn contains(&self, rel: &CountRelation) -> bool {
        self.relations.contains(rel)
    }

    pub fn holds(&self, a: &ReplicaAssignment) -> Result<bool, SolverError> {
        for r in &self.relations {
            if !r.evaluate(a)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn parse(text: &str) -> Result<Self, EquationSyntaxError> {
        parse_relations(text).map(EquationSystem::new)
    }
}

impl fmt::Display for EquationSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.relations.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Replica count per variable-part name.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReplicaAssignment(BTreeMap<String, u64>);

impl ReplicaAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &str) -> Option<u64> {
        self.0.get(var).copied()
    }

    pub fn set(&mut self, var: impl Into<String>, value: u64) {
        self.0.insert(var.into(), value);
    }

    pub fn with(mut self, var: impl Into<String>, value: u64) -> Self {
        self.set(var, value);
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_map(&self) -> &BTreeMap<String, u64> {
        &self.0
    }

    /// Component-wise `self <= other` over the variables of `self`.
    pub fn le(&self, other: &ReplicaAssignment) -> bool {
        self.0.iter().all(|(k, v)| other.get(k).is_some_and(|o| *v <= o))
    }

    /// Render in the given variable order, e.g. `factories=1, absProducts=1`.
    pub fn display_in(&self, order: &[String]) -> String {
        order
            .iter()
            .filter_map(|v| self.get(v).map(|n| format!("{v}={n}")))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl fmt::Display for ReplicaAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

impl<K: Into<String>> FromIterator<(K, u64)> for ReplicaAssignment {
    fn from_iter<T: IntoIterator<Item = (K, u64)>>(iter: T) -> Self {
        ReplicaAssignment(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

/// Every assignment with values in `0..=bound` satisfying all relations,
/// in lexicographic order of the variable list (first variable most
/// significant).
pub fn enumerate_solutions(sys: &EquationSystem, bound: u64) -> Vec<ReplicaAssignment> {
    let vars = sys.variables();
    // each relation is checked as soon as its last variable is assigned
    let mut checks: Vec<Vec<&CountRelation>> = vec![Vec::new(); vars.len() + 1];
    for r in sys.relations() {
        let last = r
            .variables()
            .iter()
            .map(|v| vars.iter().position(|x| x == v).expect("declared") + 1)
            .max()
            .unwrap_or(0);
        checks[last].push(r);
    }
    let mut out = Vec::new();
    let mut current = ReplicaAssignment::new();
    if checks[0].iter().all(|r| r.evaluate(&current).unwrap_or(false)) {
        descend(vars, &checks, bound, 0, &mut current, &mut out);
    }
    out
}

fn descend(
    vars: &[String],
    checks: &[Vec<&CountRelation>],
    bound: u64,
    depth: usize,
    current: &mut ReplicaAssignment,
    out: &mut Vec<ReplicaAssignment>,
) {
    if depth == vars.len() {
        out.push(current.clone());
        return;
    }
    for value in 0..=bound {
        current.set(vars[depth].clone(), value);
        if checks[depth + 1].iter().all(|r| r.evaluate(current).unwrap_or(false)) {
            descend(vars, checks, bound, depth + 1, current, out);
        }
    }
    current.0.remove(&vars[depth]);
}

/// Pareto-minimal solutions (component-wise order), in enumeration order.
pub fn minimal_solutions(sys: &EquationSystem, bound: u64) -> Vec<ReplicaAssignment> {
    pareto_minimal(&enumerate_solutions(sys, bound))
}

pub fn pareto_minimal(solutions: &[ReplicaAssignment]) -> Vec<ReplicaAssignment> {
    solutions
        .iter()
        .filter(|s| !solutions.iter().any(|o| o != *s && o.le(s)))
        .cloned()
        .collect()
}

/// Minimal solutions first, then the remaining solutions in enumeration
/// order. Used where the smallest witnesses should be tried first.
pub fn solutions_minimal_first(sys: &EquationSystem, bound: u64) -> Vec<ReplicaAssignment> {
    let all = enumerate_solutions(sys, bound);
    let minimal = pareto_minimal(&all);
    let rest = all.into_iter().filter(|s| !minimal.contains(s));
    minimal.clone().into_iter().chain(rest).collect()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error("unbound count variable `{0}`")]
    UnboundVariable(String),
}

/// Syntax error in an equation list. `offset` is a byte offset into the
/// parsed text.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{message}")]
pub struct EquationSyntaxError {
    pub offset: usize,
    pub len: usize,
    pub message: String,
}

/// Parse a comma-separated relation list such as
/// `Composite>=0, operations>0, leaves>0`.
pub fn parse_relations(text: &str) -> Result<Vec<CountRelation>, EquationSyntaxError> {
    let mut p = EqParser { src: text, pos: 0 };
    let mut out = Vec::new();
    p.skip_ws();
    if p.at_end() {
        return Ok(out);
    }
    loop {
        out.push(p.relation()?);
        p.skip_ws();
        if p.at_end() {
            return Ok(out);
        }
        p.expect(",")?;
    }
}

struct EqParser<'a> {
    src: &'a str,
    pos: usize,
}

impl EqParser<'_> {
    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn error(&self, message: impl Into<String>) -> EquationSyntaxError {
        let len = self.rest().chars().next().map_or(1, char::len_utf8);
        EquationSyntaxError { offset: self.pos, len, message: message.into() }
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), EquationSyntaxError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{tok}`")))
        }
    }

    fn relation(&mut self) -> Result<CountRelation, EquationSyntaxError> {
        let lhs = self.sum()?;
        self.skip_ws();
        let rel = [
            ("<=", RelOp::Le),
            (">=", RelOp::Ge),
            ("≤", RelOp::Le),
            ("≥", RelOp::Ge),
            ("<", RelOp::Lt),
            (">", RelOp::Gt),
            ("=", RelOp::Eq),
        ]
        .into_iter()
        .find(|(s, _)| self.eat(s))
        .map(|(_, r)| r)
        .ok_or_else(|| self.error("expected one of `<`, `<=`, `=`, `>`, `>=`"))?;
        let rhs = self.sum()?;
        Ok(CountRelation::new(lhs, rel, rhs))
    }

    fn sum(&mut self) -> Result<CountTerm, EquationSyntaxError> {
        let mut t = self.product()?;
        loop {
            if self.eat("+") {
                t = CountTerm::Add(Box::new(t), Box::new(self.product()?));
            } else if self.eat("-") || self.eat("−") {
                t = CountTerm::Sub(Box::new(t), Box::new(self.product()?));
            } else {
                return Ok(t);
            }
        }
    }

    fn product(&mut self) -> Result<CountTerm, EquationSyntaxError> {
        let mut t = self.atom()?;
        while self.eat("*") || self.eat("×") {
            t = CountTerm::Mul(Box::new(t), Box::new(self.atom()?));
        }
        Ok(t)
    }

    fn atom(&mut self) -> Result<CountTerm, EquationSyntaxError> {
        self.skip_ws();
        if self.eat("(") {
            let t = self.sum()?;
            self.expect(")")?;
            return Ok(t);
        }
        let rest = self.rest();
        let digits = rest.bytes().take_while(u8::is_ascii_digit).count();
        if digits > 0 {
            let n = rest[..digits].parse::<u64>().map_err(|_| self.error("number out of range"))?;
            self.pos += digits;
            return Ok(CountTerm::Const(n));
        }
        let ident = rest
            .char_indices()
            .take_while(|(i, c)| c.is_ascii_alphabetic() || *c == '_' || (*i > 0 && c.is_ascii_digit()))
            .count();
        if ident > 0 {
            let name = rest[..ident].to_string();
            self.pos += ident;
            return Ok(CountTerm::Var(name));
        }
        Err(self.error("expected a number, a count variable or `(`"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sys(text: &str) -> EquationSystem {
        EquationSystem::parse(text).unwrap()
    }

    fn a(pairs: &[(&str, u64)]) -> ReplicaAssignment {
        pairs.iter().map(|(k, v)| (*k, *v)).collect()
    }

    #[test]
    fn evaluate_examples() {
        let r = sys("factories=concProducts").relations()[0].clone();
        assert!(evaluate(&r, &a(&[("factories", 2), ("concProducts", 2)])).unwrap());
        let r = sys("n>0").relations()[0].clone();
        assert!(!evaluate(&r, &a(&[("n", 0)])).unwrap());
        let r = sys("2*k-1 >= 3").relations()[0].clone();
        assert!(evaluate(&r, &a(&[("k", 2)])).unwrap());
        assert_eq!(evaluate(&r, &a(&[])), Err(SolverError::UnboundVariable("k".into())));
    }

    #[test]
    fn subtraction_goes_negative_mid_term() {
        let r = sys("a-b+2>=1").relations()[0].clone();
        assert!(evaluate(&r, &a(&[("a", 0), ("b", 1)])).unwrap());
    }

    #[test]
    fn abstract_factory_at_bound_one() {
        let s = sys("factories>0, absProducts>0, factories=concProducts");
        let sols = enumerate_solutions(&s, 1);
        assert_eq!(sols, vec![a(&[("factories", 1), ("absProducts", 1), ("concProducts", 1)])]);
    }

    #[test]
    fn infeasible_and_empty_systems() {
        assert!(enumerate_solutions(&sys("n>0, n<1"), 7).is_empty());
        assert_eq!(enumerate_solutions(&EquationSystem::default(), 5), vec![ReplicaAssignment::new()]);
        assert!(minimal_solutions(&sys("n>0, n<1"), 4).is_empty());
    }

    #[test]
    fn flyweight_minimal() {
        let s = sys("concFlyweights>0, unsharedFlyweights>=0");
        assert_eq!(minimal_solutions(&s, 3), vec![a(&[("concFlyweights", 1), ("unsharedFlyweights", 0)])]);
    }

    #[test]
    fn antichain_of_three() {
        let s = sys("a>=0, b>=0, a+b=2");
        let m = minimal_solutions(&s, 2);
        assert_eq!(m, vec![a(&[("a", 0), ("b", 2)]), a(&[("a", 1), ("b", 1)]), a(&[("a", 2), ("b", 0)])]);
    }

    #[test]
    fn caption_round_trip() {
        let text = "AbstractFactory>=0, factories>0, absProducts>0, factories=concProducts";
        assert_eq!(sys(text).to_string(), text);
        assert_eq!(sys("a - (b - c) >= 2 * (x + 1)").to_string(), "a-(b-c)>=2*(x+1)");
    }

    #[test]
    fn syntax_errors_have_offsets() {
        let e = EquationSystem::parse("a>0, b >").unwrap_err();
        assert_eq!(e.offset, 8);
        let e = EquationSystem::parse("a>0 b>0").unwrap_err();
        assert_eq!(e.offset, 4);
        assert!(EquationSystem::parse("a ! 3").is_err());
    }

    fn brute(sys: &EquationSystem, bound: u64) -> Vec<ReplicaAssignment> {
        let vars = sys.variables();
        let total = (bound + 1).pow(vars.len() as u32);
        let mut out = Vec::new();
        for code in 0..total {
            let mut rest = code;
            let mut digits = vec![0; vars.len()];
            for d in digits.iter_mut().rev() {
                *d = rest % (bound + 1);
                rest /= bound + 1;
            }
            let asg: ReplicaAssignment = vars.iter().cloned().zip(digits).collect();
            if sys.holds(&asg).unwrap() {
                out.push(asg);
            }
        }
        out
    }

    fn term_strategy() -> impl Strategy<Value = CountTerm> {
        let leaf = prop_oneof![
            (0u64..4).prop_map(CountTerm::Const),
            prop::sample::select(vec!["a", "b", "c"]).prop_map(CountTerm::var),
        ];
        leaf.prop_recursive(2, 6, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(x, y)| CountTerm::Add(Box::new(x), Box::new(y))),
                (inner.clone(), inner.clone()).prop_map(|(x, y)| CountTerm::Sub(Box::new(x), Box::new(y))),
                (inner.clone(), inner).prop_map(|(x, y)| CountTerm::Mul(Box::new(x), Box::new(y))),
            ]
        })
    }

    fn relation_strategy() -> impl Strategy<Value = CountRelation> {
        let op = prop::sample::select(vec![RelOp::Lt, RelOp::Le, RelOp::Eq, RelOp::Gt, RelOp::Ge]);
        (term_strategy(), op, term_strategy()).prop_map(|(l, o, r)| CountRelation::new(l, o, r))
    }

    proptest! {
        #[test]
        fn matches_brute_force_and_is_monotone(rels in prop::collection::vec(relation_strategy(), 0..4), bound in 0u64..5) {
            let s = EquationSystem::new(rels);
            let sols = enumerate_solutions(&s, bound);
            prop_assert_eq!(&sols, &brute(&s, bound));
            let bigger = enumerate_solutions(&s, bound + 1);
            for x in &sols {
                prop_assert!(bigger.contains(x));
            }
            let min = minimal_solutions(&s, bound);
            for m in &min {
                prop_assert!(sols.contains(m));
                prop_assert!(!sols.iter().any(|o| o != m && o.le(m)));
            }
        }

        #[test]
        fn display_reparses(rels in prop::collection::vec(relation_strategy(), 1..4)) {
            let s = EquationSystem::new(rels);
            let again = EquationSystem::parse(&s.to_string()).unwrap();
            prop_assert_eq!(again.to_string(), s.to_string());
            for asg in brute(&s, 2) {
                prop_assert!(again.holds(&asg).unwrap());
            }
        }
    }
}
