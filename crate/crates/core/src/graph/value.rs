use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Sort of an attribute slot.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sort {
    String,
    Boolean,
    Integer,
    Enum(Vec<String>),
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::String => f.write_str("string"),
            Sort::Boolean => f.write_str("boolean"),
            Sort::Integer => f.write_str("integer"),
            Sort::Enum(lits) => write!(f, "enum{{{}}}", lits.join(",")),
        }
    }
}

/// A ground attribute value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Value {
    Str(String),
    Bool(bool),
    Int(i64),
    Enum(String),
}

impl Value {
    pub fn fits(&self, sort: &Sort) -> bool {
        match (self, sort) {
            (Value::Str(_), Sort::String) => true,
            (Value::Bool(_), Sort::Boolean) => true,
            (Value::Int(_), Sort::Integer) => true,
            (Value::Enum(lit), Sort::Enum(lits)) => lits.iter().any(|l| l == lit),
            _ => false,
        }
    }

    /// Reinterpret a literal for a declared sort; string literals become
    /// enum literals when the slot is an enumeration.
    pub fn coerce(self, sort: &Sort) -> Value {
        match (self, sort) {
            (Value::Str(s), Sort::Enum(_)) => Value::Enum(s),
            (Value::Enum(s), Sort::String) => Value::Str(s),
            (v, _) => v,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Enum(s) => f.write_str(s),
        }
    }
}

/// A sorted attribute variable of a symbolic graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Var {
    pub name: String,
    pub sort: Sort,
}

impl Var {
    pub fn new(name: impl Into<String>, sort: Sort) -> Self {
        Var { name: name.into(), sort }
    }
}

/// Content of an attribute slot: either a constant or a variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AttributeValue {
    Const(Value),
    Var(Var),
}

impl AttributeValue {
    pub fn str(s: impl Into<String>) -> Self {
        AttributeValue::Const(Value::Str(s.into()))
    }

    pub fn bool(b: bool) -> Self {
        AttributeValue::Const(Value::Bool(b))
    }

    pub fn int(i: i64) -> Self {
        AttributeValue::Const(Value::Int(i))
    }

    pub fn enumeration(s: impl Into<String>) -> Self {
        AttributeValue::Const(Value::Enum(s.into()))
    }

    pub fn var(name: impl Into<String>, sort: Sort) -> Self {
        AttributeValue::Var(Var::new(name, sort))
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            AttributeValue::Var(v) => Some(v),
            AttributeValue::Const(_) => None,
        }
    }

    pub fn as_const(&self) -> Option<&Value> {
        match self {
            AttributeValue::Const(c) => Some(c),
            AttributeValue::Var(_) => None,
        }
    }

    pub fn fits(&self, sort: &Sort) -> bool {
        match self {
            AttributeValue::Const(c) => c.fits(sort),
            AttributeValue::Var(v) => &v.sort == sort,
        }
    }
}

impl fmt::Display for AttributeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttributeValue::Const(c) => write!(f, "{c}"),
            AttributeValue::Var(v) => write!(f, "?{}", v.name),
        }
    }
}

/// Comparison operator of a relational atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    fn holds(self, ord: Ordering) -> bool {
        match self {
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Ne => ord != Ordering::Equal,
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::Ge => ord != Ordering::Less,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Operand {
    Var(String),
    Const(Value),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Var(v) => write!(f, "?{v}"),
            Operand::Const(c) => write!(f, "{c}"),
        }
    }
}

/// One conjunct of the attribute formula of a symbolic graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub lhs: Operand,
    pub op: CmpOp,
    pub rhs: Operand,
}

impl Atom {
    pub fn new(lhs: Operand, op: CmpOp, rhs: Operand) -> Self {
        Atom { lhs, op, rhs }
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        [&self.lhs, &self.rhs].into_iter().filter_map(|o| match o {
            Operand::Var(v) => Some(v.as_str()),
            Operand::Const(_) => None,
        })
    }

    /// Rewrite both operands through a substitution. Unmapped variables are
    /// kept as they are.
    pub fn substitute(&self, subst: &BTreeMap<String, AttributeValue>) -> Atom {
        let map = |o: &Operand| match o {
            Operand::Var(v) => match subst.get(v) {
                Some(AttributeValue::Var(w)) => Operand::Var(w.name.clone()),
                Some(AttributeValue::Const(c)) => Operand::Const(c.clone()),
                None => o.clone(),
            },
            Operand::Const(_) => o.clone(),
        };
        Atom::new(map(&self.lhs), self.op, map(&self.rhs))
    }

    /// Three-valued evaluation: `Some(b)` when decided, `None` when the atom
    /// still relates two distinct variables.
    pub fn evaluate(&self) -> Option<bool> {
        match (&self.lhs, &self.rhs) {
            (Operand::Const(a), Operand::Const(b)) => Some(compare_values(a, b, self.op)),
            (Operand::Var(a), Operand::Var(b)) if a == b => {
                Some(matches!(self.op, CmpOp::Eq | CmpOp::Le | CmpOp::Ge))
            }
            _ => None,
        }
    }

    /// Evaluate under a (possibly partial) substitution.
    pub fn evaluate_with(&self, subst: &BTreeMap<String, AttributeValue>) -> Option<bool> {
        self.substitute(subst).evaluate()
    }
}

fn compare_values(a: &Value, b: &Value, op: CmpOp) -> bool {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => op.holds(x.cmp(y)),
        (Value::Str(x), Value::Str(y)) => op.holds(x.cmp(y)),
        _ => match op {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            // ordering between non-numeric, non-string sorts is undefined
            _ => false,
        },
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.op.symbol(), self.rhs)
    }
}
