use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::lang::NodeId;

pub type FrameId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    Add,
    Sub,
    Mul,
    Square,
    Identity,
    Increment,
}

impl Builtin {
    pub const ALL: [Builtin; 6] = [
        Builtin::Add,
        Builtin::Sub,
        Builtin::Mul,
        Builtin::Square,
        Builtin::Identity,
        Builtin::Increment,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Add => "add",
            Builtin::Sub => "sub",
            Builtin::Mul => "mul",
            Builtin::Square => "square",
            Builtin::Identity => "identity",
            Builtin::Increment => "increment",
        }
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        Builtin::ALL.into_iter().find(|b| b.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::Add | Builtin::Sub | Builtin::Mul => 2,
            _ => 1,
        }
    }
}

/// A user-defined function value together with the frame it closed over.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Closure {
    /// `FunctionDef` or `Lambda` node in the traced program.
    pub function: NodeId,
    pub env: FrameId,
    /// Def name, or `<lambda>`.
    pub name: String,
    /// Canonical source of the function, used to compare closures across
    /// two different programs.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Value {
    Int(#[serde(with = "bigint_number")] BigInt),
    Bool(bool),
    None,
    Builtin(Builtin),
    Closure(Closure),
}

impl Value {
    pub fn int(v: impl Into<BigInt>) -> Value {
        Value::Int(v.into())
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Bool(_) => "bool",
            Value::None => "NoneType",
            Value::Builtin(_) => "builtin_function",
            Value::Closure(_) => "function",
        }
    }

    /// Equality across programs: closures compare by name and source text
    /// rather than by node and frame ids.
    pub fn equivalent(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Closure(a), Value::Closure(b)) => a.name == b.name && a.source == b.source,
            _ => self == other,
        }
    }

    /// Whether the value has a literal spelling (ints, bools, None, builtin
    /// names).
    pub fn is_first_order(&self) -> bool {
        !matches!(self, Value::Closure(_))
    }

    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(true) => f.write_str("True"),
            Value::Bool(false) => f.write_str("False"),
            Value::None => f.write_str("None"),
            Value::Builtin(b) => f.write_str(b.name()),
            Value::Closure(c) => write!(f, "<function {}>", c.name),
        }
    }
}

/// Integers serialize as bare JSON numbers of any size.
mod bigint_number {
    use super::*;
    use serde::de::Error;

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        let n: serde_json::Number = v
            .to_string()
            .parse()
            .map_err(|_| serde::ser::Error::custom("integer not representable"))?;
        n.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let n = serde_json::Number::deserialize(d)?;
        n.to_string()
            .parse::<BigInt>()
            .map_err(|_| D::Error::custom(format!("expected an integer, found {n}")))
    }
}
