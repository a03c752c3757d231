//! Albert abstract syntax, parser and pretty-printer.

mod lexer;
mod parser;
mod printer;

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};

pub use lexer::Pos;
pub use parser::{parse_program, parse_type, parse_value, ParseError};
pub use printer::{print_albert, print_instruction_head, print_rhs, print_type, print_value};

/// A record label, variant constructor, variable or function name.
///
/// Labels and variables share one namespace; ordering is bytewise.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(String);

impl Label {
    pub fn new(name: impl Into<String>) -> Self {
        Label(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_valid_ident(s: &str) -> bool {
        let mut chars = s.chars();
        match chars.next() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return false,
        }
        chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label(s.to_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PrimType {
    Nat,
    Int,
    String,
    Mutez,
    Bool,
    Operation,
}

impl PrimType {
    pub fn name(self) -> &'static str {
        match self {
            PrimType::Nat => "nat",
            PrimType::Int => "int",
            PrimType::String => "string",
            PrimType::Mutez => "mutez",
            PrimType::Bool => "bool",
            PrimType::Operation => "operation",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "nat" => PrimType::Nat,
            "int" => PrimType::Int,
            "string" => PrimType::String,
            "mutez" => PrimType::Mutez,
            "bool" => PrimType::Bool,
            "operation" => PrimType::Operation,
            _ => return None,
        })
    }

    /// Types usable as map keys.
    pub fn is_comparable(self) -> bool {
        !matches!(self, PrimType::Operation)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Type {
    Record(Vec<(Label, Type)>),
    Variant(Vec<(Label, Type)>),
    Prim(PrimType),
    List(Box<Type>),
    Map(Box<Type>, Box<Type>),
    Option(Box<Type>),
    Alias(Label),
}

impl Type {
    pub fn unit() -> Type {
        Type::Record(Vec::new())
    }

    pub fn nat() -> Type {
        Type::Prim(PrimType::Nat)
    }

    pub fn int() -> Type {
        Type::Prim(PrimType::Int)
    }

    pub fn string() -> Type {
        Type::Prim(PrimType::String)
    }

    pub fn mutez() -> Type {
        Type::Prim(PrimType::Mutez)
    }

    pub fn bool() -> Type {
        Type::Prim(PrimType::Bool)
    }

    pub fn operation() -> Type {
        Type::Prim(PrimType::Operation)
    }

    pub fn list(elem: Type) -> Type {
        Type::List(Box::new(elem))
    }

    pub fn map(key: Type, val: Type) -> Type {
        Type::Map(Box::new(key), Box::new(val))
    }

    pub fn option(elem: Type) -> Type {
        Type::Option(Box::new(elem))
    }

    pub fn record<I, L>(fields: I) -> Type
    where
        I: IntoIterator<Item = (L, Type)>,
        L: Into<Label>,
    {
        Type::Record(fields.into_iter().map(|(l, t)| (l.into(), t)).collect())
    }

    pub fn variant<I, L>(ctors: I) -> Type
    where
        I: IntoIterator<Item = (L, Type)>,
        L: Into<Label>,
    {
        Type::Variant(ctors.into_iter().map(|(l, t)| (l.into(), t)).collect())
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, Type::Record(fields) if fields.is_empty())
    }

    pub fn record_fields(&self) -> Option<&[(Label, Type)]> {
        match self {
            Type::Record(fields) => Some(fields),
            _ => None,
        }
    }

    /// Constructors of a type seen as a variant: `bool` is `[False : {} | True : {}]`
    /// and `option a` is `[None : {} | Some : a]`.
    pub fn variant_view(&self) -> Option<Vec<(Label, Type)>> {
        match self {
            Type::Variant(ctors) => Some(ctors.clone()),
            Type::Prim(PrimType::Bool) => Some(vec![
                (Label::from("False"), Type::unit()),
                (Label::from("True"), Type::unit()),
            ]),
            Type::Option(elem) => Some(vec![
                (Label::from("None"), Type::unit()),
                (Label::from("Some"), (**elem).clone()),
            ]),
            _ => None,
        }
    }

    pub fn contains_operation(&self) -> bool {
        match self {
            Type::Prim(p) => *p == PrimType::Operation,
            Type::Record(fs) | Type::Variant(fs) => fs.iter().any(|(_, t)| t.contains_operation()),
            Type::List(t) | Type::Option(t) => t.contains_operation(),
            Type::Map(k, v) => k.contains_operation() || v.contains_operation(),
            Type::Alias(_) => false,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_type(self))
    }
}

/// Albert values. Records and maps are kept sorted by label / key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Record(Vec<(Label, Value)>),
    Variant {
        ctor: Label,
        payload: Box<Value>,
        ty: Type,
    },
    Nat(BigUint),
    Int(BigInt),
    Mutez(u64),
    String(String),
    Bool(bool),
    List(Vec<Value>, Type),
    Map(BTreeMap<Value, Value>, Type, Type),
    None(Type),
    Some(Box<Value>),
    Operation(String),
}

/// Largest representable mutez amount, `2^63 - 1`.
pub const MUTEZ_MAX: u64 = i64::MAX as u64;

impl Value {
    pub fn unit() -> Value {
        Value::Record(Vec::new())
    }

    pub fn nat(n: u64) -> Value {
        Value::Nat(BigUint::from(n))
    }

    pub fn int(n: i64) -> Value {
        Value::Int(BigInt::from(n))
    }

    pub fn string(s: impl Into<String>) -> Value {
        Value::String(s.into())
    }

    /// Builds a record value, sorting fields by label.
    pub fn record<I, L>(fields: I) -> Value
    where
        I: IntoIterator<Item = (L, Value)>,
        L: Into<Label>,
    {
        let mut fields: Vec<(Label, Value)> =
            fields.into_iter().map(|(l, v)| (l.into(), v)).collect();
        fields.sort_by(|a, b| a.0.cmp(&b.0));
        Value::Record(fields)
    }

    pub fn field(&self, label: &str) -> Option<&Value> {
        match self {
            Value::Record(fields) => fields.iter().find(|(l, _)| l.as_str() == label).map(|(_, v)| v),
            _ => None,
        }
    }

    /// The type of a value. Every value carries enough annotations to
    /// determine it uniquely.
    pub fn type_of(&self) -> Type {
        match self {
            Value::Record(fields) => {
                Type::Record(fields.iter().map(|(l, v)| (l.clone(), v.type_of())).collect())
            }
            Value::Variant { ty, .. } => ty.clone(),
            Value::Nat(_) => Type::nat(),
            Value::Int(_) => Type::int(),
            Value::Mutez(_) => Type::mutez(),
            Value::String(_) => Type::string(),
            Value::Bool(_) => Type::bool(),
            Value::List(_, t) => Type::list(t.clone()),
            Value::Map(_, k, v) => Type::map(k.clone(), v.clone()),
            Value::None(t) => Type::option(t.clone()),
            Value::Some(v) => Type::option(v.type_of()),
            Value::Operation(_) => Type::operation(),
        }
    }

    pub fn contains_operation(&self) -> bool {
        match self {
            Value::Operation(_) => true,
            Value::Record(fields) => fields.iter().any(|(_, v)| v.contains_operation()),
            Value::Variant { payload, .. } => payload.contains_operation(),
            Value::List(items, _) => items.iter().any(Value::contains_operation),
            Value::Map(entries, _, _) => entries
                .iter()
                .any(|(k, v)| k.contains_operation() || v.contains_operation()),
            Value::Some(v) => v.contains_operation(),
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_value(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Arg {
    Var(Label),
    Val(Value),
    /// `{l1 = x1; ...; ln = xn}`; never empty, `{}` parses as a value.
    Record(Vec<(Label, Label)>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FunName {
    Dup,
    AssertSome,
    User(Label),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Ge,
    MapGet,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Branch<T> {
    pub ctor: Label,
    pub binder: Label,
    pub body: T,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Rhs {
    Arg(Arg),
    Apply(FunName, Arg),
    Proj(Label, Label),
    /// `{x with l1 = y1; ...}`
    Update(Label, Vec<(Label, Label)>),
    Match(Label, Vec<Branch<Rhs>>),
    /// `(C arg : ty)`; the annotation is omitted only for the bare `Some arg` form.
    /// The argument is never a literal: `(C 1 : ty)` parses as a variant value.
    Construct(Label, Arg, Option<Type>),
    BinOp(BinOp, Label, Label),
    /// `update map key value`
    MapUpdate(Label, Label, Label),
    Amount,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Lhs {
    Var(Label),
    Record(Vec<(Label, Label)>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Instruction {
    Noop,
    Seq(Box<Instruction>, Box<Instruction>),
    Assign(Lhs, Rhs),
    Drop(Label),
    Match(Label, Vec<Branch<Instruction>>),
    /// Aborts execution; only allowed in tail position.
    Failwith(Arg),
}

impl Instruction {
    /// Right-nested sequence of a list of instructions (`Noop` if empty).
    pub fn seq(instrs: impl IntoIterator<Item = Instruction>) -> Instruction {
        let mut instrs: Vec<Instruction> = instrs.into_iter().collect();
        let mut acc = match instrs.pop() {
            Some(last) => last,
            None => return Instruction::Noop,
        };
        while let Some(prev) = instrs.pop() {
            acc = Instruction::Seq(Box::new(prev), Box::new(acc));
        }
        acc
    }

    /// Flattens nested sequences into a list.
    pub fn flatten(&self) -> Vec<&Instruction> {
        let mut out = Vec::new();
        fn go<'a>(i: &'a Instruction, out: &mut Vec<&'a Instruction>) {
            match i {
                Instruction::Seq(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                other => out.push(other),
            }
        }
        go(self, &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Function {
    pub name: Label,
    pub input: Type,
    pub output: Type,
    pub body: Instruction,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub type_aliases: Vec<(Label, Type)>,
    pub functions: Vec<Function>,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name.as_str() == name)
    }
}

/// Identifiers that cannot be used as variables, labels or function names.
pub const KEYWORDS: &[&str] = &[
    "def",
    "type",
    "noop",
    "drop",
    "dup",
    "match",
    "with",
    "end",
    "failwith",
    "assert_some",
    "amount",
    "update",
    "Some",
    "None",
    "True",
    "False",
    "Operation",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}
