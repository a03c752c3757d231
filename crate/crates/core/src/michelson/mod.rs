//! A self-contained Michelson subset: types, instructions, values, a stack
//! typechecker, an interpreter and a concrete-syntax printer.

mod interp;
mod printer;
mod typecheck;

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};

pub use interp::{interpret, run_contract, InterpError, MichContext, MichFailure, RunError};
pub use printer::{print_instr, print_mich_type, print_mich_value, print_script, print_seq};
pub use typecheck::{typecheck, typecheck_script, MichTypeError, StackTy};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MichType {
    Unit,
    Nat,
    Int,
    String,
    Mutez,
    Bool,
    Operation,
    Pair(Box<MichType>, Box<MichType>),
    Or(Box<MichType>, Box<MichType>),
    Option(Box<MichType>),
    List(Box<MichType>),
    Map(Box<MichType>, Box<MichType>),
}

impl MichType {
    pub fn pair(a: MichType, b: MichType) -> MichType {
        MichType::Pair(Box::new(a), Box::new(b))
    }

    pub fn or(a: MichType, b: MichType) -> MichType {
        MichType::Or(Box::new(a), Box::new(b))
    }

    pub fn option(a: MichType) -> MichType {
        MichType::Option(Box::new(a))
    }

    pub fn list(a: MichType) -> MichType {
        MichType::List(Box::new(a))
    }

    pub fn map(k: MichType, v: MichType) -> MichType {
        MichType::Map(Box::new(k), Box::new(v))
    }

    /// Leaf types accepted by COMPARE and as map keys.
    pub fn is_comparable(&self) -> bool {
        matches!(
            self,
            MichType::Nat | MichType::Int | MichType::String | MichType::Mutez | MichType::Bool
        )
    }

    pub fn contains_operation(&self) -> bool {
        match self {
            MichType::Operation => true,
            MichType::Pair(a, b) | MichType::Or(a, b) | MichType::Map(a, b) => {
                a.contains_operation() || b.contains_operation()
            }
            MichType::Option(a) | MichType::List(a) => a.contains_operation(),
            _ => false,
        }
    }

    /// Types whose values can appear in PUSH and FAILWITH.
    pub fn is_pushable(&self) -> bool {
        !self.contains_operation()
    }
}

/// Values. Map keys are kept in Michelson's comparable order, which
/// coincides with the derived order on same-typed comparable values.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MichValue {
    Unit,
    Nat(BigUint),
    Int(BigInt),
    Mutez(u64),
    String(String),
    Bool(bool),
    Pair(Box<MichValue>, Box<MichValue>),
    Left(Box<MichValue>),
    Right(Box<MichValue>),
    Some(Box<MichValue>),
    None,
    List(Vec<MichValue>),
    Map(BTreeMap<MichValue, MichValue>),
    Operation(String),
}

impl MichValue {
    pub fn pair(a: MichValue, b: MichValue) -> MichValue {
        MichValue::Pair(Box::new(a), Box::new(b))
    }

    /// Whether the value inhabits `t`.
    pub fn has_type(&self, t: &MichType) -> bool {
        match (self, t) {
            (MichValue::Unit, MichType::Unit)
            | (MichValue::Nat(_), MichType::Nat)
            | (MichValue::Int(_), MichType::Int)
            | (MichValue::String(_), MichType::String)
            | (MichValue::Bool(_), MichType::Bool)
            | (MichValue::Operation(_), MichType::Operation)
            | (MichValue::None, MichType::Option(_)) => true,
            (MichValue::Mutez(m), MichType::Mutez) => *m <= crate::syntax::MUTEZ_MAX,
            (MichValue::Pair(a, b), MichType::Pair(ta, tb)) => a.has_type(ta) && b.has_type(tb),
            (MichValue::Left(a), MichType::Or(ta, _)) => a.has_type(ta),
            (MichValue::Right(b), MichType::Or(_, tb)) => b.has_type(tb),
            (MichValue::Some(a), MichType::Option(ta)) => a.has_type(ta),
            (MichValue::List(xs), MichType::List(te)) => xs.iter().all(|x| x.has_type(te)),
            (MichValue::Map(m), MichType::Map(tk, tv)) => {
                tk.is_comparable() && m.iter().all(|(k, v)| k.has_type(tk) && v.has_type(tv))
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MichInstr {
    Push(MichType, MichValue),
    Unit,
    Pair,
    Car,
    Cdr,
    Unpair,
    Dup,
    Drop,
    Swap,
    Dig(usize),
    Dug(usize),
    /// `LEFT b` : `a : S -> or a b : S`
    Left(MichType),
    /// `RIGHT a` : `b : S -> or a b : S`
    Right(MichType),
    IfLeft(Vec<MichInstr>, Vec<MichInstr>),
    If(Vec<MichInstr>, Vec<MichInstr>),
    IfNone(Vec<MichInstr>, Vec<MichInstr>),
    Some,
    None(MichType),
    Nil(MichType),
    Cons,
    Add,
    Compare,
    Ge,
    Get,
    Update,
    Amount,
    Failwith,
    Seq(Vec<MichInstr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Script {
    pub parameter: MichType,
    pub storage: MichType,
    pub code: Vec<MichInstr>,
}
