use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;

use super::{typecheck_script, MichInstr, MichTypeError, MichValue, Script};
use crate::syntax::MUTEZ_MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MichContext {
    pub amount: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MichFailure {
    FailWith(MichValue),
    MutezOverflow,
}

impl fmt::Display for MichFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MichFailure::FailWith(v) => write!(f, "FAILWITH {}", super::print_mich_value(v)),
            MichFailure::MutezOverflow => f.write_str("mutez overflow"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InterpError {
    #[error("script failed: {0}")]
    Failed(MichFailure),
    /// The stack did not have the shape an instruction required; cannot
    /// happen on typechecked code.
    #[error("interpreter stuck: {0}")]
    Stuck(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunError {
    #[error("ill-typed script: {0}")]
    Type(#[from] MichTypeError),
    #[error("ill-typed {0} value")]
    BadInput(&'static str),
    #[error("script failed: {0}")]
    Failed(MichFailure),
    #[error("interpreter stuck: {0}")]
    Stuck(String),
}

type Stack = Vec<MichValue>;

/// Runs `code` on `stack` (top first).
pub fn interpret(code: &[MichInstr], stack: Stack, ctx: &MichContext) -> Result<Stack, InterpError> {
    let mut s = stack;
    run(code, &mut s, ctx)?;
    Ok(s)
}

/// Runs a contract: typechecks it, pushes `Pair parameter storage`, runs
/// the code and splits the resulting pair.
pub fn run_contract(
    script: &Script,
    parameter: &MichValue,
    storage: &MichValue,
    amount: u64,
) -> Result<(Vec<MichValue>, MichValue), RunError> {
    typecheck_script(script)?;
    if !parameter.has_type(&script.parameter) {
        return Err(RunError::BadInput("parameter"));
    }
    if !storage.has_type(&script.storage) {
        return Err(RunError::BadInput("storage"));
    }
    let stack = vec![MichValue::pair(parameter.clone(), storage.clone())];
    let out = interpret(&script.code, stack, &MichContext { amount }).map_err(|e| match e {
        InterpError::Failed(f) => RunError::Failed(f),
        InterpError::Stuck(m) => RunError::Stuck(m),
    })?;
    match <[MichValue; 1]>::try_from(out) {
        Ok([MichValue::Pair(ops, st)]) => match *ops {
            MichValue::List(ops) => Ok((ops, *st)),
            _ => Err(RunError::Stuck("result operations are not a list".into())),
        },
        _ => Err(RunError::Stuck("result stack is not a single pair".into())),
    }
}

fn stuck<T>(ins: &MichInstr, s: &Stack) -> Result<T, InterpError> {
    Err(InterpError::Stuck(format!(
        "{} on a stack of {} element(s)",
        super::print_instr(ins),
        s.len()
    )))
}

fn pop(s: &mut Stack, ins: &MichInstr) -> Result<MichValue, InterpError> {
    if s.is_empty() {
        return stuck(ins, s);
    }
    Ok(s.remove(0))
}

fn compare(a: &MichValue, b: &MichValue) -> Option<Ordering> {
    match (a, b) {
        (MichValue::Nat(x), MichValue::Nat(y)) => Some(x.cmp(y)),
        (MichValue::Int(x), MichValue::Int(y)) => Some(x.cmp(y)),
        (MichValue::Mutez(x), MichValue::Mutez(y)) => Some(x.cmp(y)),
        (MichValue::String(x), MichValue::String(y)) => Some(x.as_bytes().cmp(y.as_bytes())),
        (MichValue::Bool(x), MichValue::Bool(y)) => Some(x.cmp(y)),
        _ => None,
    }
}

fn run(code: &[MichInstr], s: &mut Stack, ctx: &MichContext) -> Result<(), InterpError> {
    for ins in code {
        exec(ins, s, ctx)?;
    }
    Ok(())
}

fn exec(ins: &MichInstr, s: &mut Stack, ctx: &MichContext) -> Result<(), InterpError> {
    use MichInstr as I;
    use MichValue as V;
    match ins {
        I::Push(_, v) => s.insert(0, v.clone()),
        I::Unit => s.insert(0, V::Unit),
        I::Pair => {
            let a = pop(s, ins)?;
            let b = pop(s, ins)?;
            s.insert(0, V::pair(a, b));
        }
        I::Car | I::Cdr | I::Unpair => {
            let V::Pair(a, b) = pop(s, ins)? else {
                return stuck(ins, s);
            };
            match ins {
                I::Car => s.insert(0, *a),
                I::Cdr => s.insert(0, *b),
                _ => {
                    s.insert(0, *b);
                    s.insert(0, *a);
                }
            }
        }
        I::Dup => {
            let Some(top) = s.first().cloned() else {
                return stuck(ins, s);
            };
            s.insert(0, top);
        }
        I::Drop => {
            pop(s, ins)?;
        }
        I::Swap => {
            if s.len() < 2 {
                return stuck(ins, s);
            }
            s.swap(0, 1);
        }
        I::Dig(n) => {
            if s.len() <= *n {
                return stuck(ins, s);
            }
            let x = s.remove(*n);
            s.insert(0, x);
        }
        I::Dug(n) => {
            if s.len() <= *n {
                return stuck(ins, s);
            }
            let x = s.remove(0);
            s.insert(*n, x);
        }
        I::Left(_) => {
            let a = pop(s, ins)?;
            s.insert(0, V::Left(Box::new(a)));
        }
        I::Right(_) => {
            let b = pop(s, ins)?;
            s.insert(0, V::Right(Box::new(b)));
        }
        I::IfLeft(l, r) => match pop(s, ins)? {
            V::Left(a) => {
                s.insert(0, *a);
                run(l, s, ctx)?;
            }
            V::Right(b) => {
                s.insert(0, *b);
                run(r, s, ctx)?;
            }
            _ => return stuck(ins, s),
        },
        I::If(t, e) => match pop(s, ins)? {
            V::Bool(true) => run(t, s, ctx)?,
            V::Bool(false) => run(e, s, ctx)?,
            _ => return stuck(ins, s),
        },
        I::IfNone(n, sm) => match pop(s, ins)? {
            V::None => run(n, s, ctx)?,
            V::Some(a) => {
                s.insert(0, *a);
                run(sm, s, ctx)?;
            }
            _ => return stuck(ins, s),
        },
        I::Some => {
            let a = pop(s, ins)?;
            s.insert(0, V::Some(Box::new(a)));
        }
        I::None(_) => s.insert(0, V::None),
        I::Nil(_) => s.insert(0, V::List(Vec::new())),
        I::Cons => {
            let x = pop(s, ins)?;
            let V::List(mut xs) = pop(s, ins)? else {
                return stuck(ins, s);
            };
            xs.insert(0, x);
            s.insert(0, V::List(xs));
        }
        I::Add => {
            let a = pop(s, ins)?;
            let b = pop(s, ins)?;
            let r = match (a, b) {
                (V::Nat(x), V::Nat(y)) => V::Nat(x + y),
                (V::Nat(x), V::Int(y)) => V::Int(BigInt::from(x) + y),
                (V::Int(x), V::Nat(y)) => V::Int(x + BigInt::from(y)),
                (V::Int(x), V::Int(y)) => V::Int(x + y),
                (V::Mutez(x), V::Mutez(y)) => match x.checked_add(y) {
                    Some(z) if z <= MUTEZ_MAX => V::Mutez(z),
                    _ => return Err(InterpError::Failed(MichFailure::MutezOverflow)),
                },
                _ => return stuck(ins, s),
            };
            s.insert(0, r);
        }
        I::Compare => {
            let a = pop(s, ins)?;
            let b = pop(s, ins)?;
            let Some(o) = compare(&a, &b) else {
                return stuck(ins, s);
            };
            s.insert(0, V::Int(BigInt::from(o as i8)));
        }
        I::Ge => match pop(s, ins)? {
            V::Int(x) => s.insert(0, V::Bool(x >= BigInt::from(0))),
            _ => return stuck(ins, s),
        },
        I::Get => {
            let k = pop(s, ins)?;
            let V::Map(m) = pop(s, ins)? else {
                return stuck(ins, s);
            };
            s.insert(
                0,
                match m.get(&k) {
                    Some(v) => V::Some(Box::new(v.clone())),
                    None => V::None,
                },
            );
        }
        I::Update => {
            let k = pop(s, ins)?;
            let v = pop(s, ins)?;
            let V::Map(mut m) = pop(s, ins)? else {
                return stuck(ins, s);
            };
            match v {
                V::Some(v) => {
                    m.insert(k, *v);
                }
                V::None => {
                    m.remove(&k);
                }
                _ => return stuck(ins, s),
            }
            s.insert(0, V::Map(m));
        }
        I::Amount => s.insert(0, V::Mutez(ctx.amount)),
        I::Failwith => {
            let v = pop(s, ins)?;
            return Err(InterpError::Failed(MichFailure::FailWith(v)));
        }
        I::Seq(body) => run(body, s, ctx)?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::michelson::MichType;

    #[test]
    fn push_add() {
        let out = interpret(
            &[MichInstr::Push(MichType::Nat, MichValue::Nat(1u8.into())), MichInstr::Add],
            vec![MichValue::Nat(0u8.into())],
            &MichContext::default(),
        )
        .unwrap();
        assert_eq!(out, vec![MichValue::Nat(1u8.into())]);
    }

    #[test]
    fn get_absent_key() {
        let mut m = BTreeMap::new();
        m.insert(MichValue::String("yes".into()), MichValue::Nat(0u8.into()));
        let out = interpret(
            &[MichInstr::Get],
            vec![MichValue::String("maybe".into()), MichValue::Map(m)],
            &MichContext::default(),
        )
        .unwrap();
        assert_eq!(out, vec![MichValue::None]);
    }

    #[test]
    fn failwith_payload() {
        let err = interpret(
            &[MichInstr::Failwith],
            vec![MichValue::String("you are so cheap!".into())],
            &MichContext::default(),
        )
        .unwrap_err();
        assert_eq!(
            err,
            InterpError::Failed(MichFailure::FailWith(MichValue::String("you are so cheap!".into())))
        );
    }

    #[test]
    fn identity_contract_keeps_storage() {
        let script = Script {
            parameter: MichType::String,
            storage: MichType::Nat,
            code: vec![MichInstr::Cdr, MichInstr::Nil(MichType::Operation), MichInstr::Pair],
        };
        let (ops, st) = run_contract(
            &script,
            &MichValue::String("x".into()),
            &MichValue::Nat(7u8.into()),
            3,
        )
        .unwrap();
        assert!(ops.is_empty());
        assert_eq!(st, MichValue::Nat(7u8.into()));
    }
}
