use std::fmt;

use super::{print_instr, print_mich_type, MichInstr, MichType, Script};

/// A stack type, top first, or the type of a computation that has failed
/// (which unifies with any stack).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StackTy {
    Live(Vec<MichType>),
    Failed,
}

impl fmt::Display for StackTy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StackTy::Failed => f.write_str("<failed>"),
            StackTy::Live(s) => {
                let items: Vec<String> = s.iter().map(print_mich_type).collect();
                write!(f, "[{}]", items.join(" : "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("at instruction {location} ({instr}): {message}; stack was {stack}")]
pub struct MichTypeError {
    /// Dotted index path, e.g. `4.else.1`.
    pub location: String,
    pub instr: String,
    pub stack: String,
    pub message: String,
}

/// Typechecks `code` from `input`, returning the output stack type.
pub fn typecheck(code: &[MichInstr], input: StackTy) -> Result<StackTy, MichTypeError> {
    seq(code, input, "")
}

/// Checks the contract convention `pair p s : [] -> pair (list operation) s : []`.
pub fn typecheck_script(script: &Script) -> Result<(), MichTypeError> {
    let top = |message: String| MichTypeError {
        location: "script".into(),
        instr: "code".into(),
        stack: String::new(),
        message,
    };
    for (what, t) in [("parameter", &script.parameter), ("storage", &script.storage)] {
        if !t.is_pushable() {
            return Err(top(format!("{what} type may not contain operation")));
        }
    }
    let input = StackTy::Live(vec![MichType::pair(
        script.parameter.clone(),
        script.storage.clone(),
    )]);
    let expected = StackTy::Live(vec![MichType::pair(
        MichType::list(MichType::Operation),
        script.storage.clone(),
    )]);
    match typecheck(&script.code, input)? {
        StackTy::Failed => Ok(()),
        out if out == expected => Ok(()),
        out => Err(top(format!("code returns {out}, expected {expected}"))),
    }
}

fn loc(prefix: &str, i: usize) -> String {
    if prefix.is_empty() {
        (i + 1).to_string()
    } else {
        format!("{prefix}.{}", i + 1)
    }
}

fn seq(code: &[MichInstr], input: StackTy, prefix: &str) -> Result<StackTy, MichTypeError> {
    let mut st = input;
    for (i, ins) in code.iter().enumerate() {
        let location = loc(prefix, i);
        let s = match st {
            StackTy::Failed => {
                return Err(MichTypeError {
                    location,
                    instr: print_instr(ins),
                    stack: st.to_string(),
                    message: "instruction follows FAILWITH".into(),
                })
            }
            StackTy::Live(s) => s,
        };
        st = step(ins, s, &location)?;
    }
    Ok(st)
}

fn merge(a: StackTy, b: StackTy, e: impl FnOnce(String) -> MichTypeError) -> Result<StackTy, MichTypeError> {
    match (a, b) {
        (StackTy::Failed, x) | (x, StackTy::Failed) => Ok(x),
        (a, b) if a == b => Ok(a),
        (a, b) => Err(e(format!("branches end with different stacks {a} and {b}"))),
    }
}

fn step(ins: &MichInstr, mut s: Vec<MichType>, location: &str) -> Result<StackTy, MichTypeError> {
    let before = StackTy::Live(s.clone()).to_string();
    let fail = |message: String| MichTypeError {
        location: location.to_owned(),
        instr: print_instr(ins),
        stack: before.clone(),
        message,
    };
    let need = |s: &Vec<MichType>, n: usize| {
        if s.len() < n {
            Err(fail(format!("needs {n} stack element(s), found {}", s.len())))
        } else {
            Ok(())
        }
    };
    use MichInstr as I;
    use MichType as T;
    match ins {
        I::Push(t, v) => {
            if !t.is_pushable() {
                return Err(fail("cannot PUSH a value of a type containing operation".into()));
            }
            if !v.has_type(t) {
                return Err(fail("literal does not have the announced type".into()));
            }
            s.insert(0, t.clone());
        }
        I::Unit => s.insert(0, T::Unit),
        I::Pair => {
            need(&s, 2)?;
            let a = s.remove(0);
            let b = s.remove(0);
            s.insert(0, T::pair(a, b));
        }
        I::Car | I::Cdr | I::Unpair => {
            need(&s, 1)?;
            let T::Pair(a, b) = s.remove(0) else {
                return Err(fail("expected a pair on top".into()));
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
            need(&s, 1)?;
            s.insert(0, s[0].clone());
        }
        I::Drop => {
            need(&s, 1)?;
            s.remove(0);
        }
        I::Swap => {
            need(&s, 2)?;
            s.swap(0, 1);
        }
        I::Dig(n) => {
            need(&s, n + 1)?;
            let x = s.remove(*n);
            s.insert(0, x);
        }
        I::Dug(n) => {
            need(&s, n + 1)?;
            let x = s.remove(0);
            s.insert(*n, x);
        }
        I::Left(b) => {
            need(&s, 1)?;
            let a = s.remove(0);
            s.insert(0, T::or(a, b.clone()));
        }
        I::Right(a) => {
            need(&s, 1)?;
            let b = s.remove(0);
            s.insert(0, T::or(a.clone(), b));
        }
        I::IfLeft(l, r) => {
            need(&s, 1)?;
            let T::Or(a, b) = s.remove(0) else {
                return Err(fail("expected an or on top".into()));
            };
            let mut sl = s.clone();
            sl.insert(0, *a);
            let mut sr = s;
            sr.insert(0, *b);
            let ol = seq(l, StackTy::Live(sl), &format!("{location}.left"))?;
            let or = seq(r, StackTy::Live(sr), &format!("{location}.right"))?;
            return merge(ol, or, fail);
        }
        I::If(t, e) => {
            need(&s, 1)?;
            if s.remove(0) != T::Bool {
                return Err(fail("expected a bool on top".into()));
            }
            let ot = seq(t, StackTy::Live(s.clone()), &format!("{location}.then"))?;
            let oe = seq(e, StackTy::Live(s), &format!("{location}.else"))?;
            return merge(ot, oe, fail);
        }
        I::IfNone(n, sm) => {
            need(&s, 1)?;
            let T::Option(a) = s.remove(0) else {
                return Err(fail("expected an option on top".into()));
            };
            let on = seq(n, StackTy::Live(s.clone()), &format!("{location}.none"))?;
            let mut ss = s;
            ss.insert(0, *a);
            let os = seq(sm, StackTy::Live(ss), &format!("{location}.some"))?;
            return merge(on, os, fail);
        }
        I::Some => {
            need(&s, 1)?;
            let a = s.remove(0);
            s.insert(0, T::option(a));
        }
        I::None(t) => s.insert(0, T::option(t.clone())),
        I::Nil(t) => s.insert(0, T::list(t.clone())),
        I::Cons => {
            need(&s, 2)?;
            match &s[1] {
                T::List(e) if **e == s[0] => {
                    s.remove(0);
                }
                _ => return Err(fail("CONS expects a : list a".into())),
            }
        }
        I::Add => {
            need(&s, 2)?;
            let r = match (&s[0], &s[1]) {
                (T::Nat, T::Nat) => T::Nat,
                (T::Nat, T::Int) | (T::Int, T::Nat) | (T::Int, T::Int) => T::Int,
                (T::Mutez, T::Mutez) => T::Mutez,
                _ => return Err(fail("ADD is not defined on these operands".into())),
            };
            s.drain(0..2);
            s.insert(0, r);
        }
        I::Compare => {
            need(&s, 2)?;
            if s[0] != s[1] || !s[0].is_comparable() {
                return Err(fail("COMPARE expects two values of the same comparable type".into()));
            }
            s.drain(0..2);
            s.insert(0, T::Int);
        }
        I::Ge => {
            need(&s, 1)?;
            if s[0] != T::Int {
                return Err(fail("GE expects an int".into()));
            }
            s[0] = T::Bool;
        }
        I::Get => {
            need(&s, 2)?;
            let T::Map(k, v) = &s[1] else {
                return Err(fail("GET expects key : map".into()));
            };
            if **k != s[0] {
                return Err(fail("GET key type does not match the map".into()));
            }
            let r = T::option((**v).clone());
            s.drain(0..2);
            s.insert(0, r);
        }
        I::Update => {
            need(&s, 3)?;
            let T::Map(k, v) = &s[2] else {
                return Err(fail("UPDATE expects key : option value : map".into()));
            };
            if **k != s[0] || T::option((**v).clone()) != s[1] {
                return Err(fail("UPDATE operand types do not match the map".into()));
            }
            s.drain(0..2);
        }
        I::Amount => s.insert(0, T::Mutez),
        I::Failwith => {
            need(&s, 1)?;
            if !s[0].is_pushable() {
                return Err(fail("FAILWITH argument may not contain operation".into()));
            }
            return Ok(StackTy::Failed);
        }
        I::Seq(body) => return seq(body, StackTy::Live(s), location),
    }
    Ok(StackTy::Live(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use MichInstr as I;
    use MichType as T;

    fn live(ts: &[T]) -> StackTy {
        StackTy::Live(ts.to_vec())
    }

    #[test]
    fn dup_on_nat() {
        assert_eq!(typecheck(&[I::Dup], live(&[T::Nat])).unwrap(), live(&[T::Nat, T::Nat]));
    }

    #[test]
    fn swap_underflow() {
        assert!(typecheck(&[I::Swap], live(&[T::Nat])).is_err());
    }

    #[test]
    fn compare_ge_on_mutez() {
        assert_eq!(
            typecheck(&[I::Compare, I::Ge], live(&[T::Mutez, T::Mutez])).unwrap(),
            live(&[T::Bool])
        );
    }

    #[test]
    fn failing_branch_unifies() {
        let code = [I::If(
            vec![I::Push(T::String, super::super::MichValue::String("x".into())), I::Failwith],
            vec![],
        )];
        assert_eq!(typecheck(&code, live(&[T::Bool, T::Nat])).unwrap(), live(&[T::Nat]));
        assert!(typecheck(&[I::Failwith, I::Unit], live(&[T::Nat])).is_err());
    }

    #[test]
    fn identity_contract() {
        let script = Script {
            parameter: T::Unit,
            storage: T::Nat,
            code: vec![I::Cdr, I::Nil(T::Operation), I::Pair],
        };
        typecheck_script(&script).unwrap();
    }
}
