//! Reference big-step interpreter over typed programs.

use std::collections::BTreeMap;
use std::fmt;

use crate::syntax::{Arg, BinOp, Label, Type, Value, MUTEZ_MAX};
use crate::typer::{TypedArg, TypedInstr, TypedInstrKind, TypedProgram, TypedRhs, TypedRhsKind};
use crate::types::{check_value, RecordEnv};

/// Bindings from variable names to values, sorted by name.
pub type RuntimeEnv = BTreeMap<Label, Value>;

/// A contract-level failure: the transaction is rejected.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ContractFailure {
    FailWith(Value),
    MutezOverflow,
}

impl fmt::Display for ContractFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContractFailure::FailWith(v) => write!(f, "failed with {v}"),
            ContractFailure::MutezOverflow => f.write_str("mutez overflow"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalOutcome {
    Returned(Value),
    Failed(ContractFailure),
}

/// Internal failures. These indicate a typer bug or a runaway program,
/// never a contract-level rejection.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("no function named `{0}`")]
    UnknownFunction(String),
    #[error("input value {value} does not have type {ty}")]
    BadInput { value: String, ty: String },
    #[error("step limit of {0} exceeded")]
    StepLimit(u64),
    #[error("internal evaluation error: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalContext {
    /// Value returned by `amount`.
    pub amount: u64,
    pub step_limit: u64,
    /// Check every intermediate environment against its static type.
    pub check_types: bool,
}

impl Default for EvalContext {
    fn default() -> Self {
        EvalContext {
            amount: 0,
            step_limit: 10_000_000,
            check_types: cfg!(debug_assertions),
        }
    }
}

impl EvalContext {
    pub fn with_amount(amount: u64) -> Self {
        EvalContext {
            amount,
            ..Self::default()
        }
    }
}

enum Stop {
    Fail(ContractFailure),
    Error(EvalError),
}

impl From<EvalError> for Stop {
    fn from(e: EvalError) -> Self {
        Stop::Error(e)
    }
}

type Step<T> = Result<T, Stop>;

fn internal<T>(msg: impl Into<String>) -> Step<T> {
    Err(Stop::Error(EvalError::Internal(msg.into())))
}

/// Evaluates `name` on a record input value.
pub fn eval_function(
    p: &TypedProgram,
    name: &str,
    input: &Value,
    ctx: &EvalContext,
) -> Result<EvalOutcome, EvalError> {
    let f = p
        .function(name)
        .ok_or_else(|| EvalError::UnknownFunction(name.to_owned()))?;
    let in_ty = f.input.to_type();
    if !check_value(input, &in_ty) {
        return Err(EvalError::BadInput {
            value: input.to_string(),
            ty: in_ty.to_string(),
        });
    }
    let mut m = Machine {
        prog: p,
        ctx,
        steps: 0,
    };
    match m.call(&f.name, input.clone()) {
        Ok(v) => Ok(EvalOutcome::Returned(v)),
        Err(Stop::Fail(f)) => Ok(EvalOutcome::Failed(f)),
        Err(Stop::Error(e)) => Err(e),
    }
}

/// Evaluates one typed instruction in `env`, which must have the shape of
/// the instruction's input environment. Bindings it does not mention pass
/// through unchanged.
pub fn eval_instruction(
    p: &TypedProgram,
    env: RuntimeEnv,
    i: &TypedInstr,
    ctx: &EvalContext,
) -> Result<Result<RuntimeEnv, ContractFailure>, EvalError> {
    let mut m = Machine {
        prog: p,
        ctx,
        steps: 0,
    };
    let mut env = env;
    match m.instr(&mut env, i) {
        Ok(()) => Ok(Ok(env)),
        Err(Stop::Fail(f)) => Ok(Err(f)),
        Err(Stop::Error(e)) => Err(e),
    }
}

/// Record value of an environment.
pub fn env_to_value(env: RuntimeEnv) -> Value {
    Value::Record(env.into_iter().collect())
}

/// Environment of a record value; `None` for other values.
pub fn value_to_env(v: Value) -> Option<RuntimeEnv> {
    match v {
        Value::Record(fields) => Some(fields.into_iter().collect()),
        _ => None,
    }
}

struct Machine<'a> {
    prog: &'a TypedProgram,
    ctx: &'a EvalContext,
    steps: u64,
}

impl Machine<'_> {
    fn tick(&mut self) -> Step<()> {
        self.steps += 1;
        if self.steps > self.ctx.step_limit {
            return Err(Stop::Error(EvalError::StepLimit(self.ctx.step_limit)));
        }
        Ok(())
    }

    fn call(&mut self, f: &Label, arg: Value) -> Step<Value> {
        let Some(func) = self.prog.function(f.as_str()) else {
            return internal(format!("call to unknown function `{f}`"));
        };
        let Some(mut env) = value_to_env(arg) else {
            return internal(format!("argument of `{f}` is not a record"));
        };
        self.instr(&mut env, &func.body)?;
        Ok(env_to_value(env))
    }

    fn take(&self, env: &mut RuntimeEnv, x: &Label) -> Step<Value> {
        match env.remove(x) {
            Some(v) => Ok(v),
            None => internal(format!("variable `{x}` missing at runtime")),
        }
    }

    fn check_env(&self, env: &RuntimeEnv, expected: &RecordEnv) -> Step<()> {
        if env.len() != expected.len()
            || !expected
                .iter()
                .all(|(l, t)| env.get(l).is_some_and(|v| check_value(v, t)))
        {
            let shown: Vec<String> = env.iter().map(|(l, v)| format!("{l} = {v}")).collect();
            return internal(format!(
                "environment {{{}}} does not match {}",
                shown.join("; "),
                expected
            ));
        }
        Ok(())
    }

    fn instr(&mut self, env: &mut RuntimeEnv, ti: &TypedInstr) -> Step<()> {
        self.tick()?;
        match &ti.kind {
            TypedInstrKind::Noop => {}
            TypedInstrKind::Seq(a, b) => {
                self.instr(env, a)?;
                self.instr(env, b)?;
            }
            TypedInstrKind::Drop(x, _) => {
                self.take(env, x)?;
            }
            TypedInstrKind::Assign(lhs, r) => {
                let v = self.rhs(env, r)?;
                match lhs {
                    crate::syntax::Lhs::Var(x) => {
                        env.insert(x.clone(), v);
                    }
                    crate::syntax::Lhs::Record(pat) => {
                        let Value::Record(fields) = v else {
                            return internal("record pattern applied to a non-record");
                        };
                        let mut fields: BTreeMap<Label, Value> = fields.into_iter().collect();
                        for (l, x) in pat {
                            let Some(fv) = fields.remove(l) else {
                                return internal(format!("missing field `{l}`"));
                            };
                            env.insert(x.clone(), fv);
                        }
                    }
                }
            }
            TypedInstrKind::Match {
                scrutinee,
                branches,
                ..
            } => {
                let v = self.take(env, scrutinee)?;
                let (ctor, payload) = split_variant(v);
                let Some(b) = branches.iter().find(|b| b.ctor.as_str() == ctor) else {
                    return internal(format!("no branch for constructor `{ctor}`"));
                };
                env.insert(b.binder.clone(), payload);
                self.instr(env, &b.body)?;
            }
            TypedInstrKind::Failwith(a) => {
                let v = self.arg(env, a)?;
                return Err(Stop::Fail(ContractFailure::FailWith(v)));
            }
        }
        if self.ctx.check_types && !ti.diverges {
            self.check_env(env, &ti.env_out)?;
        }
        Ok(())
    }

    fn arg(&mut self, env: &mut RuntimeEnv, a: &TypedArg) -> Step<Value> {
        Ok(match &a.node {
            Arg::Var(x) => self.take(env, x)?,
            Arg::Val(v) => v.clone(),
            Arg::Record(fields) => {
                let mut out = Vec::with_capacity(fields.len());
                for (l, x) in fields {
                    out.push((l.clone(), self.take(env, x)?));
                }
                Value::record(out)
            }
        })
    }

    fn rhs(&mut self, env: &mut RuntimeEnv, r: &TypedRhs) -> Step<Value> {
        Ok(match &r.kind {
            TypedRhsKind::Arg(a) => self.arg(env, a)?,
            TypedRhsKind::Dup(a) => {
                let v = self.arg(env, a)?;
                Value::record([("car", v.clone()), ("cdr", v)])
            }
            TypedRhsKind::AssertSome(a) => match self.arg(env, a)? {
                Value::Record(mut fs) if fs.len() == 1 => match fs.pop().map(|(_, v)| v) {
                    Some(Value::Some(v)) => Value::record([("res", *v)]),
                    Some(Value::None(_)) => {
                        return Err(Stop::Fail(ContractFailure::FailWith(Value::string(
                            "assert_some",
                        ))))
                    }
                    _ => return internal("assert_some on a non-option"),
                },
                _ => return internal("assert_some expects {opt = _}"),
            },
            TypedRhsKind::Call(f, a) => {
                let v = self.arg(env, a)?;
                self.call(f, v)?
            }
            TypedRhsKind::Proj { var, label, .. } => match self.take(env, var)? {
                Value::Record(fs) => match fs.into_iter().find(|(l, _)| l == label) {
                    Some((_, v)) => v,
                    None => return internal(format!("missing field `{label}`")),
                },
                _ => return internal("projection from a non-record"),
            },
            TypedRhsKind::Update { var, fields, .. } => {
                let Value::Record(mut fs) = self.take(env, var)? else {
                    return internal("update of a non-record");
                };
                for (l, y) in fields {
                    let nv = self.take(env, y)?;
                    match fs.iter_mut().find(|(fl, _)| fl == l) {
                        Some(slot) => slot.1 = nv,
                        None => return internal(format!("missing field `{l}`")),
                    }
                }
                Value::Record(fs)
            }
            TypedRhsKind::Match {
                scrutinee,
                branches,
                ..
            } => {
                let v = self.take(env, scrutinee)?;
                let (ctor, payload) = split_variant(v);
                let Some(b) = branches.iter().find(|b| b.ctor.as_str() == ctor) else {
                    return internal(format!("no branch for constructor `{ctor}`"));
                };
                env.insert(b.binder.clone(), payload);
                self.rhs(env, &b.body)?
            }
            TypedRhsKind::Construct { ctor, arg } => {
                let payload = self.arg(env, arg)?;
                match &r.ty {
                    Type::Option(elem) => match ctor.as_str() {
                        "Some" => Value::Some(Box::new(payload)),
                        _ => Value::None((**elem).clone()),
                    },
                    Type::Prim(crate::syntax::PrimType::Bool) => Value::Bool(ctor.as_str() == "True"),
                    ty => Value::Variant {
                        ctor: ctor.clone(),
                        payload: Box::new(payload),
                        ty: ty.clone(),
                    },
                }
            }
            TypedRhsKind::BinOp {
                op, left, right, ..
            } => {
                let a = self.take(env, left)?;
                let b = self.take(env, right)?;
                match (op, a, b) {
                    (BinOp::Add, Value::Nat(a), Value::Nat(b)) => Value::Nat(a + b),
                    (BinOp::Add, Value::Int(a), Value::Int(b)) => Value::Int(a + b),
                    (BinOp::Add, Value::Mutez(a), Value::Mutez(b)) => match a.checked_add(b) {
                        Some(s) if s <= MUTEZ_MAX => Value::Mutez(s),
                        _ => return Err(Stop::Fail(ContractFailure::MutezOverflow)),
                    },
                    (BinOp::Ge, Value::Nat(a), Value::Nat(b)) => Value::Bool(a >= b),
                    (BinOp::Ge, Value::Int(a), Value::Int(b)) => Value::Bool(a >= b),
                    (BinOp::Ge, Value::Mutez(a), Value::Mutez(b)) => Value::Bool(a >= b),
                    (BinOp::MapGet, Value::Map(m, _, vt), k) => match m.get(&k) {
                        Some(v) => Value::Some(Box::new(v.clone())),
                        None => Value::None(vt),
                    },
                    (op, a, b) => return internal(format!("bad operands for {op:?}: {a}, {b}")),
                }
            }
            TypedRhsKind::MapUpdate { map, key, value, .. } => {
                let m = self.take(env, map)?;
                let k = self.take(env, key)?;
                let v = self.take(env, value)?;
                let Value::Map(mut entries, kt, vt) = m else {
                    return internal("update on a non-map");
                };
                match v {
                    Value::Some(v) => {
                        entries.insert(k, *v);
                    }
                    Value::None(_) => {
                        entries.remove(&k);
                    }
                    _ => return internal("update with a non-option value"),
                }
                Value::Map(entries, kt, vt)
            }
            TypedRhsKind::Amount => Value::Mutez(self.ctx.amount),
        })
    }
}

/// Constructor name and payload of a value of variant, bool or option type.
fn split_variant(v: Value) -> (String, Value) {
    match v {
        Value::Bool(true) => ("True".into(), Value::unit()),
        Value::Bool(false) => ("False".into(), Value::unit()),
        Value::None(_) => ("None".into(), Value::unit()),
        Value::Some(p) => ("Some".into(), *p),
        Value::Variant { ctor, payload, .. } => (ctor.as_str().to_owned(), *payload),
        other => (format!("<not a variant: {other}>"), Value::unit()),
    }
}
