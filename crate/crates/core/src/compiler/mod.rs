//! Compilation of typed Albert programs to Michelson.
//!
//! At every instruction boundary the Michelson stack holds exactly the live
//! variables, sorted by name from the top. Operands are brought up with
//! `DIG` and results are put back in place with `DUG`. Function calls are
//! inlined.

mod encode;

use crate::michelson::{MichInstr, MichType, Script};
use crate::syntax::{Arg, BinOp, Label, PrimType, Type, Value};
use crate::typer::{
    TypeError, TypeErrorKind, TypedArg, TypedBranch, TypedInstr, TypedInstrKind, TypedProgram,
    TypedRhs, TypedRhsKind,
};
use crate::types::RecordEnv;

/// Emits the body of one match branch.
type BranchBody<'a, E, T> = dyn FnMut(&mut E, &TypedBranch<T>) -> Result<(), CompileError> + 'a;

pub use encode::{compile_type, compile_value, decode_value, DecodeError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("{0}")]
    Type(#[from] TypeError),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("internal compiler error: {0}")]
    Internal(String),
}

/// A compiled function: code taking `[input]` to `[output]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledFunction {
    pub input: MichType,
    pub output: MichType,
    pub code: Vec<MichInstr>,
}

/// Compiles `name` as a standalone stack function from its input record
/// to its output record.
pub fn compile_function(p: &TypedProgram, name: &str) -> Result<CompiledFunction, CompileError> {
    let f = p
        .function(name)
        .ok_or_else(|| CompileError::UnknownFunction(name.to_owned()))?;
    let mut e = Emitter {
        prog: p,
        code: Vec::new(),
        stack: vec![Slot::Anon],
        failed: false,
    };
    let labels: Vec<Label> = f.input.labels().cloned().collect();
    e.bind_record(&labels);
    e.check_layout(&f.input, "function prologue")?;
    e.instr(&f.body)?;
    let out: Vec<(Label, Label)> = f.output.labels().map(|l| (l.clone(), l.clone())).collect();
    e.build_record(&out)?;
    Ok(CompiledFunction {
        input: compile_type(&f.input.to_type()),
        output: compile_type(&f.output.to_type()),
        code: e.code,
    })
}

/// Compiles `main` under the contract calling convention
/// `{param : P; store : S} -> {operations : list operation; store : S}`.
pub fn compile_contract(p: &TypedProgram, main: &str) -> Result<Script, CompileError> {
    let f = p
        .function(main)
        .ok_or_else(|| CompileError::UnknownFunction(main.to_owned()))?;
    let (param, store) = contract_types(&f.input, &f.output).map_err(|detail| {
        CompileError::Type(TypeError {
            kind: TypeErrorKind::TypeMismatch,
            path: main.to_owned(),
            detail,
        })
    })?;
    let compiled = compile_function(p, main)?;
    Ok(Script {
        parameter: compile_type(&param),
        storage: compile_type(&store),
        code: compiled.code,
    })
}

/// Parameter and storage types of a function following the contract
/// convention, or a description of why it does not.
pub fn contract_types(input: &RecordEnv, output: &RecordEnv) -> Result<(Type, Type), String> {
    let shape = "a contract entry point must have type {param : P; store : S} -> {operations : list operation; store : S}";
    let labels = |e: &RecordEnv| e.labels().map(Label::as_str).collect::<Vec<_>>().join(",");
    if labels(input) != "param,store" || labels(output) != "operations,store" {
        return Err(format!("{shape}, found {input} -> {output}"));
    }
    let param = input.get(&Label::from("param")).expect("checked").clone();
    let store = input.get(&Label::from("store")).expect("checked").clone();
    if output.get(&Label::from("store")) != Some(&store) {
        return Err(format!("{shape}: the storage type must be the same on both sides"));
    }
    if output.get(&Label::from("operations")) != Some(&Type::list(Type::operation())) {
        return Err(format!("{shape}: `operations` must have type list operation"));
    }
    if param.contains_operation() || store.contains_operation() {
        return Err(format!("{shape}: parameter and storage may not contain operations"));
    }
    Ok((param, store))
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Slot {
    /// A live variable of the function being compiled.
    Named(Label),
    /// A temporary; temporaries always sit above named slots.
    Anon,
    /// A variable of an enclosing function while a callee is inlined.
    Outer(Label),
}

struct Emitter<'a> {
    prog: &'a TypedProgram,
    code: Vec<MichInstr>,
    /// Symbolic stack, top first.
    stack: Vec<Slot>,
    /// The code emitted so far always fails; further code is dead.
    failed: bool,
}

fn internal<T>(msg: impl Into<String>) -> Result<T, CompileError> {
    Err(CompileError::Internal(msg.into()))
}

impl Emitter<'_> {
    /// Emits an instruction consuming `pops` temporaries and pushing `pushes`.
    fn op(&mut self, i: MichInstr, pops: usize, pushes: usize) {
        if self.failed {
            return;
        }
        debug_assert!(self.stack.iter().take(pops).all(|s| *s == Slot::Anon));
        self.stack.drain(0..pops.min(self.stack.len()));
        for _ in 0..pushes {
            self.stack.insert(0, Slot::Anon);
        }
        self.code.push(i);
    }

    fn fail(&mut self) {
        if !self.failed {
            self.code.push(MichInstr::Failwith);
            self.failed = true;
        }
    }

    /// Brings variable `x` to the top as a temporary.
    fn fetch(&mut self, x: &Label) -> Result<(), CompileError> {
        if self.failed {
            return Ok(());
        }
        let Some(idx) = self.stack.iter().position(|s| *s == Slot::Named(x.clone())) else {
            return internal(format!("variable `{x}` is not on the stack"));
        };
        self.stack.remove(idx);
        self.stack.insert(0, Slot::Anon);
        if idx > 0 {
            self.code.push(MichInstr::Dig(idx));
        }
        Ok(())
    }

    /// Names the temporary on top `x` and moves it to its sorted slot,
    /// below the remaining temporaries.
    fn place(&mut self, x: &Label) {
        if self.failed {
            return;
        }
        let k = self.stack[1..]
            .iter()
            .take_while(|s| match s {
                Slot::Anon => true,
                Slot::Named(y) => y < x,
                Slot::Outer(_) => false,
            })
            .count();
        self.stack.remove(0);
        self.stack.insert(k, Slot::Named(x.clone()));
        if k > 0 {
            self.code.push(MichInstr::Dug(k));
        }
    }

    /// Names the temporary on top `x` without moving it.
    fn name_top(&mut self, x: &Label) {
        if !self.failed {
            self.stack[0] = Slot::Named(x.clone());
        }
    }

    /// Destructures the record comb on top into variables named `vars`,
    /// given in field order.
    fn bind_record(&mut self, vars: &[Label]) {
        if vars.is_empty() {
            self.op(MichInstr::Drop, 1, 0);
            return;
        }
        for (i, x) in vars.iter().enumerate() {
            if i + 1 < vars.len() {
                self.op(MichInstr::Unpair, 1, 2);
            }
            self.place(x);
        }
    }

    /// Builds the comb of a record from variables; fields need not be sorted.
    fn build_record(&mut self, fields: &[(Label, Label)]) -> Result<(), CompileError> {
        let mut sorted = fields.to_vec();
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        if sorted.is_empty() {
            self.op(MichInstr::Unit, 0, 1);
            return Ok(());
        }
        for (i, (_, x)) in sorted.iter().enumerate().rev() {
            self.fetch(x)?;
            if i + 1 < sorted.len() {
                self.op(MichInstr::Pair, 2, 1);
            }
        }
        Ok(())
    }

    fn named(&self) -> Vec<&Label> {
        self.stack
            .iter()
            .filter_map(|s| match s {
                Slot::Named(x) => Some(x),
                _ => None,
            })
            .collect()
    }

    fn check_layout(&self, env: &RecordEnv, at: &str) -> Result<(), CompileError> {
        if self.failed {
            return Ok(());
        }
        let expected: Vec<&Label> = env.labels().collect();
        let top: Vec<&Slot> = self
            .stack
            .iter()
            .take_while(|s| !matches!(s, Slot::Outer(_)))
            .collect();
        if top.iter().any(|s| **s == Slot::Anon) || self.named() != expected {
            return internal(format!(
                "stack layout {:?} does not match environment {env} after {at}",
                self.stack
            ));
        }
        Ok(())
    }

    fn instr(&mut self, ti: &TypedInstr) -> Result<(), CompileError> {
        match &ti.kind {
            TypedInstrKind::Noop => {}
            TypedInstrKind::Seq(a, b) => {
                self.instr(a)?;
                self.instr(b)?;
                return Ok(());
            }
            TypedInstrKind::Drop(x, _) => {
                self.fetch(x)?;
                self.op(MichInstr::Drop, 1, 0);
            }
            TypedInstrKind::Assign(lhs, r) => {
                self.rhs(r)?;
                match lhs {
                    crate::syntax::Lhs::Var(x) => self.place(x),
                    crate::syntax::Lhs::Record(pat) => {
                        let mut pat = pat.clone();
                        pat.sort_by(|a, b| a.0.cmp(&b.0));
                        let vars: Vec<Label> = pat.into_iter().map(|(_, x)| x).collect();
                        self.bind_record(&vars);
                    }
                }
            }
            TypedInstrKind::Failwith(a) => {
                self.arg(a)?;
                self.fail();
            }
            TypedInstrKind::Match {
                scrutinee,
                ty,
                branches,
            } => {
                self.fetch(scrutinee)?;
                self.match_tree(ty, branches, &mut |e, b| {
                    e.place(&b.binder);
                    e.instr(&b.body)
                })?;
            }
        }
        if !ti.diverges {
            self.check_layout(&ti.env_out, "instruction")?;
        }
        Ok(())
    }

    /// Emits the branching on the scrutinee on top of the stack. Each
    /// branch starts with its payload on top as a temporary.
    fn match_tree<T>(
        &mut self,
        ty: &Type,
        branches: &[TypedBranch<T>],
        body: &mut BranchBody<'_, Self, T>,
    ) -> Result<(), CompileError> {
        if self.failed {
            return Ok(());
        }
        match ty {
            Type::Prim(PrimType::Bool) => {
                // Branches are ordered False, True; the binders are unit.
                let (f, t) = (&branches[0], &branches[1]);
                self.stack.remove(0);
                let then_arm = self.arm(&mut |e| {
                    e.op(MichInstr::Unit, 0, 1);
                    body(e, t)
                })?;
                let else_arm = self.arm(&mut |e| {
                    e.op(MichInstr::Unit, 0, 1);
                    body(e, f)
                })?;
                self.join(then_arm, else_arm, MichInstr::If)
            }
            Type::Option(_) => {
                let (none, some) = (&branches[0], &branches[1]);
                self.stack.remove(0);
                let none_arm = self.arm(&mut |e| {
                    e.op(MichInstr::Unit, 0, 1);
                    body(e, none)
                })?;
                let some_arm = self.arm(&mut |e| {
                    e.stack.insert(0, Slot::Anon);
                    body(e, some)
                })?;
                self.join(none_arm, some_arm, MichInstr::IfNone)
            }
            Type::Variant(_) => self.variant_tree(branches, body),
            other => internal(format!("match on non-variant type {other}")),
        }
    }

    fn variant_tree<T>(
        &mut self,
        branches: &[TypedBranch<T>],
        body: &mut BranchBody<'_, Self, T>,
    ) -> Result<(), CompileError> {
        match branches {
            [] => internal("empty match"),
            [only] => body(self, only),
            [first, rest @ ..] => {
                self.stack.remove(0);
                let left = self.arm(&mut |e| {
                    e.stack.insert(0, Slot::Anon);
                    body(e, first)
                })?;
                let right = self.arm(&mut |e| {
                    e.stack.insert(0, Slot::Anon);
                    e.variant_tree(rest, body)
                })?;
                self.join(left, right, MichInstr::IfLeft)
            }
        }
    }

    /// Compiles a branch from the current symbolic stack without emitting
    /// it; returns its code, final stack and whether it always fails.
    fn arm(
        &mut self,
        f: &mut dyn FnMut(&mut Self) -> Result<(), CompileError>,
    ) -> Result<(Vec<MichInstr>, Vec<Slot>, bool), CompileError> {
        let saved_code = std::mem::take(&mut self.code);
        let saved_stack = self.stack.clone();
        let res = f(self);
        let code = std::mem::replace(&mut self.code, saved_code);
        let stack = std::mem::replace(&mut self.stack, saved_stack);
        let failed = std::mem::replace(&mut self.failed, false);
        res?;
        Ok((code, stack, failed))
    }

    fn join(
        &mut self,
        a: (Vec<MichInstr>, Vec<Slot>, bool),
        b: (Vec<MichInstr>, Vec<Slot>, bool),
        mk: fn(Vec<MichInstr>, Vec<MichInstr>) -> MichInstr,
    ) -> Result<(), CompileError> {
        let stack = match (a.2, b.2) {
            (true, true) => None,
            (false, true) => Some(a.1),
            (true, false) => Some(b.1),
            (false, false) => {
                if a.1 != b.1 {
                    return internal(format!("branches end with layouts {:?} and {:?}", a.1, b.1));
                }
                Some(a.1)
            }
        };
        self.code.push(mk(a.0, b.0));
        match stack {
            Some(s) => self.stack = s,
            None => self.failed = true,
        }
        Ok(())
    }

    fn arg(&mut self, a: &TypedArg) -> Result<(), CompileError> {
        match &a.node {
            Arg::Var(x) => self.fetch(x),
            Arg::Val(v) => {
                self.literal(v, &a.ty);
                Ok(())
            }
            Arg::Record(fields) => self.build_record(fields),
        }
    }

    fn literal(&mut self, v: &Value, t: &Type) {
        if t.is_unit() {
            self.op(MichInstr::Unit, 0, 1);
            return;
        }
        if !t.contains_operation() {
            self.op(MichInstr::Push(compile_type(t), compile_value(v, t)), 0, 1);
            return;
        }
        // Types mentioning operation cannot be pushed; build the value.
        match (v, t) {
            (Value::Record(vs), Type::Record(ts)) => {
                for (i, ((_, fv), (_, ft))) in vs.iter().zip(ts).enumerate().rev() {
                    self.literal(fv, ft);
                    if i + 1 < vs.len() {
                        self.op(MichInstr::Pair, 2, 1);
                    }
                }
            }
            (Value::List(xs, _), Type::List(e)) => {
                self.op(MichInstr::Nil(compile_type(e)), 0, 1);
                for x in xs.iter().rev() {
                    self.literal(x, e);
                    self.op(MichInstr::Cons, 2, 1);
                }
            }
            (Value::None(_), Type::Option(e)) => self.op(MichInstr::None(compile_type(e)), 0, 1),
            (Value::Some(x), Type::Option(e)) => {
                self.literal(x, e);
                self.op(MichInstr::Some, 1, 1);
            }
            (Value::Variant { ctor, payload, .. }, Type::Variant(cs)) => {
                let pt = &cs.iter().find(|(c, _)| c == ctor).expect("typed").1;
                self.literal(payload, pt);
                self.inject(ctor, cs);
            }
            _ => unreachable!("literal of type {t} cannot be built"),
        }
    }

    /// Wraps the payload on top into constructor `ctor` of variant `cs`.
    fn inject(&mut self, ctor: &Label, cs: &[(Label, Type)]) {
        let i = cs.iter().position(|(c, _)| c == ctor).expect("typed");
        if i + 1 < cs.len() {
            let rest = compile_type(&Type::Variant(cs[i + 1..].to_vec()));
            self.op(MichInstr::Left(rest), 1, 1);
        }
        for k in (0..i).rev() {
            self.op(MichInstr::Right(compile_type(&cs[k].1)), 1, 1);
        }
    }

    fn rhs(&mut self, r: &TypedRhs) -> Result<(), CompileError> {
        match &r.kind {
            TypedRhsKind::Arg(a) => self.arg(a)?,
            TypedRhsKind::Dup(a) => {
                self.arg(a)?;
                self.op(MichInstr::Dup, 0, 1);
                self.op(MichInstr::Pair, 2, 1);
            }
            TypedRhsKind::AssertSome(a) => {
                self.arg(a)?;
                if !self.failed {
                    self.stack.remove(0);
                    self.code.push(MichInstr::IfNone(
                        vec![
                            MichInstr::Push(MichType::String, crate::michelson::MichValue::String("assert_some".into())),
                            MichInstr::Failwith,
                        ],
                        vec![],
                    ));
                    self.stack.insert(0, Slot::Anon);
                }
            }
            TypedRhsKind::Call(f, a) => {
                self.arg(a)?;
                self.inline_call(f)?;
            }
            TypedRhsKind::Proj { var, label, record } => {
                self.fetch(var)?;
                let fs = record.record_fields().expect("typed");
                let j = fs.iter().position(|(l, _)| l == label).expect("typed");
                for _ in 0..j {
                    self.op(MichInstr::Cdr, 1, 1);
                }
                if j + 1 < fs.len() {
                    self.op(MichInstr::Car, 1, 1);
                }
            }
            TypedRhsKind::Update { var, fields, record } => {
                self.fetch(var)?;
                let fs = record.record_fields().expect("typed");
                let new: Vec<Option<&Label>> = fs
                    .iter()
                    .map(|(l, _)| fields.iter().find(|(fl, _)| fl == l).map(|(_, y)| y))
                    .collect();
                self.update_comb(&new)?;
            }
            TypedRhsKind::Match {
                scrutinee,
                ty,
                branches,
            } => {
                self.fetch(scrutinee)?;
                self.match_tree(ty, branches, &mut |e, b| {
                    e.name_top(&b.binder);
                    e.rhs(&b.body)
                })?;
            }
            TypedRhsKind::Construct { ctor, arg } => {
                self.arg(arg)?;
                match &r.ty {
                    Type::Option(e) => {
                        if ctor.as_str() == "Some" {
                            self.op(MichInstr::Some, 1, 1);
                        } else {
                            self.op(MichInstr::Drop, 1, 0);
                            self.op(MichInstr::None(compile_type(e)), 0, 1);
                        }
                    }
                    Type::Prim(PrimType::Bool) => {
                        self.op(MichInstr::Drop, 1, 0);
                        self.op(
                            MichInstr::Push(
                                MichType::Bool,
                                crate::michelson::MichValue::Bool(ctor.as_str() == "True"),
                            ),
                            0,
                            1,
                        );
                    }
                    Type::Variant(cs) => self.inject(ctor, cs),
                    other => return internal(format!("constructor of non-variant type {other}")),
                }
            }
            TypedRhsKind::BinOp { op, left, right, .. } => match op {
                BinOp::Add | BinOp::Ge => {
                    self.fetch(right)?;
                    self.fetch(left)?;
                    if *op == BinOp::Add {
                        self.op(MichInstr::Add, 2, 1);
                    } else {
                        self.op(MichInstr::Compare, 2, 1);
                        self.op(MichInstr::Ge, 1, 1);
                    }
                }
                BinOp::MapGet => {
                    self.fetch(left)?;
                    self.fetch(right)?;
                    self.op(MichInstr::Get, 2, 1);
                }
            },
            TypedRhsKind::MapUpdate { map, key, value, .. } => {
                self.fetch(map)?;
                self.fetch(value)?;
                self.fetch(key)?;
                self.op(MichInstr::Update, 3, 1);
            }
            TypedRhsKind::Amount => self.op(MichInstr::Amount, 0, 1),
        }
        Ok(())
    }

    /// Replaces the comb components marked `Some(y)` by variable `y`.
    fn update_comb(&mut self, new: &[Option<&Label>]) -> Result<(), CompileError> {
        if new.iter().all(Option::is_none) {
            return Ok(());
        }
        if let [Some(y)] = new {
            self.op(MichInstr::Drop, 1, 0);
            return self.fetch(y);
        }
        self.op(MichInstr::Unpair, 1, 2);
        if let Some(y) = new[0] {
            self.op(MichInstr::Drop, 1, 0);
            self.fetch(y)?;
        }
        if new[1..].iter().any(Option::is_some) {
            self.op(MichInstr::Swap, 2, 2);
            self.update_comb(&new[1..])?;
            self.op(MichInstr::Swap, 2, 2);
        }
        self.op(MichInstr::Pair, 2, 1);
        Ok(())
    }

    /// Inlines the body of `f`, whose argument comb is on top.
    fn inline_call(&mut self, f: &Label) -> Result<(), CompileError> {
        if self.failed {
            return Ok(());
        }
        let Some(callee) = self.prog.function(f.as_str()) else {
            return internal(format!("call to unknown function `{f}`"));
        };
        let saved = self.stack.clone();
        self.stack = self
            .stack
            .iter()
            .map(|s| match s {
                Slot::Named(x) | Slot::Outer(x) => Slot::Outer(x.clone()),
                Slot::Anon => Slot::Anon,
            })
            .collect();
        let labels: Vec<Label> = callee.input.labels().cloned().collect();
        self.bind_record(&labels);
        self.check_layout(&callee.input, &format!("entering `{f}`"))?;
        self.instr(&callee.body)?;
        let out: Vec<(Label, Label)> = callee
            .output
            .labels()
            .map(|l| (l.clone(), l.clone()))
            .collect();
        self.build_record(&out)?;
        if !self.failed {
            if self.stack.len() != saved.len() || self.stack[0] != Slot::Anon {
                return internal(format!("inlining `{f}` unbalanced the stack"));
            }
            self.stack = saved;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend;
    use crate::michelson::typecheck_script;

    #[test]
    fn identity_storage_contract() {
        let (_, typed) = frontend(
            "def main : {param : {}; store : nat} -> {operations : list operation; store : nat} =\n  \
             drop param;\n  operations = ([] : list operation)",
        )
        .unwrap();
        let s = compile_contract(&typed, "main").unwrap();
        typecheck_script(&s).unwrap();
    }

    #[test]
    fn convention_is_enforced() {
        let (_, typed) = frontend("def f : {x : nat} -> {x : nat} = noop").unwrap();
        assert!(matches!(compile_contract(&typed, "f"), Err(CompileError::Type(_))));
    }

    #[test]
    fn drop_is_dig_then_drop() {
        let (_, typed) = frontend("def f : {a : nat; t : {}} -> {a : nat} = drop t").unwrap();
        let c = compile_function(&typed, "f").unwrap();
        assert!(c
            .code
            .windows(2)
            .any(|w| w == [MichInstr::Dig(1), MichInstr::Drop]));
    }
}
