//! Linear typechecker. Produces a typed AST where every instruction carries
//! its input and output environments.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use crate::syntax::{
    print_instruction_head, print_type, Arg, BinOp, FunName, Instruction, Label, Lhs, PrimType,
    Program, Rhs, Type, Value,
};
use crate::types::{check_value, join, RecordEnv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TypeErrorKind {
    UnboundVariable,
    VariableAlreadyBound,
    LinearityLeftover,
    TypeMismatch,
    UnknownConstructor,
    NonExhaustiveMatch,
    DuplicateBranch,
    UnknownFunction,
    JoinClash,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct TypeError {
    pub kind: TypeErrorKind,
    /// Logical location, e.g. `guarded_vote > instr 5 > True > instr 2`.
    pub path: String,
    pub detail: String,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "in {}: {}", self.path, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedArg {
    pub node: Arg,
    pub ty: Type,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedBranch<T> {
    pub ctor: Label,
    pub binder: Label,
    pub payload: Type,
    pub body: T,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypedRhsKind {
    Arg(TypedArg),
    Dup(TypedArg),
    AssertSome(TypedArg),
    /// Call to an earlier user function.
    Call(Label, TypedArg),
    Proj { var: Label, label: Label, record: Type },
    Update { var: Label, fields: Vec<(Label, Label)>, record: Type },
    /// `scrutinee` has type `ty`; branches follow the order of `ty`'s
    /// constructors, not the source order.
    Match {
        scrutinee: Label,
        ty: Type,
        branches: Vec<TypedBranch<TypedRhs>>,
    },
    Construct { ctor: Label, arg: TypedArg },
    BinOp { op: BinOp, left: Label, right: Label, left_ty: Type, right_ty: Type },
    MapUpdate { map: Label, key: Label, value: Label, map_ty: Type },
    Amount,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedRhs {
    pub kind: TypedRhsKind,
    /// Variables read (and consumed) by the right-hand side.
    pub consumed: RecordEnv,
    pub ty: Type,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypedInstrKind {
    Noop,
    Seq(Box<TypedInstr>, Box<TypedInstr>),
    Assign(Lhs, TypedRhs),
    Drop(Label, Type),
    /// Branches follow the order of the scrutinee type's constructors.
    Match {
        scrutinee: Label,
        ty: Type,
        branches: Vec<TypedBranch<TypedInstr>>,
    },
    Failwith(TypedArg),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedInstr {
    pub kind: TypedInstrKind,
    pub env_in: RecordEnv,
    pub env_out: RecordEnv,
    /// Every path through the instruction ends in `failwith`; `env_out` is
    /// then the environment expected by the context.
    pub diverges: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedFunction {
    pub name: Label,
    pub input: RecordEnv,
    pub output: RecordEnv,
    pub body: TypedInstr,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TypedProgram {
    pub functions: Vec<TypedFunction>,
}

impl TypedProgram {
    pub fn function(&self, name: &str) -> Option<&TypedFunction> {
        self.functions.iter().find(|f| f.name.as_str() == name)
    }
}

fn err<T>(kind: TypeErrorKind, path: &Path, detail: impl Into<String>) -> Result<T, TypeError> {
    Err(TypeError {
        kind,
        path: path.render(),
        detail: detail.into(),
    })
}

#[derive(Clone)]
struct Path(Vec<String>);

impl Path {
    fn push(&self, seg: impl Into<String>) -> Path {
        let mut p = self.0.clone();
        p.push(seg.into());
        Path(p)
    }

    fn render(&self) -> String {
        self.0.join(" > ")
    }
}

struct Checker<'a> {
    functions: &'a [TypedFunction],
    /// Names that were bound at some point, for friendlier linearity errors.
    seen: HashSet<Label>,
}

/// Typechecks all functions top to bottom, stopping at the first error.
/// The program must be alias-free with normalized, well-formed annotations.
pub fn typecheck_program(p: &Program) -> Result<TypedProgram, TypeError> {
    let mut out = TypedProgram::default();
    for f in &p.functions {
        let path = Path(vec![f.name.to_string()]);
        let input = match RecordEnv::from_type(&f.input) {
            Some(e) => e,
            None => {
                return err(
                    TypeErrorKind::TypeMismatch,
                    &path,
                    format!("function input must be a record type, found {}", print_type(&f.input)),
                )
            }
        };
        let output = match RecordEnv::from_type(&f.output) {
            Some(e) => e,
            None => {
                return err(
                    TypeErrorKind::TypeMismatch,
                    &path,
                    format!("function output must be a record type, found {}", print_type(&f.output)),
                )
            }
        };
        let mut checker = Checker {
            functions: &out.functions,
            seen: input.labels().cloned().collect(),
        };
        let mut body = checker.seq(&input, &f.body, &path, 1)?;
        if body.diverges {
            backpatch(&mut body, &output);
        } else {
            check_same_env(&body.env_out, &output, &path, "the function output")?;
        }
        out.functions.push(TypedFunction {
            name: f.name.clone(),
            input,
            output,
            body,
        });
    }
    Ok(out)
}

/// Typechecks one instruction in `env`; `functions` are the callable
/// definitions.
pub fn typecheck_instruction(
    functions: &[TypedFunction],
    env: &RecordEnv,
    i: &Instruction,
) -> Result<TypedInstr, TypeError> {
    let mut checker = Checker {
        functions,
        seen: env.labels().cloned().collect(),
    };
    checker.seq(env, i, &Path(vec!["<instruction>".into()]), 1)
}

fn check_same_env(
    actual: &RecordEnv,
    expected: &RecordEnv,
    path: &Path,
    what: &str,
) -> Result<(), TypeError> {
    let extra: Vec<String> = actual
        .labels()
        .filter(|l| !expected.contains(l))
        .map(|l| format!("`{l}`"))
        .collect();
    if !extra.is_empty() {
        return err(
            TypeErrorKind::LinearityLeftover,
            path,
            format!(
                "variable(s) {} left unconsumed at the end of {what} (linear values must be used or dropped)",
                extra.join(", ")
            ),
        );
    }
    let missing: Vec<String> = expected
        .labels()
        .filter(|l| !actual.contains(l))
        .map(|l| format!("`{l}`"))
        .collect();
    if !missing.is_empty() {
        return err(
            TypeErrorKind::TypeMismatch,
            path,
            format!("{what} expects variable(s) {} which are not bound", missing.join(", ")),
        );
    }
    for (l, t) in expected.iter() {
        let a = actual.get(l).expect("same label set");
        if a != t {
            return err(
                TypeErrorKind::TypeMismatch,
                path,
                format!(
                    "variable `{l}` has type {} but {what} expects {}",
                    print_type(a),
                    print_type(t)
                ),
            );
        }
    }
    Ok(())
}

fn backpatch(ti: &mut TypedInstr, target: &RecordEnv) {
    if !ti.diverges {
        return;
    }
    ti.env_out = target.clone();
    match &mut ti.kind {
        TypedInstrKind::Seq(_, b) => backpatch(b, target),
        TypedInstrKind::Match { branches, .. } => {
            for b in branches {
                backpatch(&mut b.body, target);
            }
        }
        _ => {}
    }
}

fn is_numeric(t: &Type) -> bool {
    matches!(
        t,
        Type::Prim(PrimType::Nat | PrimType::Int | PrimType::Mutez)
    )
}

impl Checker<'_> {
    fn take(&mut self, env: &mut RecordEnv, x: &Label, path: &Path) -> Result<Type, TypeError> {
        match env.remove(x) {
            Some(t) => Ok(t),
            None if self.seen.contains(x) => err(
                TypeErrorKind::UnboundVariable,
                path,
                format!("variable `{x}` was already consumed (linear values are used exactly once)"),
            ),
            None => err(
                TypeErrorKind::UnboundVariable,
                path,
                format!("unbound variable `{x}`"),
            ),
        }
    }

    fn bind(&mut self, env: &RecordEnv, new: &RecordEnv, path: &Path) -> Result<RecordEnv, TypeError> {
        match join(env, new) {
            Ok(e) => {
                self.seen.extend(new.labels().cloned());
                Ok(e)
            }
            Err(je) => err(
                TypeErrorKind::VariableAlreadyBound,
                path,
                format!(
                    "variable `{}` is already bound (drop or consume it before rebinding)",
                    je.label
                ),
            ),
        }
    }

    fn value(&self, v: &Value, path: &Path) -> Result<Type, TypeError> {
        if v.contains_operation() {
            return err(
                TypeErrorKind::TypeMismatch,
                path,
                "operation values cannot be written as literals",
            );
        }
        let t = v.type_of();
        if !check_value(v, &t) {
            return err(
                TypeErrorKind::TypeMismatch,
                path,
                format!("literal {v} does not inhabit its annotated type {}", print_type(&t)),
            );
        }
        Ok(t)
    }

    fn arg(&mut self, env: &mut RecordEnv, a: &Arg, path: &Path) -> Result<TypedArg, TypeError> {
        let ty = match a {
            Arg::Var(x) => self.take(env, x, path)?,
            Arg::Val(v) => self.value(v, path)?,
            Arg::Record(fields) => {
                let mut fs = Vec::with_capacity(fields.len());
                for (l, x) in fields {
                    if fs.iter().any(|(l2, _): &(Label, Type)| l2 == l) {
                        return err(
                            TypeErrorKind::TypeMismatch,
                            path,
                            format!("duplicate label `{l}` in record argument"),
                        );
                    }
                    fs.push((l.clone(), self.take(env, x, path)?));
                }
                fs.sort_by(|a, b| a.0.cmp(&b.0));
                Type::Record(fs)
            }
        };
        Ok(TypedArg {
            node: a.clone(),
            ty,
        })
    }

    fn variant_of(&self, t: &Type, x: &Label, path: &Path) -> Result<Vec<(Label, Type)>, TypeError> {
        match t.variant_view() {
            Some(v) => Ok(v),
            None => err(
                TypeErrorKind::TypeMismatch,
                path,
                format!("cannot match on `{x}` of non-variant type {}", print_type(t)),
            ),
        }
    }

    /// Pairs each constructor of the scrutinee type with its branch.
    fn order_branches<'b, T>(
        &self,
        ctors: &[(Label, Type)],
        branches: &'b [crate::syntax::Branch<T>],
        path: &Path,
    ) -> Result<Vec<(&'b crate::syntax::Branch<T>, Type)>, TypeError> {
        let mut seen = BTreeSet::new();
        for b in branches {
            if !ctors.iter().any(|(c, _)| c == &b.ctor) {
                return err(
                    TypeErrorKind::UnknownConstructor,
                    path,
                    format!("constructor `{}` does not belong to the scrutinee type", b.ctor),
                );
            }
            if !seen.insert(&b.ctor) {
                return err(
                    TypeErrorKind::DuplicateBranch,
                    path,
                    format!("constructor `{}` is matched more than once", b.ctor),
                );
            }
        }
        let missing: Vec<String> = ctors
            .iter()
            .filter(|(c, _)| !seen.contains(c))
            .map(|(c, _)| format!("`{c}`"))
            .collect();
        if !missing.is_empty() {
            return err(
                TypeErrorKind::NonExhaustiveMatch,
                path,
                format!("match is not exhaustive: missing {}", missing.join(", ")),
            );
        }
        Ok(ctors
            .iter()
            .map(|(c, t)| {
                let b = branches.iter().find(|b| &b.ctor == c).expect("exhaustive");
                (b, t.clone())
            })
            .collect())
    }

    fn rhs(&mut self, env: &mut RecordEnv, r: &Rhs, path: &Path) -> Result<TypedRhs, TypeError> {
        let before = env.clone();
        let (kind, ty) = self.rhs_kind(env, r, path)?;
        let consumed = before
            .iter()
            .filter(|(l, _)| !env.contains(l))
            .map(|(l, t)| (l.clone(), t.clone()))
            .collect();
        Ok(TypedRhs { kind, consumed, ty })
    }

    fn rhs_kind(
        &mut self,
        env: &mut RecordEnv,
        r: &Rhs,
        path: &Path,
    ) -> Result<(TypedRhsKind, Type), TypeError> {
        use TypeErrorKind::*;
        Ok(match r {
            Rhs::Arg(a) => {
                let ta = self.arg(env, a, path)?;
                let ty = ta.ty.clone();
                (TypedRhsKind::Arg(ta), ty)
            }
            Rhs::Apply(FunName::Dup, a) => {
                let ta = self.arg(env, a, path)?;
                let ty = Type::record([("car", ta.ty.clone()), ("cdr", ta.ty.clone())]);
                (TypedRhsKind::Dup(ta), ty)
            }
            Rhs::Apply(FunName::AssertSome, a) => {
                let ta = self.arg(env, a, path)?;
                let res = match &ta.ty {
                    Type::Record(fs) if fs.len() == 1 && fs[0].0.as_str() == "opt" => match &fs[0].1 {
                        Type::Option(inner) => Some((**inner).clone()),
                        _ => None,
                    },
                    _ => None,
                };
                let Some(res) = res else {
                    return err(
                        TypeMismatch,
                        path,
                        format!("assert_some expects {{opt : option _}}, found {}", print_type(&ta.ty)),
                    );
                };
                (TypedRhsKind::AssertSome(ta), Type::record([("res", res)]))
            }
            Rhs::Apply(FunName::User(f), a) => {
                let Some(func) = self.functions.iter().find(|g| &g.name == f) else {
                    return err(
                        UnknownFunction,
                        path,
                        format!("unknown function `{f}` (only earlier definitions can be called)"),
                    );
                };
                let (input, output) = (func.input.to_type(), func.output.to_type());
                let ta = self.arg(env, a, path)?;
                if ta.ty != input {
                    return err(
                        TypeMismatch,
                        path,
                        format!(
                            "`{f}` expects an argument of type {} but got {}",
                            print_type(&input),
                            print_type(&ta.ty)
                        ),
                    );
                }
                (TypedRhsKind::Call(f.clone(), ta), output)
            }
            Rhs::Proj(x, l) => {
                let t = self.take(env, x, path)?;
                let ft = match &t {
                    Type::Record(fs) => fs.iter().find(|(fl, _)| fl == l).map(|(_, t)| t.clone()),
                    _ => None,
                };
                let Some(ft) = ft else {
                    return err(
                        TypeMismatch,
                        path,
                        format!("`{x}` has type {} which has no field `{l}`", print_type(&t)),
                    );
                };
                (
                    TypedRhsKind::Proj {
                        var: x.clone(),
                        label: l.clone(),
                        record: t,
                    },
                    ft,
                )
            }
            Rhs::Update(x, fields) => {
                let t = self.take(env, x, path)?;
                let Type::Record(fs) = &t else {
                    return err(
                        TypeMismatch,
                        path,
                        format!("cannot update `{x}` of non-record type {}", print_type(&t)),
                    );
                };
                let mut seen = HashSet::new();
                for (l, y) in fields {
                    if !seen.insert(l) {
                        return err(TypeMismatch, path, format!("field `{l}` updated twice"));
                    }
                    let Some((_, ft)) = fs.iter().find(|(fl, _)| fl == l) else {
                        return err(
                            TypeMismatch,
                            path,
                            format!("`{x}` has type {} which has no field `{l}`", print_type(&t)),
                        );
                    };
                    let yt = self.take(env, y, path)?;
                    if &yt != ft {
                        return err(
                            TypeMismatch,
                            path,
                            format!(
                                "field `{l}` has type {} but `{y}` has type {}",
                                print_type(ft),
                                print_type(&yt)
                            ),
                        );
                    }
                }
                (
                    TypedRhsKind::Update {
                        var: x.clone(),
                        fields: fields.clone(),
                        record: t.clone(),
                    },
                    t,
                )
            }
            Rhs::Match(x, branches) => {
                let t = self.take(env, x, path)?;
                let ctors = self.variant_of(&t, x, path)?;
                let ordered = self.order_branches(&ctors, branches, &path.push(format!("match {x}")))?;
                let mut typed = Vec::with_capacity(ordered.len());
                let mut result: Option<(Type, RecordEnv)> = None;
                for (b, payload) in ordered {
                    let bpath = path.push(format!("match {x}")).push(b.ctor.to_string());
                    let mut benv =
                        self.bind(env, &RecordEnv::singleton(b.binder.clone(), payload.clone()), &bpath)?;
                    let body = self.rhs(&mut benv, &b.body, &bpath)?;
                    if benv.contains(&b.binder) {
                        return err(
                            LinearityLeftover,
                            &bpath,
                            format!("branch does not consume its binder `{}`", b.binder),
                        );
                    }
                    match &result {
                        None => result = Some((body.ty.clone(), benv)),
                        Some((rt, renv)) => {
                            if renv.labels().ne(benv.labels()) {
                                return err(
                                    LinearityLeftover,
                                    &bpath,
                                    "branches of a match expression consume different variables",
                                );
                            }
                            if rt != &body.ty {
                                return err(
                                    TypeMismatch,
                                    &bpath,
                                    format!(
                                        "branch has type {} but an earlier branch has type {}",
                                        print_type(&body.ty),
                                        print_type(rt)
                                    ),
                                );
                            }
                        }
                    }
                    typed.push(TypedBranch {
                        ctor: b.ctor.clone(),
                        binder: b.binder.clone(),
                        payload,
                        body,
                    });
                }
                let (rt, renv) = result.expect("variants are non-empty");
                *env = renv;
                (
                    TypedRhsKind::Match {
                        scrutinee: x.clone(),
                        ty: t,
                        branches: typed,
                    },
                    rt,
                )
            }
            Rhs::Construct(c, a, annot) => {
                let ta = self.arg(env, a, path)?;
                let ty = match annot {
                    None if c.as_str() == "Some" => Type::option(ta.ty.clone()),
                    None => {
                        return err(
                            TypeMismatch,
                            path,
                            format!("constructor `{c}` needs a type annotation"),
                        )
                    }
                    Some(t) => {
                        let Some(ctors) = t.variant_view() else {
                            return err(
                                TypeMismatch,
                                path,
                                format!("annotation {} of constructor `{c}` is not a variant type", print_type(t)),
                            );
                        };
                        let Some((_, pt)) = ctors.iter().find(|(l, _)| l == c) else {
                            return err(
                                UnknownConstructor,
                                path,
                                format!("constructor `{c}` is not part of {}", print_type(t)),
                            );
                        };
                        if pt != &ta.ty {
                            return err(
                                TypeMismatch,
                                path,
                                format!(
                                    "constructor `{c}` expects a payload of type {} but got {}",
                                    print_type(pt),
                                    print_type(&ta.ty)
                                ),
                            );
                        }
                        t.clone()
                    }
                };
                (
                    TypedRhsKind::Construct {
                        ctor: c.clone(),
                        arg: ta,
                    },
                    ty,
                )
            }
            Rhs::BinOp(op, a, b) => {
                let at = self.take(env, a, path)?;
                let bt = self.take(env, b, path)?;
                let ty = match op {
                    BinOp::Add if at == bt && is_numeric(&at) => at.clone(),
                    BinOp::Ge if at == bt && is_numeric(&at) => Type::bool(),
                    BinOp::MapGet => match &at {
                        Type::Map(k, v) if **k == bt => Type::option((**v).clone()),
                        _ => {
                            return err(
                                TypeMismatch,
                                path,
                                format!(
                                    "cannot look up a key of type {} in `{a}` of type {}",
                                    print_type(&bt),
                                    print_type(&at)
                                ),
                            )
                        }
                    },
                    _ => {
                        let sym = if *op == BinOp::Add { "+" } else { ">=" };
                        return err(
                            TypeMismatch,
                            path,
                            format!(
                                "operator `{sym}` is not defined on {} and {} (both operands must be nat, int or mutez)",
                                print_type(&at),
                                print_type(&bt)
                            ),
                        );
                    }
                };
                (
                    TypedRhsKind::BinOp {
                        op: *op,
                        left: a.clone(),
                        right: b.clone(),
                        left_ty: at,
                        right_ty: bt,
                    },
                    ty,
                )
            }
            Rhs::MapUpdate(m, k, v) => {
                let mt = self.take(env, m, path)?;
                let kt = self.take(env, k, path)?;
                let vt = self.take(env, v, path)?;
                match &mt {
                    Type::Map(mk, mv) if **mk == kt && vt == Type::option((**mv).clone()) => {}
                    _ => {
                        return err(
                            TypeMismatch,
                            path,
                            format!(
                                "update expects a map, a key and an optional value of matching types; found {}, {} and {}",
                                print_type(&mt),
                                print_type(&kt),
                                print_type(&vt)
                            ),
                        )
                    }
                }
                (
                    TypedRhsKind::MapUpdate {
                        map: m.clone(),
                        key: k.clone(),
                        value: v.clone(),
                        map_ty: mt.clone(),
                    },
                    mt,
                )
            }
            Rhs::Amount => (TypedRhsKind::Amount, Type::mutez()),
        })
    }

    fn lhs(&mut self, l: &Lhs, t: &Type, path: &Path) -> Result<RecordEnv, TypeError> {
        match l {
            Lhs::Var(x) => Ok(RecordEnv::singleton(x.clone(), t.clone())),
            Lhs::Record(pat) => {
                let Type::Record(fs) = t else {
                    return err(
                        TypeErrorKind::TypeMismatch,
                        path,
                        format!("cannot destructure a value of non-record type {}", print_type(t)),
                    );
                };
                let mut out = RecordEnv::new();
                for (l, x) in pat {
                    let Some((_, ft)) = fs.iter().find(|(fl, _)| fl == l) else {
                        return err(
                            TypeErrorKind::TypeMismatch,
                            path,
                            format!("record of type {} has no field `{l}`", print_type(t)),
                        );
                    };
                    if out.insert(x.clone(), ft.clone()).is_some() {
                        return err(
                            TypeErrorKind::VariableAlreadyBound,
                            path,
                            format!("variable `{x}` bound twice in one pattern"),
                        );
                    }
                }
                if let Some((missing, _)) = fs.iter().find(|(fl, _)| !pat.iter().any(|(l, _)| l == fl)) {
                    return err(
                        TypeErrorKind::TypeMismatch,
                        path,
                        format!("pattern does not bind field `{missing}` of {}", print_type(t)),
                    );
                }
                if pat.len() != fs.len() {
                    return err(
                        TypeErrorKind::TypeMismatch,
                        path,
                        "pattern binds a field more than once",
                    );
                }
                Ok(out)
            }
        }
    }

    /// Checks a right-nested sequence, numbering its elements from `idx`.
    fn seq(
        &mut self,
        env: &RecordEnv,
        i: &Instruction,
        path: &Path,
        idx: usize,
    ) -> Result<TypedInstr, TypeError> {
        match i {
            Instruction::Seq(a, b) => {
                let ta = self.instr(env, a, &path.push(format!("instr {idx}")))?;
                if ta.diverges {
                    return err(
                        TypeErrorKind::TypeMismatch,
                        &path.push(format!("instr {}", idx + 1)),
                        "unreachable code: `failwith` must be the last instruction of its block",
                    );
                }
                let tb = self.seq(&ta.env_out, b, path, idx + 1)?;
                Ok(TypedInstr {
                    env_in: env.clone(),
                    env_out: tb.env_out.clone(),
                    diverges: tb.diverges,
                    kind: TypedInstrKind::Seq(Box::new(ta), Box::new(tb)),
                })
            }
            other => self.instr(env, other, &path.push(format!("instr {idx}"))),
        }
    }

    fn instr(&mut self, env: &RecordEnv, i: &Instruction, path: &Path) -> Result<TypedInstr, TypeError> {
        let mut rest = env.clone();
        let (kind, env_out, diverges) = match i {
            Instruction::Noop => (TypedInstrKind::Noop, rest, false),
            Instruction::Seq(..) => return self.seq(env, i, path, 1),
            Instruction::Drop(x) => {
                let t = self.take(&mut rest, x, path)?;
                (TypedInstrKind::Drop(x.clone(), t), rest, false)
            }
            Instruction::Assign(l, r) => {
                let tr = self.rhs(&mut rest, r, path)?;
                let bound = self.lhs(l, &tr.ty, path)?;
                let out = self.bind(&rest, &bound, path)?;
                (TypedInstrKind::Assign(l.clone(), tr), out, false)
            }
            Instruction::Failwith(a) => {
                let ta = self.arg(&mut rest, a, path)?;
                if ta.ty.contains_operation() {
                    return err(
                        TypeErrorKind::TypeMismatch,
                        path,
                        format!("cannot fail with a value of type {}", print_type(&ta.ty)),
                    );
                }
                (TypedInstrKind::Failwith(ta), rest, true)
            }
            Instruction::Match(x, branches) => {
                let t = self.take(&mut rest, x, path)?;
                let ctors = self.variant_of(&t, x, path)?;
                let mpath = path.push(format!("match {x}"));
                let ordered = self.order_branches(&ctors, branches, &mpath)?;
                let mut typed = Vec::with_capacity(ordered.len());
                let mut joined: Option<RecordEnv> = None;
                for (b, payload) in ordered {
                    let bpath = mpath.push(b.ctor.to_string());
                    let benv =
                        self.bind(&rest, &RecordEnv::singleton(b.binder.clone(), payload.clone()), &bpath)?;
                    let body = self.seq(&benv, &b.body, &bpath, 1)?;
                    if !body.diverges {
                        match &joined {
                            None => joined = Some(body.env_out.clone()),
                            Some(j) => check_same_env(&body.env_out, j, &bpath, "the other match branches")?,
                        }
                    }
                    typed.push(TypedBranch {
                        ctor: b.ctor.clone(),
                        binder: b.binder.clone(),
                        payload,
                        body,
                    });
                }
                match joined {
                    Some(j) => {
                        for b in &mut typed {
                            backpatch(&mut b.body, &j);
                        }
                        (
                            TypedInstrKind::Match {
                                scrutinee: x.clone(),
                                ty: t,
                                branches: typed,
                            },
                            j,
                            false,
                        )
                    }
                    None => (
                        TypedInstrKind::Match {
                            scrutinee: x.clone(),
                            ty: t,
                            branches: typed,
                        },
                        rest,
                        true,
                    ),
                }
            }
        };
        Ok(TypedInstr {
            kind,
            env_in: env.clone(),
            env_out,
            diverges,
        })
    }
}

/// Renders the typed AST, one `env_in ⊢ instr ⊣ env_out` line per instruction.
pub fn print_typed(p: &TypedProgram) -> String {
    let mut out = String::new();
    for f in &p.functions {
        out.push_str(&format!("def {} : {} -> {}\n", f.name, f.input, f.output));
        dump(&f.body, 1, &mut out);
    }
    out
}

fn dump(ti: &TypedInstr, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match &ti.kind {
        TypedInstrKind::Seq(a, b) => {
            dump(a, depth, out);
            dump(b, depth, out);
        }
        TypedInstrKind::Match {
            scrutinee,
            branches,
            ..
        } => {
            out.push_str(&format!(
                "{pad}{} ⊢ match {scrutinee} with ⊣ {}\n",
                ti.env_in, ti.env_out
            ));
            for b in branches {
                out.push_str(&format!("{pad}| {} {} ->\n", b.ctor, b.binder));
                dump(&b.body, depth + 1, out);
            }
            out.push_str(&format!("{pad}end\n"));
        }
        kind => {
            let src = match kind {
                TypedInstrKind::Noop => Instruction::Noop,
                TypedInstrKind::Assign(l, r) => Instruction::Assign(l.clone(), rhs_source(r)),
                TypedInstrKind::Drop(x, _) => Instruction::Drop(x.clone()),
                TypedInstrKind::Failwith(a) => Instruction::Failwith(a.node.clone()),
                _ => unreachable!(),
            };
            out.push_str(&format!(
                "{pad}{} ⊢ {} ⊣ {}\n",
                ti.env_in,
                print_instruction_head(&src),
                ti.env_out
            ));
        }
    }
}

/// Recovers the untyped right-hand side.
pub fn rhs_source(r: &TypedRhs) -> Rhs {
    match &r.kind {
        TypedRhsKind::Arg(a) => Rhs::Arg(a.node.clone()),
        TypedRhsKind::Dup(a) => Rhs::Apply(FunName::Dup, a.node.clone()),
        TypedRhsKind::AssertSome(a) => Rhs::Apply(FunName::AssertSome, a.node.clone()),
        TypedRhsKind::Call(f, a) => Rhs::Apply(FunName::User(f.clone()), a.node.clone()),
        TypedRhsKind::Proj { var, label, .. } => Rhs::Proj(var.clone(), label.clone()),
        TypedRhsKind::Update { var, fields, .. } => Rhs::Update(var.clone(), fields.clone()),
        TypedRhsKind::Match {
            scrutinee,
            branches,
            ..
        } => Rhs::Match(
            scrutinee.clone(),
            branches
                .iter()
                .map(|b| crate::syntax::Branch {
                    ctor: b.ctor.clone(),
                    binder: b.binder.clone(),
                    body: rhs_source(&b.body),
                })
                .collect(),
        ),
        TypedRhsKind::Construct { ctor, arg } => {
            let annot = if ctor.as_str() == "Some" && matches!(r.ty, Type::Option(_)) && r.ty == Type::option(arg.ty.clone()) {
                None
            } else {
                Some(r.ty.clone())
            };
            Rhs::Construct(ctor.clone(), arg.node.clone(), annot)
        }
        TypedRhsKind::BinOp { op, left, right, .. } => Rhs::BinOp(*op, left.clone(), right.clone()),
        TypedRhsKind::MapUpdate { map, key, value, .. } => {
            Rhs::MapUpdate(map.clone(), key.clone(), value.clone())
        }
        TypedRhsKind::Amount => Rhs::Amount,
    }
}
