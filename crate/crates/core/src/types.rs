//! Type algebra: alias inlining, label normalization, well-formedness and
//! the partial disjoint union `join` on record environments.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::syntax::{
    print_type, Arg, Branch, Function, Instruction, Label, PrimType, Program, Rhs, Type, Value,
};

/// A record type read as a typing environment: variable names to types.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash, PartialOrd, Ord)]
pub struct RecordEnv(BTreeMap<Label, Type>);

impl RecordEnv {
    pub fn new() -> Self {
        RecordEnv(BTreeMap::new())
    }

    pub fn singleton(l: Label, t: Type) -> Self {
        let mut m = BTreeMap::new();
        m.insert(l, t);
        RecordEnv(m)
    }

    /// Reads a record type as an environment; `None` for non-records.
    pub fn from_type(t: &Type) -> Option<Self> {
        match t {
            Type::Record(fields) => Some(RecordEnv(fields.iter().cloned().collect())),
            _ => None,
        }
    }

    pub fn to_type(&self) -> Type {
        Type::Record(self.0.iter().map(|(l, t)| (l.clone(), t.clone())).collect())
    }

    pub fn get(&self, l: &Label) -> Option<&Type> {
        self.0.get(l)
    }

    pub fn contains(&self, l: &Label) -> bool {
        self.0.contains_key(l)
    }

    pub fn remove(&mut self, l: &Label) -> Option<Type> {
        self.0.remove(l)
    }

    pub fn insert(&mut self, l: Label, t: Type) -> Option<Type> {
        self.0.insert(l, t)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Label, &Type)> {
        self.0.iter()
    }

    pub fn labels(&self) -> impl Iterator<Item = &Label> {
        self.0.keys()
    }
}

impl FromIterator<(Label, Type)> for RecordEnv {
    fn from_iter<I: IntoIterator<Item = (Label, Type)>>(iter: I) -> Self {
        RecordEnv(iter.into_iter().collect())
    }
}

impl fmt::Display for RecordEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_type(&self.to_type()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("labels clash in join: `{label}` is bound on both sides")]
pub struct JoinError {
    pub label: Label,
}

/// Partial disjoint union; fails on the first shared label.
pub fn join(a: &RecordEnv, b: &RecordEnv) -> Result<RecordEnv, JoinError> {
    let mut out = a.clone();
    for (l, t) in b.iter() {
        if out.insert(l.clone(), t.clone()).is_some() {
            return Err(JoinError { label: l.clone() });
        }
    }
    Ok(out)
}

/// Errors in type declarations, raised before linear typechecking.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TypeFormError {
    #[error("unknown type alias `{0}`")]
    UnknownAlias(Label),
    #[error("type alias `{0}` is defined recursively (via {1})")]
    CyclicAlias(Label, String),
    #[error("ill-formed type at {path}: {detail}")]
    IllFormed { path: String, detail: String },
}

fn resolve_alias(
    name: &Label,
    defs: &HashMap<Label, Type>,
    done: &mut HashMap<Label, Type>,
    stack: &mut Vec<Label>,
) -> Result<Type, TypeFormError> {
    if let Some(t) = done.get(name) {
        return Ok(t.clone());
    }
    if stack.contains(name) {
        let chain = stack
            .iter()
            .chain(std::iter::once(name))
            .map(Label::as_str)
            .collect::<Vec<_>>()
            .join(" -> ");
        return Err(TypeFormError::CyclicAlias(stack[0].clone(), chain));
    }
    let def = defs
        .get(name)
        .ok_or_else(|| TypeFormError::UnknownAlias(name.clone()))?;
    stack.push(name.clone());
    let out = subst(def, &mut |a| resolve_alias(a, defs, done, stack))?;
    stack.pop();
    done.insert(name.clone(), out.clone());
    Ok(out)
}

fn subst<E>(t: &Type, f: &mut dyn FnMut(&Label) -> Result<Type, E>) -> Result<Type, E> {
    Ok(match t {
        Type::Alias(a) => f(a)?,
        Type::Prim(p) => Type::Prim(*p),
        Type::Record(fs) => Type::Record(
            fs.iter()
                .map(|(l, t)| Ok((l.clone(), subst(t, f)?)))
                .collect::<Result<_, E>>()?,
        ),
        Type::Variant(fs) => Type::Variant(
            fs.iter()
                .map(|(l, t)| Ok((l.clone(), subst(t, f)?)))
                .collect::<Result<_, E>>()?,
        ),
        Type::List(e) => Type::list(subst(e, f)?),
        Type::Option(e) => Type::option(subst(e, f)?),
        Type::Map(k, v) => Type::map(subst(k, f)?, subst(v, f)?),
    })
}

/// Replaces every alias by its definition; the result has no alias table.
pub fn inline_aliases(p: &Program) -> Result<Program, TypeFormError> {
    let defs: HashMap<Label, Type> = p.type_aliases.iter().cloned().collect();
    let mut done = HashMap::new();
    for (name, _) in &p.type_aliases {
        resolve_alias(name, &defs, &mut done, &mut Vec::new())?;
    }
    let mut expand = |t: &Type| {
        subst(t, &mut |a: &Label| {
            done.get(a)
                .cloned()
                .ok_or_else(|| TypeFormError::UnknownAlias(a.clone()))
        })
    };
    let functions = p
        .functions
        .iter()
        .map(|f| map_function_types(f, &mut expand))
        .collect::<Result<_, _>>()?;
    Ok(Program {
        type_aliases: Vec::new(),
        functions,
    })
}

/// Sorts record fields and variant constructors at every depth.
pub fn normalize_type(t: &Type) -> Type {
    match t {
        Type::Record(fs) | Type::Variant(fs) => {
            let mut fs: Vec<(Label, Type)> =
                fs.iter().map(|(l, t)| (l.clone(), normalize_type(t))).collect();
            fs.sort_by(|a, b| a.0.cmp(&b.0));
            if matches!(t, Type::Record(_)) {
                Type::Record(fs)
            } else {
                Type::Variant(fs)
            }
        }
        Type::List(e) => Type::list(normalize_type(e)),
        Type::Option(e) => Type::option(normalize_type(e)),
        Type::Map(k, v) => Type::map(normalize_type(k), normalize_type(v)),
        Type::Prim(_) | Type::Alias(_) => t.clone(),
    }
}

/// Normalizes the types embedded in a value.
pub fn normalize_value(v: &Value) -> Value {
    map_value_types(v, &mut |t| Ok::<_, ()>(normalize_type(t))).expect("infallible")
}

/// Normalizes every type annotation of a program.
pub fn normalize_program(p: &Program) -> Program {
    Program {
        type_aliases: p
            .type_aliases
            .iter()
            .map(|(l, t)| (l.clone(), normalize_type(t)))
            .collect(),
        functions: p
            .functions
            .iter()
            .map(|f| {
                map_function_types(f, &mut |t| Ok::<_, ()>(normalize_type(t))).expect("infallible")
            })
            .collect(),
    }
}

fn map_value_types<E>(v: &Value, f: &mut dyn FnMut(&Type) -> Result<Type, E>) -> Result<Value, E> {
    Ok(match v {
        Value::Record(fs) => Value::Record(
            fs.iter()
                .map(|(l, v)| Ok((l.clone(), map_value_types(v, f)?)))
                .collect::<Result<_, E>>()?,
        ),
        Value::Variant { ctor, payload, ty } => Value::Variant {
            ctor: ctor.clone(),
            payload: Box::new(map_value_types(payload, f)?),
            ty: f(ty)?,
        },
        Value::List(items, t) => Value::List(
            items
                .iter()
                .map(|x| map_value_types(x, f))
                .collect::<Result<_, E>>()?,
            f(t)?,
        ),
        Value::Map(entries, k, val) => Value::Map(
            entries
                .iter()
                .map(|(a, b)| Ok((map_value_types(a, f)?, map_value_types(b, f)?)))
                .collect::<Result<_, E>>()?,
            f(k)?,
            f(val)?,
        ),
        Value::None(t) => Value::None(f(t)?),
        Value::Some(x) => Value::Some(Box::new(map_value_types(x, f)?)),
        other => other.clone(),
    })
}

fn map_arg_types<E>(a: &Arg, f: &mut dyn FnMut(&Type) -> Result<Type, E>) -> Result<Arg, E> {
    Ok(match a {
        Arg::Val(v) => Arg::Val(map_value_types(v, f)?),
        other => other.clone(),
    })
}

fn map_rhs_types<E>(r: &Rhs, f: &mut dyn FnMut(&Type) -> Result<Type, E>) -> Result<Rhs, E> {
    Ok(match r {
        Rhs::Arg(a) => Rhs::Arg(map_arg_types(a, f)?),
        Rhs::Apply(g, a) => Rhs::Apply(g.clone(), map_arg_types(a, f)?),
        Rhs::Match(x, bs) => Rhs::Match(
            x.clone(),
            bs.iter()
                .map(|b| {
                    Ok(Branch {
                        ctor: b.ctor.clone(),
                        binder: b.binder.clone(),
                        body: map_rhs_types(&b.body, f)?,
                    })
                })
                .collect::<Result<_, E>>()?,
        ),
        Rhs::Construct(c, a, t) => Rhs::Construct(
            c.clone(),
            map_arg_types(a, f)?,
            match t {
                Some(t) => Some(f(t)?),
                None => None,
            },
        ),
        other => other.clone(),
    })
}

fn map_instr_types<E>(
    i: &Instruction,
    f: &mut dyn FnMut(&Type) -> Result<Type, E>,
) -> Result<Instruction, E> {
    Ok(match i {
        Instruction::Seq(a, b) => Instruction::Seq(
            Box::new(map_instr_types(a, f)?),
            Box::new(map_instr_types(b, f)?),
        ),
        Instruction::Assign(l, r) => Instruction::Assign(l.clone(), map_rhs_types(r, f)?),
        Instruction::Match(x, bs) => Instruction::Match(
            x.clone(),
            bs.iter()
                .map(|b| {
                    Ok(Branch {
                        ctor: b.ctor.clone(),
                        binder: b.binder.clone(),
                        body: map_instr_types(&b.body, f)?,
                    })
                })
                .collect::<Result<_, E>>()?,
        ),
        Instruction::Failwith(a) => Instruction::Failwith(map_arg_types(a, f)?),
        other => other.clone(),
    })
}

fn map_function_types<E>(
    func: &Function,
    f: &mut dyn FnMut(&Type) -> Result<Type, E>,
) -> Result<Function, E> {
    Ok(Function {
        name: func.name.clone(),
        input: f(&func.input)?,
        output: f(&func.output)?,
        body: map_instr_types(&func.body, f)?,
    })
}

/// Calls `f` on every type annotation of a function, in source order.
pub fn for_each_type(func: &Function, f: &mut dyn FnMut(&Type)) {
    let _ = map_function_types(func, &mut |t| {
        f(t);
        Ok::<_, ()>(t.clone())
    });
}

/// Checks that labels are strictly increasing at every depth, variants are
/// non-empty and map keys are comparable. `t` must be alias-free.
pub fn well_formed(t: &Type) -> Result<(), TypeFormError> {
    check_wf(t, &mut Vec::new())
}

fn ill_formed(path: &[String], detail: String) -> TypeFormError {
    TypeFormError::IllFormed {
        path: if path.is_empty() {
            "top level".to_owned()
        } else {
            path.join(" > ")
        },
        detail,
    }
}

fn check_wf(t: &Type, path: &mut Vec<String>) -> Result<(), TypeFormError> {
    match t {
        Type::Prim(_) => Ok(()),
        Type::Alias(a) => Err(ill_formed(path, format!("unexpanded alias `{a}`"))),
        Type::Record(fs) | Type::Variant(fs) => {
            let is_record = matches!(t, Type::Record(_));
            if !is_record && fs.is_empty() {
                return Err(ill_formed(path, "variant type with no constructors".to_owned()));
            }
            for w in fs.windows(2) {
                if w[0].0 >= w[1].0 {
                    return Err(ill_formed(
                        path,
                        format!(
                            "labels `{}` and `{}` are not in strictly increasing order",
                            w[0].0, w[1].0
                        ),
                    ));
                }
            }
            for (l, ft) in fs {
                path.push(if is_record {
                    format!("field {l}")
                } else {
                    format!("constructor {l}")
                });
                check_wf(ft, path)?;
                path.pop();
            }
            Ok(())
        }
        Type::List(e) | Type::Option(e) => {
            path.push(if matches!(t, Type::List(_)) { "list element" } else { "option payload" }.to_owned());
            check_wf(e, path)?;
            path.pop();
            Ok(())
        }
        Type::Map(k, v) => {
            match **k {
                Type::Prim(p) if p.is_comparable() => {}
                _ => {
                    return Err(ill_formed(
                        path,
                        format!(
                            "map key type {} is not comparable (use nat, int, string, mutez or bool)",
                            print_type(k)
                        ),
                    ))
                }
            }
            path.push("map value".to_owned());
            check_wf(v, path)?;
            path.pop();
            Ok(())
        }
    }
}

/// Structural equality; meaningful on alias-free normalized types.
pub fn type_equal(a: &Type, b: &Type) -> bool {
    a == b
}

/// Whether `v` inhabits `t` (both normalized, alias-free).
pub fn check_value(v: &Value, t: &Type) -> bool {
    match (v, t) {
        (Value::Record(vs), Type::Record(ts)) => {
            vs.len() == ts.len()
                && vs
                    .iter()
                    .zip(ts)
                    .all(|((lv, v), (lt, t))| lv == lt && check_value(v, t))
        }
        (Value::Variant { ctor, payload, ty }, Type::Variant(ctors)) => {
            ty == t
                && ctors
                    .iter()
                    .find(|(c, _)| c == ctor)
                    .is_some_and(|(_, pt)| check_value(payload, pt))
        }
        (Value::Nat(_), Type::Prim(PrimType::Nat))
        | (Value::Int(_), Type::Prim(PrimType::Int))
        | (Value::String(_), Type::Prim(PrimType::String))
        | (Value::Bool(_), Type::Prim(PrimType::Bool))
        | (Value::Operation(_), Type::Prim(PrimType::Operation)) => true,
        (Value::Mutez(m), Type::Prim(PrimType::Mutez)) => *m <= crate::syntax::MUTEZ_MAX,
        (Value::List(items, et), Type::List(e)) => {
            et == &**e && items.iter().all(|x| check_value(x, e))
        }
        (Value::Map(entries, kt, vt), Type::Map(k, val)) => {
            kt == &**k
                && vt == &**val
                && entries
                    .iter()
                    .all(|(a, b)| check_value(a, k) && check_value(b, val))
        }
        (Value::None(et), Type::Option(e)) => et == &**e,
        (Value::Some(x), Type::Option(e)) => check_value(x, e),
        _ => false,
    }
}
