//! Comb encodings of Albert types and values into Michelson.

use std::collections::BTreeMap;

use crate::michelson::{MichType, MichValue};
use crate::syntax::{Label, PrimType, Type, Value};

/// Records become right combs of pairs and variants right combs of `or`;
/// singletons collapse to their payload and `{}` is `unit`.
pub fn compile_type(t: &Type) -> MichType {
    match t {
        Type::Record(fs) => comb(fs, MichType::Unit, MichType::pair),
        Type::Variant(cs) => comb(cs, MichType::Unit, MichType::or),
        Type::Prim(p) => match p {
            PrimType::Nat => MichType::Nat,
            PrimType::Int => MichType::Int,
            PrimType::String => MichType::String,
            PrimType::Mutez => MichType::Mutez,
            PrimType::Bool => MichType::Bool,
            PrimType::Operation => MichType::Operation,
        },
        Type::List(e) => MichType::list(compile_type(e)),
        Type::Option(e) => MichType::option(compile_type(e)),
        Type::Map(k, v) => MichType::map(compile_type(k), compile_type(v)),
        Type::Alias(a) => panic!("compile_type: unexpanded alias `{a}`"),
    }
}

fn comb(fs: &[(Label, Type)], empty: MichType, node: fn(MichType, MichType) -> MichType) -> MichType {
    match fs {
        [] => empty,
        [(_, t)] => compile_type(t),
        [(_, t), rest @ ..] => node(compile_type(t), comb(rest, MichType::Unit, node)),
    }
}

/// Encodes `v`, which must inhabit `t`.
pub fn compile_value(v: &Value, t: &Type) -> MichValue {
    match (v, t) {
        (Value::Record(vs), Type::Record(ts)) => {
            assert_eq!(vs.len(), ts.len(), "compile_value: record shape mismatch");
            record_comb(&vs.iter().zip(ts).map(|((_, v), (_, t))| (v, t)).collect::<Vec<_>>())
        }
        (Value::Variant { ctor, payload, .. }, Type::Variant(cs)) => {
            let i = cs
                .iter()
                .position(|(c, _)| c == ctor)
                .unwrap_or_else(|| panic!("compile_value: unknown constructor `{ctor}`"));
            let mut m = compile_value(payload, &cs[i].1);
            if i + 1 < cs.len() {
                m = MichValue::Left(Box::new(m));
            }
            for _ in 0..i {
                m = MichValue::Right(Box::new(m));
            }
            m
        }
        (Value::Nat(n), _) => MichValue::Nat(n.clone()),
        (Value::Int(n), _) => MichValue::Int(n.clone()),
        (Value::Mutez(n), _) => MichValue::Mutez(*n),
        (Value::String(s), _) => MichValue::String(s.clone()),
        (Value::Bool(b), _) => MichValue::Bool(*b),
        (Value::Operation(d), _) => MichValue::Operation(d.clone()),
        (Value::List(xs, _), Type::List(e)) => {
            MichValue::List(xs.iter().map(|x| compile_value(x, e)).collect())
        }
        (Value::Map(m, _, _), Type::Map(k, val)) => MichValue::Map(
            m.iter()
                .map(|(a, b)| (compile_value(a, k), compile_value(b, val)))
                .collect(),
        ),
        (Value::None(_), Type::Option(_)) => MichValue::None,
        (Value::Some(x), Type::Option(e)) => MichValue::Some(Box::new(compile_value(x, e))),
        _ => panic!("compile_value: {v} does not have type {t}"),
    }
}

fn record_comb(parts: &[(&Value, &Type)]) -> MichValue {
    match parts {
        [] => MichValue::Unit,
        [(v, t)] => compile_value(v, t),
        [(v, t), rest @ ..] => MichValue::pair(compile_value(v, t), record_comb(rest)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot decode Michelson value {value} as Albert type {ty}")]
pub struct DecodeError {
    pub value: String,
    pub ty: String,
}

/// Inverse of [`compile_value`].
pub fn decode_value(m: &MichValue, t: &Type) -> Result<Value, DecodeError> {
    let bad = || DecodeError {
        value: crate::michelson::print_mich_value(m),
        ty: t.to_string(),
    };
    Ok(match (m, t) {
        (_, Type::Record(fs)) => {
            let mut out = Vec::with_capacity(fs.len());
            let mut cur = m;
            for (i, (l, ft)) in fs.iter().enumerate() {
                if i + 1 == fs.len() {
                    out.push((l.clone(), decode_value(cur, ft)?));
                } else {
                    let MichValue::Pair(a, b) = cur else {
                        return Err(bad());
                    };
                    out.push((l.clone(), decode_value(a, ft)?));
                    cur = b;
                }
            }
            if fs.is_empty() && *m != MichValue::Unit {
                return Err(bad());
            }
            Value::Record(out)
        }
        (_, Type::Variant(cs)) => {
            let mut cur = m;
            for (i, (c, pt)) in cs.iter().enumerate() {
                let payload = if i + 1 == cs.len() {
                    Some(cur)
                } else {
                    match cur {
                        MichValue::Left(a) => Some(&**a),
                        MichValue::Right(b) => {
                            cur = b;
                            None
                        }
                        _ => return Err(bad()),
                    }
                };
                if let Some(p) = payload {
                    return Ok(Value::Variant {
                        ctor: c.clone(),
                        payload: Box::new(decode_value(p, pt)?),
                        ty: t.clone(),
                    });
                }
            }
            return Err(bad());
        }
        (MichValue::Nat(n), Type::Prim(PrimType::Nat)) => Value::Nat(n.clone()),
        (MichValue::Int(n), Type::Prim(PrimType::Int)) => Value::Int(n.clone()),
        (MichValue::Mutez(n), Type::Prim(PrimType::Mutez)) => Value::Mutez(*n),
        (MichValue::String(s), Type::Prim(PrimType::String)) => Value::String(s.clone()),
        (MichValue::Bool(b), Type::Prim(PrimType::Bool)) => Value::Bool(*b),
        (MichValue::Operation(d), Type::Prim(PrimType::Operation)) => Value::Operation(d.clone()),
        (MichValue::List(xs), Type::List(e)) => Value::List(
            xs.iter().map(|x| decode_value(x, e)).collect::<Result<_, _>>()?,
            (**e).clone(),
        ),
        (MichValue::Map(entries), Type::Map(k, v)) => Value::Map(
            entries
                .iter()
                .map(|(a, b)| Ok((decode_value(a, k)?, decode_value(b, v)?)))
                .collect::<Result<BTreeMap<_, _>, DecodeError>>()?,
            (**k).clone(),
            (**v).clone(),
        ),
        (MichValue::None, Type::Option(e)) => Value::None((**e).clone()),
        (MichValue::Some(x), Type::Option(e)) => Value::Some(Box::new(decode_value(x, e)?)),
        _ => return Err(bad()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn storage_type() {
        let t = Type::record([
            ("threshold", Type::mutez()),
            ("votes", Type::map(Type::string(), Type::nat())),
        ]);
        assert_eq!(
            compile_type(&t),
            MichType::pair(MichType::Mutez, MichType::map(MichType::String, MichType::Nat))
        );
        assert_eq!(compile_type(&Type::unit()), MichType::Unit);
    }

    #[test]
    fn three_constructor_variant() {
        let t = Type::variant([("A", Type::nat()), ("B", Type::string()), ("C", Type::unit())]);
        assert_eq!(
            compile_type(&t),
            MichType::or(MichType::Nat, MichType::or(MichType::String, MichType::Unit))
        );
        let v = Value::Variant {
            ctor: Label::from("B"),
            payload: Box::new(Value::string("x")),
            ty: t.clone(),
        };
        let m = compile_value(&v, &t);
        assert_eq!(
            m,
            MichValue::Right(Box::new(MichValue::Left(Box::new(MichValue::String("x".into())))))
        );
        assert_eq!(decode_value(&m, &t).unwrap(), v);
    }

    #[test]
    fn record_values() {
        let t = Type::record([("a", Type::nat()), ("b", Type::unit()), ("c", Type::string())]);
        let v = Value::record([
            ("a", Value::nat(1)),
            ("b", Value::unit()),
            ("c", Value::string("s")),
        ]);
        let m = compile_value(&v, &t);
        assert_eq!(
            m,
            MichValue::pair(
                MichValue::Nat(1u8.into()),
                MichValue::pair(MichValue::Unit, MichValue::String("s".into()))
            )
        );
        assert_eq!(decode_value(&m, &t).unwrap(), v);
        assert_eq!(compile_value(&Value::unit(), &Type::unit()), MichValue::Unit);
    }
}
