use std::collections::BTreeMap;

use albert::michelson::{interpret, typecheck, InterpError, MichContext, MichInstr as I, MichType as T, MichValue as V, StackTy};
use num_bigint::{BigInt, BigUint};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn nat(n: u32) -> V {
    V::Nat(BigUint::from(n))
}

fn run(code: &[I], stack: Vec<V>) -> Result<Vec<V>, InterpError> {
    interpret(code, stack, &MichContext::default())
}

#[test]
fn dig_then_dug_is_identity() {
    for depth in 1..=6u32 {
        let stack: Vec<V> = (0..depth).map(nat).collect();
        for n in 0..depth as usize {
            assert_eq!(run(&[I::Dig(n), I::Dug(n)], stack.clone()).unwrap(), stack, "depth {depth}, n {n}");
            assert_eq!(run(&[I::Dug(n), I::Dig(n)], stack.clone()).unwrap(), stack, "depth {depth}, n {n}");
        }
        assert!(run(&[I::Dig(depth as usize)], stack.clone()).is_err());
    }
}

#[test]
fn pair_then_unpair_is_identity() {
    for depth in 2..=6u32 {
        let stack: Vec<V> = (0..depth).map(nat).collect();
        assert_eq!(run(&[I::Pair, I::Unpair], stack.clone()).unwrap(), stack);
    }
}

#[test]
fn left_then_if_left_takes_the_left_branch() {
    let code = [
        I::Left(T::String),
        I::IfLeft(vec![I::Push(T::Nat, nat(1)), I::Add], vec![I::Drop, I::Push(T::Nat, nat(0))]),
    ];
    for k in 0..5 {
        assert_eq!(run(&code, vec![nat(k)]).unwrap(), vec![nat(k + 1)]);
    }
    let right = [I::Right(T::Nat), I::IfLeft(vec![I::Drop, I::Unit], vec![I::Drop, I::Push(T::Bool, V::Bool(true))])];
    assert_eq!(run(&right, vec![V::String("x".into())]).unwrap(), vec![V::Bool(true)]);
}

fn small_comparables() -> Vec<Vec<V>> {
    vec![
        (0..4).map(nat).collect(),
        (-2..2).map(|i| V::Int(BigInt::from(i))).collect(),
        [0, 1, 100, 9].into_iter().map(V::Mutez).collect(),
        ["", "a", "ab", "b", "no", "yes"].into_iter().map(|s| V::String(s.into())).collect(),
        vec![V::Bool(false), V::Bool(true)],
    ]
}

fn compare(a: &V, b: &V) -> BigInt {
    match run(&[I::Compare], vec![a.clone(), b.clone()]).unwrap().as_slice() {
        [V::Int(i)] => i.clone(),
        other => panic!("COMPARE returned {other:?}"),
    }
}

#[test]
fn compare_is_antisymmetric() {
    for family in small_comparables() {
        for a in &family {
            for b in &family {
                assert_eq!(compare(a, b), -compare(b, a), "{a:?} {b:?}");
                assert_eq!(compare(a, b) == BigInt::from(0), a == b);
            }
        }
    }
}

// ---- soundness of the typechecker with respect to the interpreter ----

fn random_type(rng: &mut ChaCha8Rng, depth: usize) -> T {
    let prims = [T::Unit, T::Nat, T::Int, T::String, T::Mutez, T::Bool];
    if depth == 0 || rng.gen_bool(0.6) {
        return prims.choose(rng).unwrap().clone();
    }
    match rng.gen_range(0..5) {
        0 => T::pair(random_type(rng, depth - 1), random_type(rng, depth - 1)),
        1 => T::or(random_type(rng, depth - 1), random_type(rng, depth - 1)),
        2 => T::option(random_type(rng, depth - 1)),
        3 => T::list(random_type(rng, depth - 1)),
        _ => T::map(comparable_type(rng), random_type(rng, depth - 1)),
    }
}

fn comparable_type(rng: &mut ChaCha8Rng) -> T {
    [T::Nat, T::Int, T::String, T::Mutez, T::Bool].choose(rng).unwrap().clone()
}

fn random_value(rng: &mut ChaCha8Rng, t: &T) -> V {
    match t {
        T::Unit => V::Unit,
        T::Nat => nat(rng.gen_range(0..10)),
        T::Int => V::Int(BigInt::from(rng.gen_range(-5..5))),
        T::String => V::String(["", "a", "yes"].choose(rng).unwrap().to_string()),
        T::Mutez => V::Mutez(if rng.gen_bool(0.1) { albert::syntax::MUTEZ_MAX } else { rng.gen_range(0..200) }),
        T::Bool => V::Bool(rng.gen()),
        T::Operation => V::Operation("op".into()),
        T::Pair(a, b) => V::pair(random_value(rng, a), random_value(rng, b)),
        T::Or(a, b) => {
            if rng.gen() {
                V::Left(Box::new(random_value(rng, a)))
            } else {
                V::Right(Box::new(random_value(rng, b)))
            }
        }
        T::Option(a) => {
            if rng.gen() {
                V::None
            } else {
                V::Some(Box::new(random_value(rng, a)))
            }
        }
        T::List(a) => V::List((0..rng.gen_range(0..3)).map(|_| random_value(rng, a)).collect()),
        T::Map(k, v) => {
            let m: BTreeMap<V, V> = (0..rng.gen_range(0..3))
                .map(|_| (random_value(rng, k), random_value(rng, v)))
                .collect();
            V::Map(m)
        }
    }
}

/// Type-directed generation of a well-typed instruction sequence from
/// stack `s`. Returns the code and the resulting stack (`None` if it ends
/// in FAILWITH).
fn random_code(rng: &mut ChaCha8Rng, mut s: Vec<T>, len: usize, depth: usize) -> (Vec<I>, Option<Vec<T>>) {
    let mut code = Vec::new();
    for _ in 0..len {
        let Some(i) = random_instr(rng, &s, depth) else { continue };
        match typecheck(std::slice::from_ref(&i), StackTy::Live(s.clone())) {
            Ok(StackTy::Live(next)) => s = next,
            Ok(StackTy::Failed) => {
                code.push(i);
                return (code, None);
            }
            Err(e) => panic!("generator produced an ill-typed instruction: {e}"),
        }
        code.push(i);
    }
    (code, Some(s))
}

fn random_instr(rng: &mut ChaCha8Rng, s: &[T], depth: usize) -> Option<I> {
    let top = s.first();
    let second = s.get(1);
    Some(match rng.gen_range(0..22) {
        0 => {
            let t = random_type(rng, 2);
            let v = random_value(rng, &t);
            I::Push(t, v)
        }
        1 => I::Unit,
        2 if s.len() >= 2 => I::Pair,
        3 | 4 if matches!(top, Some(T::Pair(..))) => [I::Car, I::Cdr, I::Unpair].choose(rng).unwrap().clone(),
        5 if !s.is_empty() => I::Dup,
        6 if s.len() > 1 => I::Drop,
        7 if s.len() >= 2 => I::Swap,
        8 if !s.is_empty() => I::Dig(rng.gen_range(0..s.len())),
        9 if !s.is_empty() => I::Dug(rng.gen_range(0..s.len())),
        10 if !s.is_empty() => {
            let t = random_type(rng, 1);
            if rng.gen() {
                I::Left(t)
            } else {
                I::Right(t)
            }
        }
        11 if depth < 3 => match top? {
            T::Or(a, b) => {
                let rest = s[1..].to_vec();
                let mut left = vec![(**a).clone()];
                left.extend(rest.clone());
                if **a == **b && rng.gen() {
                    let (c, _) = random_code(rng, left, 4, depth + 1);
                    I::IfLeft(c.clone(), c)
                } else {
                    let (c, _) = random_code(rng, left, 3, depth + 1);
                    let fail = if b.is_pushable() { vec![I::Failwith] } else { vec![I::Drop, I::Unit, I::Failwith] };
                    if rng.gen() {
                        I::IfLeft(c, fail)
                    } else {
                        I::IfLeft(vec![I::Drop], vec![I::Drop])
                    }
                }
            }
            T::Bool => {
                let (c, _) = random_code(rng, s[1..].to_vec(), 4, depth + 1);
                if rng.gen() {
                    I::If(c.clone(), c)
                } else {
                    I::If(c, vec![I::Push(T::String, V::String("no".into())), I::Failwith])
                }
            }
            T::Option(_) => {
                if rng.gen() {
                    I::IfNone(vec![], vec![I::Drop])
                } else {
                    I::IfNone(vec![I::Unit, I::Failwith], vec![])
                }
            }
            _ => return None,
        },
        12 if !s.is_empty() => I::Some,
        13 => I::None(random_type(rng, 1)),
        14 => I::Nil(random_type(rng, 1)),
        15 => match (top, second) {
            (Some(a), Some(T::List(e))) if **e == *a => I::Cons,
            _ => return None,
        },
        16 => match (top, second) {
            (Some(T::Nat | T::Int), Some(T::Nat | T::Int)) | (Some(T::Mutez), Some(T::Mutez)) => I::Add,
            _ => return None,
        },
        17 => match (top, second) {
            (Some(a), Some(b)) if a == b && a.is_comparable() => I::Compare,
            (Some(T::Int), _) => I::Ge,
            _ => return None,
        },
        18 => match (top, second) {
            (Some(k), Some(T::Map(mk, _))) if **mk == *k => I::Get,
            _ => return None,
        },
        19 => match (top, second, s.get(2)) {
            (Some(k), Some(T::Option(o)), Some(T::Map(mk, mv))) if **mk == *k && **o == **mv => I::Update,
            _ => return None,
        },
        20 => I::Amount,
        21 if top.is_some_and(|t| t.is_pushable()) && rng.gen_bool(0.2) => I::Failwith,
        _ => return None,
    })
}

#[test]
fn typechecked_code_never_gets_stuck() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failed = 0;
    for case in 0..10_000 {
        let input: Vec<T> = (0..rng.gen_range(1..4)).map(|_| random_type(&mut rng, 2)).collect();
        let (code, _) = random_code(&mut rng, input.clone(), 12, 0);
        let out = typecheck(&code, StackTy::Live(input.clone())).unwrap_or_else(|e| panic!("case {case}: {e}"));
        let stack: Vec<V> = input.iter().map(|t| random_value(&mut rng, t)).collect();
        let amount = rng.gen_range(0..300);
        match (interpret(&code, stack, &MichContext { amount }), &out) {
            (Ok(vals), StackTy::Live(tys)) => {
                assert_eq!(vals.len(), tys.len(), "case {case}");
                for (v, t) in vals.iter().zip(tys) {
                    assert!(v.has_type(t), "case {case}: {v:?} : {t:?}");
                }
            }
            (Ok(_), StackTy::Failed) => panic!("case {case}: code typed as failing returned normally"),
            (Err(InterpError::Failed(_)), _) => failed += 1,
            (Err(InterpError::Stuck(m)), _) => panic!("case {case}: stuck: {m}"),
        }
    }
    assert!(failed < 5_000, "most runs should complete, {failed} failed");
}
