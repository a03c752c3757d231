use albert::eval::{eval_instruction, EvalContext, RuntimeEnv};
use albert::syntax::{Arg, Branch, FunName, Instruction, Label, Lhs, Rhs, Type, Value};
use albert::typer::{typecheck_instruction, TypedProgram};
use albert::types::{join, RecordEnv};

fn l(s: &str) -> Label {
    Label::from(s)
}

/// Field types and their small value sets.
fn atoms() -> Vec<(Type, Vec<Value>)> {
    vec![
        (Type::nat(), vec![Value::nat(0), Value::nat(1)]),
        (Type::string(), vec![Value::string(""), Value::string("x")]),
        (Type::unit(), vec![Value::unit()]),
    ]
}

/// All record types with up to three fields over `a`, `b`, `c`, each with
/// every value built from the atom value sets.
fn records() -> Vec<(Type, Vec<Value>)> {
    let labels = ["a", "b", "c"];
    let mut out = Vec::new();
    for n in 1..=3 {
        let mut shapes: Vec<Vec<(Type, Vec<Value>)>> = vec![vec![]];
        for _ in 0..n {
            shapes = shapes
                .into_iter()
                .flat_map(|s| {
                    atoms().into_iter().map(move |a| {
                        let mut s = s.clone();
                        s.push(a);
                        s
                    })
                })
                .collect();
        }
        for shape in shapes {
            let ty = Type::Record(shape.iter().enumerate().map(|(i, (t, _))| (l(labels[i]), t.clone())).collect());
            let mut values: Vec<Vec<(Label, Value)>> = vec![vec![]];
            for (i, (_, vs)) in shape.iter().enumerate() {
                values = values
                    .into_iter()
                    .flat_map(|prefix| {
                        vs.iter().map(move |v| {
                            let mut p = prefix.clone();
                            p.push((l(labels[i]), v.clone()));
                            p
                        })
                    })
                    .collect();
            }
            out.push((ty, values.into_iter().map(Value::Record).collect()));
        }
    }
    out
}

fn frame() -> (RecordEnv, RuntimeEnv) {
    let tys: RecordEnv = [(l("w1"), Type::nat()), (l("w2"), Type::string())].into_iter().collect();
    let vals: RuntimeEnv = [(l("w1"), Value::nat(7)), (l("w2"), Value::string("s"))].into_iter().collect();
    (tys, vals)
}

/// Runs `i` in `env` and in `env` joined with a frame, and checks that the
/// frame passes through untouched.
fn run_framed(env: &[(&str, Type, Value)], i: &Instruction) -> RuntimeEnv {
    let tys: RecordEnv = env.iter().map(|(x, t, _)| (l(x), t.clone())).collect();
    let vals: RuntimeEnv = env.iter().map(|(x, _, v)| (l(x), v.clone())).collect();
    let prog = TypedProgram { functions: vec![] };
    let ctx = EvalContext::default();
    let ti = typecheck_instruction(&[], &tys, i).unwrap();
    let out = eval_instruction(&prog, vals.clone(), &ti, &ctx).unwrap().unwrap();

    let (ftys, fvals) = frame();
    let big = join(&tys, &ftys).unwrap();
    let tbig = typecheck_instruction(&[], &big, i).unwrap();
    assert_eq!(tbig.env_out, join(&ti.env_out, &ftys).unwrap());
    let mut bigvals = vals;
    bigvals.extend(fvals.clone());
    let outbig = eval_instruction(&prog, bigvals, &tbig, &ctx).unwrap().unwrap();
    let mut expected = out.clone();
    expected.extend(fvals);
    assert_eq!(outbig, expected);
    out
}

fn assign(rhs: Rhs) -> Instruction {
    Instruction::Assign(Lhs::Var(l("y")), rhs)
}

#[test]
fn dup_law() {
    for (t, vs) in records().into_iter().chain(atoms()) {
        for v in vs {
            let out = run_framed(&[("x", t.clone(), v.clone())], &assign(Rhs::Apply(FunName::Dup, Arg::Var(l("x")))));
            assert_eq!(out[&l("y")], Value::record([("car", v.clone()), ("cdr", v)]));
            assert_eq!(out.len(), 1);
        }
    }
}

#[test]
fn projection_law() {
    for (t, vs) in records() {
        let Type::Record(fs) = &t else { unreachable!() };
        for v in &vs {
            for (f, _) in fs {
                let out = run_framed(&[("x", t.clone(), v.clone())], &assign(Rhs::Proj(l("x"), f.clone())));
                assert_eq!(&out[&l("y")], v.field(f.as_str()).unwrap());
            }
        }
    }
}

#[test]
fn update_law() {
    for (t, vs) in records() {
        let Type::Record(fs) = &t else { unreachable!() };
        for v in &vs {
            for (f, ft) in fs {
                let replacements = atoms().into_iter().find(|(a, _)| a == ft).unwrap().1;
                for w in replacements {
                    let i = assign(Rhs::Update(l("x"), vec![(f.clone(), l("z"))]));
                    let out = run_framed(&[("x", t.clone(), v.clone()), ("z", ft.clone(), w.clone())], &i);
                    let Value::Record(old) = v else { unreachable!() };
                    let expected =
                        Value::Record(old.iter().map(|(k, x)| (k.clone(), if k == f { w.clone() } else { x.clone() })).collect());
                    assert_eq!(out[&l("y")], expected);
                    assert_eq!(out.len(), 1);
                }
            }
        }
    }
}

#[test]
fn match_selects_the_constructor_branch() {
    let names = ["A", "B", "C"];
    for n in 1..=3 {
        for (pt, pvs) in atoms() {
            let ty = Type::Variant(names[..n].iter().map(|c| (l(c), pt.clone())).collect());
            let branches: Vec<Branch<Instruction>> = (0..n)
                .map(|k| Branch {
                    ctor: l(names[k]),
                    binder: l("p"),
                    body: Instruction::seq([
                        Instruction::Drop(l("p")),
                        assign(Rhs::Arg(Arg::Val(Value::nat(k as u64)))),
                    ]),
                })
                .collect();
            let i = Instruction::Match(l("x"), branches);
            for k in 0..n {
                for pv in &pvs {
                    let v = Value::Variant {
                        ctor: l(names[k]),
                        payload: Box::new(pv.clone()),
                        ty: ty.clone(),
                    };
                    let out = run_framed(&[("x", ty.clone(), v)], &i);
                    assert_eq!(out[&l("y")], Value::nat(k as u64));
                }
            }
        }
    }
}
