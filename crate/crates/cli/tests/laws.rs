use albert::compiler::{compile_function, compile_type, compile_value, decode_value};
use albert::eval::{eval_instruction, value_to_env, EvalContext, RuntimeEnv};
use albert::michelson::{interpret, MichContext};
use albert::syntax::{parse_value, print_value, Arg, FunName, Function, Instruction, Label, Lhs, Program, Rhs};
use albert::typer::typecheck_instruction;
use albert::types::{join, RecordEnv};
use albertc::gen::{case_rng, generate_with, random_amount, random_type, random_value};
use proptest::prelude::*;

fn framing(seed: u64) -> (RecordEnv, RuntimeEnv) {
    let mut rng = case_rng(seed, 1);
    let mut tys = RecordEnv::new();
    let mut vals = RuntimeEnv::new();
    for k in 0..(seed % 3 + 1) {
        let x = Label::new(format!("zz{k}"));
        let t = random_type(&mut rng, 2);
        vals.insert(x.clone(), random_value(&mut rng, &t));
        tys.insert(x, t);
    }
    (tys, vals)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    /// Typing and evaluation commute with joining an untouched frame.
    #[test]
    fn frame_property(seed in any::<u64>()) {
        let mut rng = case_rng(seed, 0);
        let g = generate_with(&mut rng, 30);
        let typed = albert::check(&g.program).unwrap();
        let k = (seed as usize) % typed.functions.len();
        let f = &typed.functions[k];
        let body = &g.program.functions[k].body;
        let earlier = &typed.functions[..k];
        let (ftys, fvals) = framing(seed);

        let small = typecheck_instruction(earlier, &f.input, body).unwrap();
        let big = typecheck_instruction(earlier, &join(&f.input, &ftys).unwrap(), body).unwrap();
        prop_assert_eq!(big.diverges, small.diverges);
        if !small.diverges {
            prop_assert_eq!(&big.env_out, &join(&small.env_out, &ftys).unwrap());
        }

        let input = random_value(&mut rng, &f.input.to_type());
        let env = value_to_env(input).unwrap();
        let ctx = EvalContext::with_amount(random_amount(&mut rng));
        let out = eval_instruction(&typed, env.clone(), &small, &ctx).unwrap();
        let mut framed = env;
        framed.extend(fvals.clone());
        let out_big = eval_instruction(&typed, framed, &big, &ctx).unwrap();
        match (out, out_big) {
            (Ok(mut a), Ok(b)) => {
                a.extend(fvals);
                prop_assert_eq!(a, b);
            }
            (Err(a), Err(b)) => prop_assert_eq!(a, b),
            (a, b) => prop_assert!(false, "framing changed the outcome: {:?} vs {:?}", a, b),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// `decode ∘ compile` is the identity on values, and so is `compile ∘
    /// decode` on their images.
    #[test]
    fn value_encoding_round_trip(seed in any::<u64>()) {
        let mut rng = case_rng(seed, 0);
        let t = random_type(&mut rng, 3);
        let v = random_value(&mut rng, &t);
        let m = compile_value(&v, &t);
        prop_assert!(m.has_type(&compile_type(&t)));
        let back = decode_value(&m, &t).unwrap();
        prop_assert_eq!(&back, &v);
        prop_assert_eq!(compile_value(&back, &t), m);
    }

    /// Printed values parse back to themselves without any expected type.
    #[test]
    fn value_print_parse_round_trip(seed in any::<u64>()) {
        let mut rng = case_rng(seed, 0);
        let t = random_type(&mut rng, 3);
        let v = random_value(&mut rng, &t);
        let text = print_value(&v);
        prop_assert_eq!(parse_value(&text, None, &[]).unwrap(), v, "{}", text);
    }
}

/// A wrapper around helper `f` that calls it and re-exposes its outputs.
fn wrapper(f: &Function) -> Function {
    let input = RecordEnv::from_type(&f.input).unwrap();
    let output = RecordEnv::from_type(&f.output).unwrap();
    let arg = Arg::Record(input.labels().map(|x| (x.clone(), x.clone())).collect());
    let r = Label::from("call_result");
    Function {
        name: Label::from("wrapped"),
        input: f.input.clone(),
        output: f.output.clone(),
        body: Instruction::seq([
            Instruction::Assign(Lhs::Var(r.clone()), Rhs::Apply(FunName::User(f.name.clone()), arg)),
            Instruction::Assign(
                Lhs::Record(output.labels().map(|x| (x.clone(), x.clone())).collect()),
                Rhs::Arg(Arg::Var(r)),
            ),
        ]),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    /// Compiling a call site inlines the callee: the wrapper and the callee
    /// compiled on its own behave identically.
    #[test]
    fn inlining_soundness(seed in any::<u64>()) {
        let mut rng = case_rng(seed, 0);
        let g = generate_with(&mut rng, 40);
        let Some(helper) = g.program.functions.iter().find(|f| f.name.as_str().starts_with('f')) else {
            return Ok(());
        };
        let mut p: Program = g.program.clone();
        p.functions.push(wrapper(helper));
        let typed = albert::check(&p).unwrap();
        let direct = compile_function(&typed, helper.name.as_str()).unwrap();
        let inlined = compile_function(&typed, "wrapped").unwrap();
        prop_assert_eq!(&direct.input, &inlined.input);
        for _ in 0..3 {
            let v = random_value(&mut rng, &helper.input);
            let ctx = MichContext { amount: random_amount(&mut rng) };
            let m = compile_value(&v, &helper.input);
            let a = interpret(&direct.code, vec![m.clone()], &ctx);
            let b = interpret(&inlined.code, vec![m], &ctx);
            prop_assert_eq!(a, b);
        }
    }
}
