//! Acceptance run: one `[PASS]`/`[FAIL]` line per criterion, nonzero exit
//! status if any criterion fails. Thresholds are pinned below.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use albert::compiler::{compile_contract, compile_type, compile_value, decode_value};
use albert::eval::{eval_function, eval_instruction, value_to_env, ContractFailure, EvalContext, EvalOutcome, RuntimeEnv};
use albert::michelson::{
    interpret, print_mich_type, run_contract, typecheck_script, MichContext, MichFailure, MichInstr, MichValue,
    RunError,
};
use albert::syntax::{
    parse_program, parse_value, print_albert, Arg, Branch, FunName, Instruction, Label, Lhs, Rhs, Type, Value,
};
use albert::typer::{typecheck_instruction, TypeErrorKind, TypedProgram};
use albert::types::{join, RecordEnv};
use albert::{check, frontend, FrontendError};
use albertc::diff::{fuzz, FuzzVerdict};
use albertc::gen::{case_rng, generate_with, random_amount, random_type, random_value};
use num_bigint::BigUint;

const VOTE: &str = include_str!("../fixtures/vote.alb");

const VOTE_BUDGET: Duration = Duration::from_secs(1);
const CAMPAIGN_SEED: u64 = 0;
const CAMPAIGN_PROGRAMS: u64 = 1000;
const CAMPAIGN_INPUTS: usize = 3;
const CAMPAIGN_SIZE: usize = 40;
const CAMPAIGN_BUDGET: Duration = Duration::from_secs(60);
const FRAMINGS: u64 = 500;
const JOIN_ALPHABET: usize = 6;
const MAX_FIELDS: usize = 3;
const MAX_CTORS: usize = 3;
const MAX_STACK: u32 = 6;
const ROUND_TRIP_PROGRAMS: u64 = 1000;
const ROUND_TRIP_VALUES: u64 = 1000;

type Outcome = Result<String, String>;

fn l(s: &str) -> Label {
    Label::from(s)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---- voting contract ----

fn vote_input(param: &str, yes: u64) -> Value {
    let src = format!(
        "{{param = \"{param}\"; store = {{threshold = (100 : mutez); \
         votes = ({{\"no\" -> 0; \"yes\" -> {yes}}} : map string nat)}}}}"
    );
    parse_value(&src, None, &[]).expect("well-formed literal")
}

fn vote_end_to_end() -> Outcome {
    let start = Instant::now();
    let (_, typed) = frontend(VOTE).map_err(|e| e.to_string())?;
    let script = compile_contract(&typed, "guarded_vote").map_err(|e| e.to_string())?;
    typecheck_script(&script).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let (param, storage) = (print_mich_type(&script.parameter), print_mich_type(&script.storage));
    ensure(param == "string", || format!("parameter {param}"))?;
    ensure(storage == "pair mutez (map string nat)", || format!("storage {storage}"))?;
    ensure(elapsed < VOTE_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("parameter {param}; storage {storage}; {elapsed:?}"))
}

/// Outcome of the contract under both semantics, or a description of how
/// they disagree.
fn vote_both(param: &str, amount: u64) -> Result<EvalOutcome, String> {
    let (_, typed) = frontend(VOTE).map_err(|e| e.to_string())?;
    let input = vote_input(param, 0);
    let albert = eval_function(&typed, "guarded_vote", &input, &EvalContext::with_amount(amount))
        .map_err(|e| e.to_string())?;
    let script = compile_contract(&typed, "guarded_vote").map_err(|e| e.to_string())?;
    let store_ty = typed.function("guarded_vote").unwrap().input.get(&l("store")).unwrap().clone();
    let mich = run_contract(
        &script,
        &compile_value(input.field("param").unwrap(), &Type::string()),
        &compile_value(input.field("store").unwrap(), &store_ty),
        amount,
    );
    let same = match (&albert, &mich) {
        (EvalOutcome::Returned(out), Ok((ops, st))) => {
            ops.is_empty() && decode_value(st, &store_ty).ok().as_ref() == out.field("store")
        }
        (EvalOutcome::Failed(ContractFailure::FailWith(a)), Err(RunError::Failed(MichFailure::FailWith(m)))) => {
            compile_value(a, &a.type_of()) == *m
        }
        _ => false,
    };
    ensure(same, || format!("{param}/{amount}: {albert:?} vs {mich:?}"))?;
    Ok(albert)
}

fn vote_scenarios() -> Outcome {
    let accepted = vote_both("yes", 100)?;
    let expected = vote_input("yes", 1).field("store").cloned();
    match &accepted {
        EvalOutcome::Returned(out) => {
            ensure(out.field("store").cloned() == expected, || format!("store {out}"))?;
            ensure(matches!(out.field("operations"), Some(Value::List(ops, _)) if ops.is_empty()), || {
                format!("operations in {out}")
            })?;
        }
        other => return Err(format!("yes/100: {other:?}")),
    }
    let cheap = EvalOutcome::Failed(ContractFailure::FailWith(Value::string("you are so cheap!")));
    for param in ["yes", "no", "maybe"] {
        let got = vote_both(param, 99)?;
        ensure(got == cheap, || format!("{param}/99: {got:?}"))?;
    }
    let maybe = vote_both("maybe", 100)?;
    let assert_some = EvalOutcome::Failed(ContractFailure::FailWith(Value::string("assert_some")));
    ensure(maybe == assert_some, || format!("maybe/100: {maybe:?}"))?;
    Ok("accept, too cheap, unknown option; both semantics agree".into())
}

// ---- differential campaign ----

struct Campaign {
    verdicts: Vec<FuzzVerdict>,
    elapsed: Duration,
}

fn campaign() -> &'static Campaign {
    static C: OnceLock<Campaign> = OnceLock::new();
    C.get_or_init(|| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("thread pool");
        let start = Instant::now();
        let verdicts =
            pool.install(|| fuzz(CAMPAIGN_SEED, CAMPAIGN_PROGRAMS, CAMPAIGN_SIZE, CAMPAIGN_INPUTS));
        Campaign {
            verdicts,
            elapsed: start.elapsed(),
        }
    })
}

fn differential_campaign() -> Outcome {
    let c = campaign();
    let runs = c.verdicts.len();
    let agree = c.verdicts.iter().filter(|v| v.agree).count();
    let failures = c.verdicts.iter().filter(|v| v.albert.starts_with("failwith")).count();
    let expected = CAMPAIGN_PROGRAMS as usize * CAMPAIGN_INPUTS;
    ensure(runs == expected, || format!("{runs} runs, expected {expected}"))?;
    if let Some(v) = c.verdicts.iter().find(|v| !v.agree) {
        return Err(format!(
            "{agree}/{runs} agree; first disagreement at case {} input {}: {} vs {}",
            v.case, v.input_index, v.albert, v.michelson
        ));
    }
    ensure(c.elapsed <= CAMPAIGN_BUDGET, || format!("took {:?} on one thread", c.elapsed))?;
    Ok(format!(
        "{CAMPAIGN_PROGRAMS} programs x {CAMPAIGN_INPUTS} inputs, {agree}/{runs} agree \
         ({failures} failwith outcomes), {:?} on one thread",
        c.elapsed
    ))
}

fn type_preservation() -> Outcome {
    let c = campaign();
    let total = c.verdicts.len();
    let ok = c.verdicts.iter().filter(|v| v.typechecks).count();
    ensure(ok == total, || format!("{ok}/{total} compiled programs typecheck"))?;
    Ok(format!("{ok}/{total} compiled programs typecheck"))
}

// ---- typing laws ----

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

/// Typing and evaluation of a generated function body are unchanged by a
/// frame of extra variables.
fn frame_holds(seed: u64) -> Result<(), String> {
    let mut rng = case_rng(seed, 0);
    let g = generate_with(&mut rng, 30);
    let typed = check(&g.program).map_err(|e| e.to_string())?;
    let k = seed as usize % typed.functions.len();
    let f = &typed.functions[k];
    let body = &g.program.functions[k].body;
    let earlier = &typed.functions[..k];
    let (ftys, fvals) = framing(seed);
    let small = typecheck_instruction(earlier, &f.input, body).map_err(|e| e.to_string())?;
    let big_in = join(&f.input, &ftys).map_err(|e| e.to_string())?;
    let big = typecheck_instruction(earlier, &big_in, body).map_err(|e| format!("framed: {e}"))?;
    ensure(big.diverges == small.diverges, || "divergence changed".into())?;
    if !small.diverges {
        ensure(Ok(&big.env_out) == join(&small.env_out, &ftys).as_ref(), || "output env changed".into())?;
    }
    let env = value_to_env(random_value(&mut rng, &f.input.to_type())).unwrap();
    let ctx = EvalContext::with_amount(random_amount(&mut rng));
    let out = eval_instruction(&typed, env.clone(), &small, &ctx).map_err(|e| e.to_string())?;
    let mut framed = env;
    framed.extend(fvals.clone());
    let out_big = eval_instruction(&typed, framed, &big, &ctx).map_err(|e| e.to_string())?;
    let same = match (out, out_big) {
        (Ok(mut a), Ok(b)) => {
            a.extend(fvals);
            a == b
        }
        (Err(a), Err(b)) => a == b,
        _ => false,
    };
    ensure(same, || "framing changed the result".into())
}

fn all_envs() -> Vec<RecordEnv> {
    let alphabet = ["a", "b", "c", "d", "e", "f"];
    (0u32..1 << JOIN_ALPHABET)
        .map(|mask| {
            (0..JOIN_ALPHABET)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| (l(alphabet[i]), if (mask >> i) & 2 == 0 { Type::nat() } else { Type::string() }))
                .collect()
        })
        .collect()
}

fn join_laws() -> Result<usize, String> {
    let envs = all_envs();
    let unit = RecordEnv::new();
    let mut checked = 0;
    for a in &envs {
        ensure(join(a, &unit).as_ref() == Ok(a), || format!("unit fails on {a}"))?;
        for b in &envs {
            let ab = join(a, b);
            let disjoint = a.labels().all(|x| !b.contains(x));
            ensure(ab.is_ok() == disjoint, || format!("definedness on {a}, {b}"))?;
            ensure(ab.as_ref().ok() == join(b, a).as_ref().ok(), || format!("commutativity on {a}, {b}"))?;
            let Ok(ab) = ab else { continue };
            for c in &envs {
                let left = join(&ab, c).ok();
                let right = join(b, c).ok().and_then(|bc| join(a, &bc).ok());
                ensure(left == right, || format!("associativity on {a}, {b}, {c}"))?;
                checked += 1;
            }
        }
    }
    Ok(checked)
}

fn rejected_with(src: &str) -> Option<TypeErrorKind> {
    match check(&parse_program(src).ok()?) {
        Err(FrontendError::Type(e)) => Some(e.kind),
        _ => None,
    }
}

fn typing_laws() -> Outcome {
    for seed in 0..FRAMINGS {
        frame_holds(seed).map_err(|e| format!("framing {seed}: {e}"))?;
    }
    let triples = join_laws()?;
    let fixtures = [
        ("use twice", "def f : {x : nat} -> {y : nat; z : nat} = y = x; z = x", TypeErrorKind::UnboundVariable),
        ("leftover", "def f : {x : nat; y : nat} -> {y : nat} = noop", TypeErrorKind::LinearityLeftover),
        (
            "non-exhaustive",
            "def f : {b : bool} -> {} = match b with True t -> drop t end",
            TypeErrorKind::NonExhaustiveMatch,
        ),
        (
            "duplicate branch",
            "def f : {b : bool} -> {} = match b with True t -> drop t | True u -> drop u | False v -> drop v end",
            TypeErrorKind::DuplicateBranch,
        ),
    ];
    for (name, src, kind) in fixtures {
        let got = rejected_with(src);
        ensure(got == Some(kind), || format!("{name}: got {got:?}"))?;
    }
    Ok(format!(
        "{FRAMINGS} framings; join laws on {} envs ({triples} associativity triples); 4 rejections",
        1 << JOIN_ALPHABET
    ))
}

// ---- semantic laws ----

fn atoms() -> Vec<(Type, Vec<Value>)> {
    vec![
        (Type::nat(), vec![Value::nat(0), Value::nat(1)]),
        (Type::string(), vec![Value::string(""), Value::string("x")]),
        (Type::unit(), vec![Value::unit()]),
    ]
}

/// Every record type of one to three fields over the atoms, with all its
/// values.
fn records() -> Vec<(Type, Vec<Value>)> {
    let labels = ["a", "b", "c"];
    let mut out = Vec::new();
    let mut shapes: Vec<Vec<(Type, Vec<Value>)>> = vec![vec![]];
    for _ in 0..MAX_FIELDS {
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
        for shape in &shapes {
            let ty = Type::Record(shape.iter().enumerate().map(|(i, (t, _))| (l(labels[i]), t.clone())).collect());
            let mut values: Vec<Vec<(Label, Value)>> = vec![vec![]];
            for (i, (_, vs)) in shape.iter().enumerate() {
                values = values
                    .into_iter()
                    .flat_map(|p| {
                        vs.iter().map(move |v| {
                            let mut p = p.clone();
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

/// Runs `i` alone and inside the frame `{w1 : nat; w2 : string}`; the two
/// runs must agree up to the frame.
fn run_framed(env: &[(&str, Type, Value)], i: &Instruction) -> Result<RuntimeEnv, String> {
    let tys: RecordEnv = env.iter().map(|(x, t, _)| (l(x), t.clone())).collect();
    let vals: RuntimeEnv = env.iter().map(|(x, _, v)| (l(x), v.clone())).collect();
    let ftys: RecordEnv = [(l("w1"), Type::nat()), (l("w2"), Type::string())].into_iter().collect();
    let fvals: RuntimeEnv = [(l("w1"), Value::nat(7)), (l("w2"), Value::string("s"))].into_iter().collect();
    let prog = TypedProgram { functions: vec![] };
    let ctx = EvalContext::default();
    let run = |tys: &RecordEnv, vals: RuntimeEnv| -> Result<(RecordEnv, RuntimeEnv), String> {
        let ti = typecheck_instruction(&[], tys, i).map_err(|e| e.to_string())?;
        let out = eval_instruction(&prog, vals, &ti, &ctx).map_err(|e| e.to_string())?;
        Ok((ti.env_out, out.map_err(|f| format!("{f:?}"))?))
    };
    let (small_ty, small) = run(&tys, vals.clone())?;
    let mut big_vals = vals;
    big_vals.extend(fvals.clone());
    let (big_ty, big) = run(&join(&tys, &ftys).map_err(|e| e.to_string())?, big_vals)?;
    ensure(Ok(&big_ty) == join(&small_ty, &ftys).as_ref(), || "frame changed the output type".into())?;
    let mut expected = small.clone();
    expected.extend(fvals);
    ensure(big == expected, || "frame changed the output values".into())?;
    Ok(small)
}

fn assign(rhs: Rhs) -> Instruction {
    Instruction::Assign(Lhs::Var(l("y")), rhs)
}

fn eval_laws() -> Result<usize, String> {
    let mut checked = 0;
    for (t, vs) in records().into_iter().chain(atoms()) {
        for v in &vs {
            let out = run_framed(&[("x", t.clone(), v.clone())], &assign(Rhs::Apply(FunName::Dup, Arg::Var(l("x")))))?;
            let want = Value::record([("car", v.clone()), ("cdr", v.clone())]);
            ensure(out.len() == 1 && out[&l("y")] == want, || format!("dup of {v}"))?;
            checked += 1;
        }
    }
    for (t, vs) in records() {
        let Type::Record(fs) = &t else { unreachable!() };
        for v in &vs {
            let Value::Record(old) = v else { unreachable!() };
            for (f, ft) in fs {
                let out = run_framed(&[("x", t.clone(), v.clone())], &assign(Rhs::Proj(l("x"), f.clone())))?;
                ensure(Some(&out[&l("y")]) == v.field(f.as_str()), || format!("{v}.{f}"))?;
                let replacements = atoms().into_iter().find(|(a, _)| a == ft).unwrap().1;
                for w in replacements {
                    let i = assign(Rhs::Update(l("x"), vec![(f.clone(), l("z"))]));
                    let out = run_framed(&[("x", t.clone(), v.clone()), ("z", ft.clone(), w.clone())], &i)?;
                    let want =
                        Value::Record(old.iter().map(|(k, x)| (k.clone(), if k == f { w.clone() } else { x.clone() })).collect());
                    ensure(out.len() == 1 && out[&l("y")] == want, || format!("{{{v} with {f} = {w}}}"))?;
                    checked += 1;
                }
                checked += 1;
            }
        }
    }
    let names = ["A", "B", "C"];
    for n in 1..=MAX_CTORS {
        for (pt, pvs) in atoms() {
            let ty = Type::Variant(names[..n].iter().map(|c| (l(c), pt.clone())).collect());
            let branches = (0..n)
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
                    let out = run_framed(&[("x", ty.clone(), v)], &i)?;
                    ensure(out[&l("y")] == Value::nat(k as u64), || format!("match on {}", names[k]))?;
                    checked += 1;
                }
            }
        }
    }
    Ok(checked)
}

fn stack_laws() -> Result<usize, String> {
    let run = |code: &[MichInstr], s: Vec<MichValue>| interpret(code, s, &MichContext::default());
    let mut checked = 0;
    for depth in 1..=MAX_STACK {
        let stack: Vec<MichValue> = (0..depth).map(|n| MichValue::Nat(BigUint::from(n))).collect();
        for n in 0..depth as usize {
            for code in [[MichInstr::Dig(n), MichInstr::Dug(n)], [MichInstr::Dug(n), MichInstr::Dig(n)]] {
                ensure(run(&code, stack.clone()).as_ref() == Ok(&stack), || format!("{code:?} at depth {depth}"))?;
                checked += 1;
            }
        }
        if depth >= 2 {
            let code = [MichInstr::Pair, MichInstr::Unpair];
            ensure(run(&code, stack.clone()).as_ref() == Ok(&stack), || format!("PAIR; UNPAIR at depth {depth}"))?;
            checked += 1;
        }
    }
    Ok(checked)
}

fn semantic_laws() -> Outcome {
    let evals = eval_laws()?;
    let stacks = stack_laws()?;
    Ok(format!("{evals} eval law instances; {stacks} stack identities up to depth {MAX_STACK}"))
}

// ---- round trips ----

fn round_trips() -> Outcome {
    let vote = parse_program(VOTE).map_err(|e| e.to_string())?;
    let back = parse_program(&print_albert(&vote)).map_err(|e| e.to_string())?;
    ensure(back == vote, || "vote contract does not survive print/parse".into())?;
    for case in 0..ROUND_TRIP_PROGRAMS {
        let g = generate_with(&mut case_rng(5, case), CAMPAIGN_SIZE);
        let src = print_albert(&g.program);
        let back = parse_program(&src).map_err(|e| format!("program {case}: {e}"))?;
        ensure(back == g.program, || format!("program {case} changed"))?;
    }
    for case in 0..ROUND_TRIP_VALUES {
        let mut rng = case_rng(13, case);
        let t = random_type(&mut rng, 3);
        let v = random_value(&mut rng, &t);
        let m = compile_value(&v, &t);
        ensure(m.has_type(&compile_type(&t)), || format!("{v} encodes outside {t}"))?;
        let back = decode_value(&m, &t).map_err(|e| format!("{v}: {e}"))?;
        ensure(back == v, || format!("{v} decodes to {back}"))?;
    }
    Ok(format!(
        "{} programs parse(print(p)) = p; {ROUND_TRIP_VALUES} values decode(compile(v)) = v",
        ROUND_TRIP_PROGRAMS + 1
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("voting contract end to end", vote_end_to_end),
        ("voting contract scenarios", vote_scenarios),
        ("differential campaign", differential_campaign),
        ("translation type preservation", type_preservation),
        ("typing laws", typing_laws),
        ("semantic laws", semantic_laws),
        ("round trips", round_trips),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.into_iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("[PASS] {}. {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {}. {name}: {detail}", k + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
