//! Differential testing: the reference interpreter against compiled
//! Michelson, with greedy shrinking of disagreeing programs.

use albert::compiler::{compile_contract, compile_function, compile_value, contract_types, decode_value};
use albert::eval::{eval_function, ContractFailure, EvalContext, EvalOutcome};
use albert::michelson::{
    interpret, print_mich_value, run_contract, typecheck, typecheck_script, InterpError,
    MichContext, MichFailure, MichValue, RunError, StackTy,
};
use albert::syntax::{print_albert, print_instruction_head, Instruction, Label, Program, Type, Value};
use albert::typer::TypedProgram;
use rayon::prelude::*;
use serde::Serialize;

use crate::gen::{case_rng, generate_with, random_amount, random_value};

/// Result of running one program on one input under both semantics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FuzzVerdict {
    pub seed: u64,
    pub case: u64,
    pub input_index: usize,
    pub entry: String,
    pub program: String,
    pub input: String,
    pub amount: u64,
    pub albert: String,
    pub michelson: String,
    /// The compiled code passed the Michelson typechecker.
    pub typechecks: bool,
    pub agree: bool,
    /// Instructions removed while shrinking a disagreement, in order.
    pub shrink: Vec<String>,
}

/// What a run produced, in a form both semantics can be compared in.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Observed {
    Returned(Value),
    Failed(MichValue),
    Overflow,
    /// Not a contract-level outcome: a crash, a type error, a bad decode.
    Broken(String),
}

impl Observed {
    fn render(&self) -> String {
        match self {
            Observed::Returned(v) => v.to_string(),
            Observed::Failed(m) => format!("failwith {}", print_mich_value(m)),
            Observed::Overflow => "mutez overflow".into(),
            Observed::Broken(m) => format!("error: {m}"),
        }
    }
}

fn observe_albert(typed: &TypedProgram, entry: &str, input: &Value, amount: u64) -> Observed {
    match eval_function(typed, entry, input, &EvalContext::with_amount(amount)) {
        Ok(EvalOutcome::Returned(v)) => Observed::Returned(v),
        Ok(EvalOutcome::Failed(ContractFailure::FailWith(v))) => Observed::Failed(compile_value(&v, &v.type_of())),
        Ok(EvalOutcome::Failed(ContractFailure::MutezOverflow)) => Observed::Overflow,
        Err(e) => Observed::Broken(e.to_string()),
    }
}

/// Compiles `entry`, typechecks the code, runs it and decodes the result.
/// Contract-shaped entries go through the contract calling convention.
fn observe_michelson(typed: &TypedProgram, entry: &str, input: &Value, amount: u64) -> (Observed, bool) {
    let Some(f) = typed.function(entry) else {
        return (Observed::Broken(format!("no function `{entry}`")), false);
    };
    let in_ty = f.input.to_type();
    let out_ty = f.output.to_type();
    let decode = |m: &MichValue| match decode_value(m, &out_ty) {
        Ok(v) => Observed::Returned(v),
        Err(e) => Observed::Broken(e.to_string()),
    };
    if contract_types(&f.input, &f.output).is_ok() {
        let script = match compile_contract(typed, entry) {
            Ok(s) => s,
            Err(e) => return (Observed::Broken(e.to_string()), false),
        };
        let typechecks = typecheck_script(&script).is_ok();
        let (Some(param), Some(store)) = (input.field("param"), input.field("store")) else {
            return (Observed::Broken("contract input is not {param; store}".into()), typechecks);
        };
        let param_ty = f.input.get(&Label::from("param")).expect("contract shape");
        let store_ty = f.input.get(&Label::from("store")).expect("contract shape");
        let obs = match run_contract(
            &script,
            &compile_value(param, param_ty),
            &compile_value(store, store_ty),
            amount,
        ) {
            Ok((ops, st)) => decode(&MichValue::pair(MichValue::List(ops), st)),
            Err(RunError::Failed(MichFailure::FailWith(m))) => Observed::Failed(m),
            Err(RunError::Failed(MichFailure::MutezOverflow)) => Observed::Overflow,
            Err(e) => Observed::Broken(e.to_string()),
        };
        return (obs, typechecks);
    }
    let c = match compile_function(typed, entry) {
        Ok(c) => c,
        Err(e) => return (Observed::Broken(e.to_string()), false),
    };
    let typechecks = match typecheck(&c.code, StackTy::Live(vec![c.input.clone()])) {
        Ok(StackTy::Failed) => true,
        Ok(out) => out == StackTy::Live(vec![c.output.clone()]),
        Err(_) => false,
    };
    if !typechecks {
        return (Observed::Broken("compiled code is ill-typed".into()), false);
    }
    let obs = match interpret(&c.code, vec![compile_value(input, &in_ty)], &MichContext { amount }) {
        Ok(out) => match <[MichValue; 1]>::try_from(out) {
            Ok([m]) => decode(&m),
            Err(out) => Observed::Broken(format!("final stack has {} elements", out.len())),
        },
        Err(InterpError::Failed(MichFailure::FailWith(m))) => Observed::Failed(m),
        Err(InterpError::Failed(MichFailure::MutezOverflow)) => Observed::Overflow,
        Err(InterpError::Stuck(m)) => Observed::Broken(m),
    };
    (obs, typechecks)
}

fn agree(a: &Observed, m: &Observed) -> bool {
    !matches!(a, Observed::Broken(_)) && a == m
}

/// Runs `entry` of `p` on `input` under both semantics and compares the
/// decoded results. A disagreement is shrunk before being reported.
pub fn differential_check(p: &Program, entry: &str, input: &Value, amount: u64) -> FuzzVerdict {
    let mut v = check_once(p, entry, input, amount);
    if !v.agree {
        let (small, trace) = shrink(p, entry, input, amount);
        if !trace.is_empty() {
            let mut shrunk = check_once(&small, entry, input, amount);
            shrunk.shrink = trace;
            v = shrunk;
        }
    }
    v
}

fn check_once(p: &Program, entry: &str, input: &Value, amount: u64) -> FuzzVerdict {
    let mut v = FuzzVerdict {
        seed: 0,
        case: 0,
        input_index: 0,
        entry: entry.to_owned(),
        program: print_albert(p),
        input: input.to_string(),
        amount,
        albert: String::new(),
        michelson: String::new(),
        typechecks: false,
        agree: false,
        shrink: Vec::new(),
    };
    let typed = match albert::check(p) {
        Ok(t) => t,
        Err(e) => {
            v.albert = format!("error: {e}");
            v.michelson = v.albert.clone();
            return v;
        }
    };
    let a = observe_albert(&typed, entry, input, amount);
    let (m, typechecks) = observe_michelson(&typed, entry, input, amount);
    v.albert = a.render();
    v.michelson = m.render();
    v.typechecks = typechecks;
    v.agree = agree(&a, &m);
    v
}

fn disagrees(p: &Program, entry: &str, input: &Value, amount: u64) -> bool {
    let Ok(typed) = albert::check(p) else {
        return false;
    };
    let a = observe_albert(&typed, entry, input, amount);
    let (m, _) = observe_michelson(&typed, entry, input, amount);
    !agree(&a, &m)
}

/// Every way of deleting one instruction from a body, including inside
/// match branches.
fn deletions(i: &Instruction) -> Vec<(Instruction, String)> {
    let items: Vec<Instruction> = i.flatten().into_iter().cloned().collect();
    let mut out = Vec::new();
    for k in 0..items.len() {
        let mut rest = items.clone();
        let removed = rest.remove(k);
        out.push((Instruction::seq(rest), print_instruction_head(&removed)));
        if let Instruction::Match(x, branches) = &items[k] {
            for (bi, b) in branches.iter().enumerate() {
                for (body, what) in deletions(&b.body) {
                    let mut bs = branches.clone();
                    bs[bi].body = body;
                    let mut with = items.clone();
                    with[k] = Instruction::Match(x.clone(), bs);
                    out.push((Instruction::seq(with), format!("{what} (in branch {})", b.ctor)));
                }
            }
        }
    }
    out
}

/// Greedily deletes instructions while the program still typechecks, the
/// input still fits, and the two semantics still disagree.
pub fn shrink(p: &Program, entry: &str, input: &Value, amount: u64) -> (Program, Vec<String>) {
    let mut cur = p.clone();
    let mut trace = Vec::new();
    loop {
        let mut progressed = false;
        'functions: for fi in (0..cur.functions.len()).rev() {
            for (body, what) in deletions(&cur.functions[fi].body) {
                let mut cand = cur.clone();
                cand.functions[fi].body = body;
                if disagrees(&cand, entry, input, amount) {
                    trace.push(format!("removed `{what}` from {}", cur.functions[fi].name));
                    cur = cand;
                    progressed = true;
                    break 'functions;
                }
            }
        }
        if !progressed {
            return (cur, trace);
        }
    }
}

/// A generated test case: one program and several inputs for its entry.
#[derive(Debug, Clone)]
pub struct FuzzCase {
    pub program: Program,
    pub entry: Label,
    pub inputs: Vec<(Value, u64)>,
}

/// Case `case` of the campaign `seed`; reproducible from these two numbers.
pub fn fuzz_case(seed: u64, case: u64, budget: usize, inputs: usize) -> FuzzCase {
    let mut rng = case_rng(seed, case);
    let g = generate_with(&mut rng, budget);
    let f = g.program.function(g.entry.as_str()).expect("entry exists");
    let in_ty: Type = f.input.clone();
    let inputs = (0..inputs)
        .map(|_| (random_value(&mut rng, &in_ty), random_amount(&mut rng)))
        .collect();
    FuzzCase {
        program: g.program,
        entry: g.entry,
        inputs,
    }
}

/// Runs `cases` generated cases with `inputs` inputs each, in parallel,
/// and returns the verdicts in case order.
pub fn fuzz(seed: u64, cases: u64, budget: usize, inputs: usize) -> Vec<FuzzVerdict> {
    let per_case: Vec<Vec<FuzzVerdict>> = (0..cases)
        .into_par_iter()
        .map(|case| {
            let c = fuzz_case(seed, case, budget, inputs);
            c.inputs
                .iter()
                .enumerate()
                .map(|(k, (input, amount))| {
                    let mut v = differential_check(&c.program, c.entry.as_str(), input, *amount);
                    v.seed = seed;
                    v.case = case;
                    v.input_index = k;
                    v
                })
                .collect()
        })
        .collect();
    per_case.into_iter().flatten().collect()
}
