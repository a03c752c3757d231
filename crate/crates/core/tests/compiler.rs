use albert::compiler::{compile_contract, compile_function, compile_type, compile_value, decode_value};
use albert::eval::{eval_function, ContractFailure, EvalContext, EvalOutcome};
use albert::frontend;
use albert::michelson::{
    interpret, print_mich_type, run_contract, typecheck, typecheck_script, MichContext, MichFailure,
    MichValue, RunError, StackTy,
};
use albert::syntax::{parse_value, Type, Value};

const VOTE: &str = include_str!("fixtures/vote.alb");

fn input(param: &str, yes: u64) -> Value {
    let src = format!(
        "{{param = \"{param}\"; store = {{threshold = (100 : mutez); \
         votes = ({{\"no\" -> 0; \"yes\" -> {yes}}} : map string nat)}}}}"
    );
    parse_value(&src, None, &[]).unwrap()
}

/// Runs `guarded_vote` both ways and checks that the decoded results agree.
fn both(param: &str, amount: u64) -> EvalOutcome {
    let (_, typed) = frontend(VOTE).unwrap();
    let f = typed.function("guarded_vote").unwrap();
    let v = input(param, 0);
    let expected = eval_function(&typed, "guarded_vote", &v, &EvalContext::with_amount(amount)).unwrap();

    let script = compile_contract(&typed, "guarded_vote").unwrap();
    let store_ty = f.input.get(&"store".into()).unwrap().clone();
    let (p, s) = (v.field("param").unwrap(), v.field("store").unwrap());
    let got = run_contract(
        &script,
        &compile_value(p, &Type::string()),
        &compile_value(s, &store_ty),
        amount,
    );
    match (&expected, got) {
        (EvalOutcome::Returned(out), Ok((ops, st))) => {
            assert!(ops.is_empty());
            assert_eq!(&decode_value(&st, &store_ty).unwrap(), out.field("store").unwrap());
        }
        (EvalOutcome::Failed(ContractFailure::FailWith(a)), Err(RunError::Failed(MichFailure::FailWith(m)))) => {
            assert_eq!(compile_value(a, &a.type_of()), m);
        }
        (e, g) => panic!("disagreement: {e:?} vs {g:?}"),
    }
    expected
}

#[test]
fn voting_contract_compiles_to_convention() {
    let (_, typed) = frontend(VOTE).unwrap();
    let script = compile_contract(&typed, "guarded_vote").unwrap();
    typecheck_script(&script).unwrap();
    assert_eq!(print_mich_type(&script.parameter), "string");
    assert_eq!(print_mich_type(&script.storage), "pair mutez (map string nat)");
}

#[test]
fn vote_accepted() {
    let EvalOutcome::Returned(out) = both("yes", 100) else {
        panic!("expected success")
    };
    assert_eq!(out.field("store").unwrap(), input("yes", 1).field("store").unwrap());
}

#[test]
fn vote_too_cheap() {
    assert_eq!(
        both("yes", 99),
        EvalOutcome::Failed(ContractFailure::FailWith(Value::string("you are so cheap!")))
    );
}

#[test]
fn vote_unknown_option() {
    assert_eq!(
        both("maybe", 100),
        EvalOutcome::Failed(ContractFailure::FailWith(Value::string("assert_some")))
    );
}

#[test]
fn helper_is_inlined_not_emitted() {
    let (_, typed) = frontend(VOTE).unwrap();
    let gv = compile_contract(&typed, "guarded_vote").unwrap();
    let vote = compile_function(&typed, "vote").unwrap();
    let text = albert::michelson::print_script(&gv);
    assert!(text.contains("UPDATE"), "{text}");
    assert!(albert::michelson::print_seq(&gv.code, 0).len() > albert::michelson::print_seq(&vote.code, 0).len());
}

#[test]
fn function_code_typechecks_from_input_to_output() {
    let src = "def f : {a : nat; b : {x : int; y : string; z : bool}} -> {a : nat; c : {x : int; y : string; z : bool}} =\n  \
               (b0, b1) = dup b; s = b0.y; t = {b1 with y = s}; c = t";
    let (_, typed) = frontend(src).unwrap();
    let c = compile_function(&typed, "f").unwrap();
    assert_eq!(
        typecheck(&c.code, StackTy::Live(vec![c.input.clone()])).unwrap(),
        StackTy::Live(vec![c.output.clone()])
    );
}

#[test]
fn dead_computation_agrees() {
    let src = "def f : {a : nat} -> {a : nat} = x = 1; drop x";
    let (_, typed) = frontend(src).unwrap();
    let c = compile_function(&typed, "f").unwrap();
    let v = Value::record([("a", Value::nat(4))]);
    let EvalOutcome::Returned(out) = eval_function(&typed, "f", &v, &EvalContext::default()).unwrap() else {
        panic!()
    };
    let t = Type::record([("a", Type::nat())]);
    let got = interpret(&c.code, vec![compile_value(&v, &t)], &MichContext::default()).unwrap();
    assert_eq!(got, vec![compile_value(&out, &t)]);
    assert_eq!(compile_type(&t), c.input);
    assert_eq!(got[0], MichValue::Nat(4u8.into()));
}
