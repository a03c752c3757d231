use std::path::PathBuf;
use std::process::Command;

use albertc::cli::{run, EXIT_CONTRACT, EXIT_OK, EXIT_USER};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .display()
        .to_string()
}

/// Runs the command line in process and returns (exit code, stdout, stderr).
fn albertc(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["albertc"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

const STORE: &str = "store = {threshold = (100 : mutez); votes = ({\"no\" -> 0; \"yes\" -> 0} : map string nat)}";

fn vote_input(param: &str) -> String {
    format!("{{param = \"{param}\"; {STORE}}}")
}

#[test]
fn compile_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("vote.tz");
    let (code, _, err) = albertc(&["compile", &fixture("vote.alb"), "-o", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    let golden = std::fs::read_to_string(fixture("vote.tz")).unwrap();
    assert_eq!(std::fs::read_to_string(out).unwrap(), golden);
    assert!(golden.starts_with("parameter string;\nstorage (pair mutez (map string nat));\ncode {"));
}

#[test]
fn run_and_simulate_print_the_same_result() {
    let input = vote_input("yes");
    let args = |cmd: &'static str| vec![cmd, "--amount", "100", "--input", input.as_str()];
    let mut run_args = args("run");
    run_args.insert(1, "--entry");
    run_args.insert(2, "guarded_vote");
    let f = fixture("vote.alb");
    run_args.insert(1, &f);
    let (code, stdout, err) = albertc(&run_args);
    assert_eq!(code, EXIT_OK, "{err}");
    assert_eq!(
        stdout,
        "{operations = ([] : list operation); store = {threshold = (100 : mutez); \
         votes = ({\"no\" -> 0; \"yes\" -> 1} : map string nat)}}\n"
    );
    let mut sim_args = args("simulate");
    sim_args.insert(1, &f);
    let (code, sim_out, _) = albertc(&sim_args);
    assert_eq!(code, EXIT_OK);
    assert_eq!(sim_out, stdout);
}

#[test]
fn contract_failures_exit_with_two() {
    let f = fixture("vote.alb");
    for cmd in ["run", "simulate"] {
        let (code, stdout, err) = albertc(&[cmd, &f, "--amount", "99", "--input", &vote_input("yes")]);
        assert_eq!(code, EXIT_CONTRACT);
        assert_eq!(stdout, "failed with \"you are so cheap!\"\n");
        assert!(err.contains("contract failed"), "{err}");
        let (code, stdout, _) = albertc(&[cmd, &f, "--amount", "100", "--input", &vote_input("maybe")]);
        assert_eq!(code, EXIT_CONTRACT);
        assert_eq!(stdout, "failed with \"assert_some\"\n");
    }
}

#[test]
fn linearity_violation_is_a_user_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.alb");
    std::fs::write(&bad, "def f : {x : nat} -> {y : nat; z : nat} =\n  y = x;\n  z = x\n").unwrap();
    let (code, _, err) = albertc(&["typecheck", bad.to_str().unwrap()]);
    assert_eq!(code, EXIT_USER);
    assert!(err.contains("linear"), "{err}");
}

#[test]
fn parse_errors_carry_positions() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.alb");
    std::fs::write(&bad, "def f : {x : nat} -> {x : nat} =\n  x = = x\n").unwrap();
    let (code, _, err) = albertc(&["typecheck", bad.to_str().unwrap()]);
    assert_eq!(code, EXIT_USER);
    assert!(err.starts_with(&format!("{}:2:", bad.display())), "{err}");
}

#[test]
fn bad_input_and_unknown_entry_are_user_errors() {
    let f = fixture("vote.alb");
    let (code, _, err) = albertc(&["run", &f, "--input", "{param = 3}"]);
    assert_eq!(code, EXIT_USER, "{err}");
    let (code, _, _) = albertc(&["run", &f, "--entry", "nope", "--input", "{}"]);
    assert_eq!(code, EXIT_USER);
    let (code, _, _) = albertc(&["frobnicate"]);
    assert_eq!(code, EXIT_USER);
}

#[test]
fn typecheck_dump_shows_environments() {
    let (code, out, _) = albertc(&["typecheck", "--dump", &fixture("vote.alb")]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("⊢ drop t ⊣"), "{out}");
}

#[test]
fn fuzz_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (r1, r2) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    let a = albertc(&["fuzz", "--seed", "3", "--cases", "40", "--report", r1.to_str().unwrap()]);
    let b = albertc(&["fuzz", "--seed", "3", "--cases", "40", "--report", r2.to_str().unwrap()]);
    assert_eq!(a.0, EXIT_OK, "{}", a.1);
    assert_eq!(a, b);
    let ra = std::fs::read_to_string(r1).unwrap();
    assert_eq!(ra, std::fs::read_to_string(r2).unwrap());
    assert_eq!(ra.lines().count(), 120);
    let first: serde_json::Value = serde_json::from_str(ra.lines().next().unwrap()).unwrap();
    assert_eq!(first["seed"], 3);
    assert_eq!(first["agree"], true);
}

#[test]
fn binary_compiles_to_stdout() {
    let out = Command::new(env!("CARGO_BIN_EXE_albertc"))
        .args(["compile", &fixture("vote.alb")])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        std::fs::read_to_string(fixture("vote.tz")).unwrap()
    );
    let out = Command::new(env!("CARGO_BIN_EXE_albertc")).args(["run", "missing.alb", "--input", "{}"]).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USER));
}
