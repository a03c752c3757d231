//! The `albertc` command line.
//!
//! Exit codes: 0 on success, 1 for user errors (bad flags, unreadable
//! files, parse and type errors), 2 when the contract fails at run time,
//! 3 for internal errors such as a compiler invariant breach or a failed
//! differential campaign.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use albert::compiler::{compile_contract, compile_function, compile_value, contract_types, decode_value};
use albert::eval::{eval_function, ContractFailure, EvalContext, EvalOutcome};
use albert::michelson::{interpret, print_mich_value, print_script, run_contract, MichContext, MichFailure, MichValue, RunError, InterpError};
use albert::syntax::{parse_program, parse_value, Label, Program, Value};
use albert::typer::{print_typed, TypedProgram};
use albert::types::{check_value, normalize_value};
use albert::FrontendError;
use clap::{Parser, Subcommand};

use crate::diff::fuzz;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_CONTRACT: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "albertc", version, about = "Albert to Michelson compiler")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and typecheck a program.
    Typecheck {
        file: PathBuf,
        /// Print every instruction with its input and output environments.
        #[arg(long)]
        dump: bool,
    },
    /// Compile the entry point to a Michelson contract.
    Compile {
        file: PathBuf,
        /// Output `.tz` file; standard output if omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Function to compile; defaults to the last one defined.
        #[arg(long)]
        entry: Option<String>,
    },
    /// Evaluate the entry point with the reference interpreter.
    Run(Exec),
    /// Compile the entry point and execute the Michelson code.
    Simulate(Exec),
    /// Differential testing of generated programs.
    Fuzz {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        cases: u64,
        /// Approximate size of each generated program, in AST nodes.
        #[arg(long, default_value_t = 40)]
        budget: usize,
        /// Random inputs per program.
        #[arg(long, default_value_t = 3)]
        inputs: usize,
        /// Write one JSON object per run to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Debug, clap::Args)]
pub struct Exec {
    pub file: PathBuf,
    #[arg(long)]
    pub entry: Option<String>,
    /// Value returned by `amount`, in mutez.
    #[arg(long, default_value_t = 0)]
    pub amount: u64,
    /// Input record in Albert literal syntax.
    #[arg(long)]
    pub input: String,
}

/// A failed command: the exit code and the diagnostic for standard error.
struct Failure(i32, String);

type CmdResult = Result<(), Failure>;

fn user(msg: impl Into<String>) -> Failure {
    Failure(EXIT_USER, msg.into())
}

fn internal(msg: impl Into<String>) -> Failure {
    Failure(EXIT_INTERNAL, msg.into())
}

/// Runs the command line `args` (including the program name), writing
/// results to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USER } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "{msg}");
            code
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> CmdResult {
    match cmd {
        Command::Typecheck { file, dump } => {
            let (_, _, typed) = load(&file)?;
            if dump {
                emit(out, &print_typed(&typed))
            } else {
                emit(out, &format!("{}: ok\n", file.display()))
            }
        }
        Command::Compile { file, output, entry } => {
            let (_, _, typed) = load(&file)?;
            let entry = entry_name(&typed, entry)?;
            let script = compile_contract(&typed, &entry).map_err(|e| match e {
                albert::compiler::CompileError::Internal(m) => internal(format!("internal compiler error: {m}")),
                other => user(format!("{}: {other}", file.display())),
            })?;
            let text = print_script(&script);
            match output {
                Some(path) => std::fs::write(&path, text)
                    .map_err(|e| user(format!("{}: cannot write: {e}", path.display()))),
                None => emit(out, &text),
            }
        }
        Command::Run(x) => {
            let (parsed, _, typed) = load(&x.file)?;
            let entry = entry_name(&typed, x.entry.clone())?;
            let input = read_input(&parsed, &typed, &entry, &x.input)?;
            let ctx = EvalContext::with_amount(x.amount);
            match eval_function(&typed, &entry, &input, &ctx) {
                Ok(EvalOutcome::Returned(v)) => emit(out, &format!("{v}\n")),
                Ok(EvalOutcome::Failed(f)) => {
                    let msg = match f {
                        ContractFailure::FailWith(v) => format!("failed with {v}"),
                        ContractFailure::MutezOverflow => "failed with mutez overflow".into(),
                    };
                    emit(out, &format!("{msg}\n"))?;
                    Err(Failure(EXIT_CONTRACT, format!("{}: contract {msg}", x.file.display())))
                }
                Err(e) => Err(internal(e.to_string())),
            }
        }
        Command::Simulate(x) => {
            let (parsed, _, typed) = load(&x.file)?;
            let entry = entry_name(&typed, x.entry.clone())?;
            let input = read_input(&parsed, &typed, &entry, &x.input)?;
            simulate(&typed, &entry, &input, x.amount, &x.file, out)
        }
        Command::Fuzz {
            seed,
            cases,
            budget,
            inputs,
            report,
        } => {
            if budget == 0 {
                return Err(user("--budget must be at least 1"));
            }
            let verdicts = fuzz(seed, cases, budget, inputs);
            if let Some(path) = report {
                let mut lines = String::new();
                for v in &verdicts {
                    lines.push_str(&serde_json::to_string(v).map_err(|e| internal(e.to_string()))?);
                    lines.push('\n');
                }
                std::fs::write(&path, lines).map_err(|e| user(format!("{}: cannot write: {e}", path.display())))?;
            }
            let agree = verdicts.iter().filter(|v| v.agree).count();
            let typed = verdicts.iter().filter(|v| v.typechecks).count();
            let mut text = format!(
                "seed {seed}: {cases} programs, {} runs, {agree} agree, {typed} compiled code typechecks\n",
                verdicts.len()
            );
            for v in verdicts.iter().filter(|v| !v.agree || !v.typechecks) {
                text.push_str(&format!(
                    "case {} input {}: albert {} / michelson {}\n",
                    v.case, v.input_index, v.albert, v.michelson
                ));
            }
            emit(out, &text)?;
            if agree == verdicts.len() && typed == verdicts.len() {
                Ok(())
            } else {
                Err(internal("differential campaign found disagreements"))
            }
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> CmdResult {
    out.write_all(text.as_bytes())
        .map_err(|e| internal(format!("cannot write output: {e}")))
}

/// Reads, parses, prepares and typechecks a source file. Returns the
/// program as parsed (with its aliases), as prepared, and typed.
fn load(file: &Path) -> Result<(Program, Program, TypedProgram), Failure> {
    let src = std::fs::read_to_string(file).map_err(|e| user(format!("{}: cannot read: {e}", file.display())))?;
    let parsed = parse_program(&src).map_err(|e| user(format!("{}:{e}", file.display())))?;
    let prepared = albert::prepare(&parsed).map_err(|e| user(format!("{}: {e}", file.display())))?;
    let typed = albert::typer::typecheck_program(&prepared)
        .map_err(|e| user(format!("{}: {}", file.display(), FrontendError::Type(e))))?;
    Ok((parsed, prepared, typed))
}

fn entry_name(typed: &TypedProgram, entry: Option<String>) -> Result<String, Failure> {
    match entry {
        Some(e) if typed.function(&e).is_some() => Ok(e),
        Some(e) => Err(user(format!("no function named `{e}`"))),
        None => typed
            .functions
            .last()
            .map(|f| f.name.to_string())
            .ok_or_else(|| user("the program defines no function")),
    }
}

fn read_input(parsed: &Program, typed: &TypedProgram, entry: &str, src: &str) -> Result<Value, Failure> {
    let f = typed.function(entry).expect("entry exists");
    let ty = f.input.to_type();
    let v = parse_value(src, Some(&ty), &parsed.type_aliases).map_err(|e| user(format!("--input:{e}")))?;
    let v = normalize_value(&v);
    if !check_value(&v, &ty) {
        return Err(user(format!("--input: {v} does not have type {ty}")));
    }
    Ok(v)
}

fn simulate(typed: &TypedProgram, entry: &str, input: &Value, amount: u64, file: &Path, out: &mut dyn Write) -> CmdResult {
    let f = typed.function(entry).expect("entry exists");
    let out_ty = f.output.to_type();
    let compile_err = |e: albert::compiler::CompileError| internal(format!("internal compiler error: {e}"));
    let result = if contract_types(&f.input, &f.output).is_ok() {
        let script = compile_contract(typed, entry).map_err(compile_err)?;
        let field = |l: &str| {
            let v = input.field(l).expect("checked input");
            compile_value(v, f.input.get(&Label::from(l)).expect("contract shape"))
        };
        match run_contract(&script, &field("param"), &field("store"), amount) {
            Ok((ops, st)) => Ok(MichValue::pair(MichValue::List(ops), st)),
            Err(RunError::Failed(fl)) => Err(fl),
            Err(e) => return Err(internal(e.to_string())),
        }
    } else {
        let c = compile_function(typed, entry).map_err(compile_err)?;
        let in_ty = f.input.to_type();
        match interpret(&c.code, vec![compile_value(input, &in_ty)], &MichContext { amount }) {
            Ok(stack) if stack.len() == 1 => Ok(stack.into_iter().next().expect("one element")),
            Ok(stack) => return Err(internal(format!("final stack has {} elements", stack.len()))),
            Err(InterpError::Failed(fl)) => Err(fl),
            Err(InterpError::Stuck(m)) => return Err(internal(m)),
        }
    };
    match result {
        Ok(m) => {
            let v = decode_value(&m, &out_ty).map_err(|e| internal(e.to_string()))?;
            emit(out, &format!("{v}\n"))
        }
        Err(fl) => {
            let msg = match fl {
                MichFailure::FailWith(m) => format!("failed with {}", print_mich_value(&m)),
                MichFailure::MutezOverflow => "failed with mutez overflow".into(),
            };
            emit(out, &format!("{msg}\n"))?;
            Err(Failure(EXIT_CONTRACT, format!("{}: contract {msg}", file.display())))
        }
    }
}
