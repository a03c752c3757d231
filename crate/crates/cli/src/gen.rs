//! Type-directed random generation of well-typed Albert programs and of
//! values inhabiting a type.
//!
//! Programs are built statement by statement while tracking the typing
//! environment, so every output typechecks by construction. Whenever two
//! control-flow paths must meet (match branches, function exits), the
//! environment of one path is forced into the shape of the other by
//! renaming, literal introduction and drops.

use albert::syntax::{Arg, BinOp, Branch, FunName, Function, Instruction, Label, Lhs, Program, Rhs, Type, Value, MUTEZ_MAX};
use albert::types::RecordEnv;
use num_bigint::{BigInt, BigUint};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub const MAX_FIELDS: usize = 4;
pub const MAX_CTORS: usize = 3;
pub const MAX_DEPTH: usize = 3;
pub const MAX_HELPERS: usize = 2;

const FIELD_LABELS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];
const CTOR_LABELS: [&str; 5] = ["A", "B", "C", "D", "E"];
const STRINGS: [&str; 6] = ["", "a", "no", "yes", "maybe", "you are so cheap!"];

/// The generator for case `case` of a campaign seeded with `seed`. Each case
/// owns an independent stream, so any case can be replayed on its own.
pub fn case_rng(seed: u64, case: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(case);
    rng
}

/// A generated program with its entry point, always the last function.
#[derive(Debug, Clone)]
pub struct GeneratedProgram {
    pub program: Program,
    pub entry: Label,
}

/// Generates a program of roughly `budget` AST nodes. A budget of 1 yields
/// the smallest program, a single `noop` function from `{}` to `{}`.
pub fn generate_program(seed: u64, budget: usize) -> GeneratedProgram {
    generate_with(&mut case_rng(seed, 0), budget)
}

pub fn generate_with(rng: &mut ChaCha8Rng, budget: usize) -> GeneratedProgram {
    if budget <= 1 {
        return GeneratedProgram {
            program: Program {
                type_aliases: vec![],
                functions: vec![Function {
                    name: Label::from("f"),
                    input: Type::unit(),
                    output: Type::unit(),
                    body: Instruction::Noop,
                }],
            },
            entry: Label::from("f"),
        };
    }
    let mut g = Gen {
        rng,
        budget: budget as isize,
        fresh: 0,
        helpers: Vec::new(),
    };
    let mut functions = Vec::new();
    let helpers = g.rng.gen_range(0..=MAX_HELPERS);
    for k in 0..helpers {
        let input = g.random_env(1, 3);
        let output = g.random_env(1, 3);
        let share = g.budget / (helpers as isize + 1 - k as isize);
        let body = g.function_body(&input, &output, share);
        let name = Label::new(format!("f{k}"));
        functions.push(Function {
            name: name.clone(),
            input: input.to_type(),
            output: output.to_type(),
            body,
        });
        g.helpers.push((name, input, output));
    }
    let param = g.random_type(2);
    let store = g.random_type(2);
    let input: RecordEnv = [(Label::from("param"), param), (Label::from("store"), store.clone())]
        .into_iter()
        .collect();
    let output: RecordEnv = [
        (Label::from("operations"), Type::list(Type::operation())),
        (Label::from("store"), store),
    ]
    .into_iter()
    .collect();
    let budget = g.budget;
    let body = g.function_body(&input, &output, budget);
    functions.push(Function {
        name: Label::from("main"),
        input: input.to_type(),
        output: output.to_type(),
        body,
    });
    GeneratedProgram {
        program: Program {
            type_aliases: vec![],
            functions,
        },
        entry: Label::from("main"),
    }
}

/// A random type without `operation`, nested at most `depth` levels.
pub fn random_type(rng: &mut ChaCha8Rng, depth: usize) -> Type {
    let mut g = Gen {
        rng,
        budget: 0,
        fresh: 0,
        helpers: Vec::new(),
    };
    g.random_type(depth)
}

/// A random value of `t`. Types containing `operation` only admit empty
/// lists of operations.
pub fn random_value(rng: &mut ChaCha8Rng, t: &Type) -> Value {
    use albert::syntax::PrimType as P;
    match t {
        Type::Prim(P::Nat) => Value::Nat(BigUint::from(small(rng))),
        Type::Prim(P::Int) => Value::Int(BigInt::from(small(rng) as i64 - 8)),
        Type::Prim(P::Mutez) => Value::Mutez(match rng.gen_range(0..10) {
            0 => MUTEZ_MAX - rng.gen_range(0..4),
            1..=3 => rng.gen_range(95..=105),
            _ => small(rng),
        }),
        Type::Prim(P::String) => Value::string(*STRINGS.choose(rng).expect("non-empty")),
        Type::Prim(P::Bool) => Value::Bool(rng.gen()),
        Type::Prim(P::Operation) => unreachable!("operations are never generated"),
        Type::Record(fs) => Value::Record(
            fs.iter()
                .map(|(l, ft)| (l.clone(), random_value(rng, ft)))
                .collect(),
        ),
        Type::Variant(cs) => {
            let (c, pt) = cs.choose(rng).expect("variants are non-empty");
            Value::Variant {
                ctor: c.clone(),
                payload: Box::new(random_value(rng, pt)),
                ty: t.clone(),
            }
        }
        Type::List(e) if e.contains_operation() => Value::List(vec![], (**e).clone()),
        Type::List(e) => {
            let n = rng.gen_range(0..=3);
            Value::List((0..n).map(|_| random_value(rng, e)).collect(), (**e).clone())
        }
        Type::Map(k, v) => {
            let n = rng.gen_range(0..=3);
            let m = (0..n)
                .map(|_| (random_value(rng, k), random_value(rng, v)))
                .collect();
            Value::Map(m, (**k).clone(), (**v).clone())
        }
        Type::Option(e) => {
            if rng.gen_bool(0.3) {
                Value::None((**e).clone())
            } else {
                Value::Some(Box::new(random_value(rng, e)))
            }
        }
        Type::Alias(a) => panic!("random_value: unexpanded alias `{a}`"),
    }
}

/// A random transfer amount, occasionally large enough to overflow.
pub fn random_amount(rng: &mut ChaCha8Rng) -> u64 {
    match rng.gen_range(0..10) {
        0 => MUTEZ_MAX - rng.gen_range(0..4),
        1..=4 => rng.gen_range(95..=105),
        _ => small(rng),
    }
}

fn small(rng: &mut ChaCha8Rng) -> u64 {
    if rng.gen_bool(0.1) {
        rng.gen_range(0..1_000_000)
    } else {
        rng.gen_range(0..16)
    }
}

fn is_numeric(t: &Type) -> bool {
    use albert::syntax::PrimType as P;
    matches!(t, Type::Prim(P::Nat | P::Int | P::Mutez))
}

/// Mutable generation state for one program.
struct Gen<'r> {
    rng: &'r mut ChaCha8Rng,
    /// Remaining AST nodes; generation of statements stops at zero.
    budget: isize,
    fresh: usize,
    helpers: Vec<(Label, RecordEnv, RecordEnv)>,
}

/// The statement forms the generator picks from.
#[derive(Debug, Clone, Copy)]
enum Form {
    Literal,
    Rename,
    BuildRecord,
    Destructure,
    Dup,
    AssertSome,
    Call,
    Proj,
    Update,
    RhsMatch,
    Construct,
    Arith,
    MapGet,
    MapUpdate,
    Amount,
    Drop,
    Match,
}

const FORMS: [(Form, u32); 17] = [
    (Form::Literal, 2),
    (Form::Rename, 1),
    (Form::BuildRecord, 3),
    (Form::Destructure, 3),
    (Form::Dup, 4),
    (Form::AssertSome, 3),
    (Form::Call, 4),
    (Form::Proj, 4),
    (Form::Update, 3),
    (Form::RhsMatch, 3),
    (Form::Construct, 3),
    (Form::Arith, 5),
    (Form::MapGet, 3),
    (Form::MapUpdate, 3),
    (Form::Amount, 1),
    (Form::Drop, 2),
    (Form::Match, 4),
];

fn var(x: &Label) -> Arg {
    Arg::Var(x.clone())
}

fn assign(x: &Label, r: Rhs) -> Instruction {
    Instruction::Assign(Lhs::Var(x.clone()), r)
}

impl Gen<'_> {
    fn fresh(&mut self, prefix: &str) -> Label {
        self.fresh += 1;
        Label::new(format!("{prefix}{}", self.fresh))
    }

    fn spend(&mut self, n: isize) {
        self.budget -= n;
    }

    fn sorted_labels(&mut self, pool: &[&str], lo: usize, hi: usize) -> Vec<Label> {
        let n = self.rng.gen_range(lo..=hi.min(pool.len()));
        let mut picked: Vec<&str> = pool.choose_multiple(self.rng, n).copied().collect();
        picked.sort_unstable();
        picked.into_iter().map(Label::from).collect()
    }

    fn random_type(&mut self, depth: usize) -> Type {
        let leaf = depth == 0 || self.rng.gen_bool(0.5);
        if leaf {
            return match self.rng.gen_range(0..6) {
                0 | 1 => Type::nat(),
                2 => Type::int(),
                3 => Type::string(),
                4 => Type::mutez(),
                _ => Type::bool(),
            };
        }
        match self.rng.gen_range(0..6) {
            0 => Type::option(self.random_type(depth - 1)),
            1 => Type::list(self.random_type(depth - 1)),
            2 => {
                let k = match self.rng.gen_range(0..4) {
                    0 => Type::nat(),
                    1 => Type::int(),
                    _ => Type::string(),
                };
                Type::map(k, self.random_type(depth - 1))
            }
            3 | 4 => {
                let labels = self.sorted_labels(&FIELD_LABELS, 0, MAX_FIELDS);
                Type::Record(
                    labels
                        .into_iter()
                        .map(|l| (l, self.random_type(depth - 1)))
                        .collect(),
                )
            }
            _ => {
                let labels = self.sorted_labels(&CTOR_LABELS, 1, MAX_CTORS);
                Type::Variant(
                    labels
                        .into_iter()
                        .map(|l| (l, self.random_type(depth - 1)))
                        .collect(),
                )
            }
        }
    }

    fn random_env(&mut self, lo: usize, hi: usize) -> RecordEnv {
        let labels = self.sorted_labels(&FIELD_LABELS, lo, hi);
        labels
            .into_iter()
            .map(|l| {
                let t = self.random_type(2);
                (l, t)
            })
            .collect()
    }

    fn literal(&mut self, t: &Type) -> Value {
        random_value(self.rng, t)
    }

    fn function_body(&mut self, input: &RecordEnv, output: &RecordEnv, budget: isize) -> Instruction {
        let saved = self.budget;
        self.budget = budget.max(1);
        let mut env = input.clone();
        let (mut code, diverged) = self.block(&mut env, 0, false);
        if !diverged {
            code.extend(self.close(&mut env, output));
        }
        self.budget = saved - (budget - self.budget.max(0));
        Instruction::seq(code)
    }

    /// Generates statements until the budget runs out or the block ends in
    /// a failure. Returns whether the block always fails.
    fn block(&mut self, env: &mut RecordEnv, depth: usize, may_fail: bool) -> (Vec<Instruction>, bool) {
        let mut code = Vec::new();
        let stmts = self.rng.gen_range(1..=8usize);
        for _ in 0..stmts {
            if self.budget <= 0 {
                break;
            }
            if let Some(diverged) = self.statement(env, depth, &mut code) {
                if diverged {
                    return (code, true);
                }
            }
        }
        if may_fail && self.rng.gen_bool(0.3) {
            let arg = self.failure_arg(env);
            code.push(Instruction::Failwith(arg));
            return (code, true);
        }
        (code, false)
    }

    fn failure_arg(&mut self, env: &RecordEnv) -> Arg {
        let candidates: Vec<Label> = env
            .iter()
            .filter(|(_, t)| !t.contains_operation())
            .map(|(l, _)| l.clone())
            .collect();
        if !candidates.is_empty() && self.rng.gen_bool(0.5) {
            return var(candidates.choose(self.rng).expect("non-empty"));
        }
        let t = self.random_type(1);
        Arg::Val(self.literal(&t))
    }

    fn vars_where(&self, env: &RecordEnv, p: impl Fn(&Type) -> bool) -> Vec<(Label, Type)> {
        env.iter()
            .filter(|(_, t)| p(t))
            .map(|(l, t)| (l.clone(), t.clone()))
            .collect()
    }

    fn pick(&mut self, vs: &[(Label, Type)]) -> Option<(Label, Type)> {
        vs.choose(self.rng).cloned()
    }

    /// A variable of type `t`, binding a fresh literal if none is live.
    /// `avoid` lists variables that must not be chosen.
    fn operand(&mut self, env: &mut RecordEnv, t: &Type, avoid: &[&Label], code: &mut Vec<Instruction>) -> Label {
        let found: Vec<Label> = env
            .iter()
            .filter(|(l, ty)| *ty == t && !avoid.contains(l))
            .map(|(l, _)| l.clone())
            .collect();
        if !found.is_empty() && self.rng.gen_bool(0.7) {
            return found.choose(self.rng).expect("non-empty").clone();
        }
        let x = self.fresh("v");
        let v = self.literal(t);
        code.push(assign(&x, Rhs::Arg(Arg::Val(v))));
        env.insert(x.clone(), t.clone());
        self.spend(2);
        x
    }

    /// Binds the result of `r`, of type `t`, either to a fresh variable or,
    /// for records, through a pattern.
    fn bind(&mut self, env: &mut RecordEnv, r: Rhs, t: Type, code: &mut Vec<Instruction>) {
        match &t {
            Type::Record(fs) if !fs.is_empty() && self.rng.gen_bool(0.5) => {
                let pat: Vec<(Label, Label)> = fs.iter().map(|(l, _)| (l.clone(), self.fresh("v"))).collect();
                for ((_, x), (_, ft)) in pat.iter().zip(fs) {
                    env.insert(x.clone(), ft.clone());
                }
                code.push(Instruction::Assign(Lhs::Record(pat), r));
            }
            _ => {
                let x = self.fresh("v");
                env.insert(x.clone(), t);
                code.push(assign(&x, r));
            }
        }
    }

    /// Emits one statement. Returns `None` when the chosen form did not
    /// apply, otherwise whether the statement always fails.
    fn statement(&mut self, env: &mut RecordEnv, depth: usize, code: &mut Vec<Instruction>) -> Option<bool> {
        let applicable: Vec<(Form, u32)> = FORMS
            .iter()
            .copied()
            .filter(|(f, _)| self.applicable(*f, env, depth))
            .collect();
        let form = applicable
            .choose_weighted(self.rng, |(_, w)| *w)
            .expect("literals always apply")
            .0;
        self.spend(1);
        match form {
            Form::Literal => {
                let t = self.random_type(MAX_DEPTH - 1);
                let v = self.literal(&t);
                self.spend(1);
                self.bind(env, Rhs::Arg(Arg::Val(v)), t, code);
            }
            Form::Rename => {
                let (x, t) = self.pick(&self.vars_where(env, |_| true))?;
                env.remove(&x);
                self.bind(env, Rhs::Arg(var(&x)), t, code);
            }
            Form::BuildRecord => {
                let avail = self.vars_where(env, |t| !t.contains_operation());
                if avail.is_empty() {
                    return None;
                }
                let n = self.rng.gen_range(1..=avail.len().min(3));
                let chosen: Vec<(Label, Type)> = avail.choose_multiple(self.rng, n).cloned().collect();
                let labels = {
                    let mut ls: Vec<&str> = FIELD_LABELS.choose_multiple(self.rng, n).copied().collect();
                    ls.sort_unstable();
                    ls
                };
                let mut fields = Vec::new();
                let mut ty = Vec::new();
                for (l, (x, t)) in labels.iter().zip(&chosen) {
                    env.remove(x);
                    fields.push((Label::from(*l), x.clone()));
                    ty.push((Label::from(*l), t.clone()));
                }
                self.spend(n as isize);
                self.bind(env, Rhs::Arg(Arg::Record(fields)), Type::Record(ty), code);
            }
            Form::Destructure => {
                let (x, t) = self.pick(&self.vars_where(env, |t| matches!(t, Type::Record(fs) if !fs.is_empty())))?;
                let Type::Record(fs) = &t else { unreachable!() };
                env.remove(&x);
                let pat: Vec<(Label, Label)> = fs.iter().map(|(l, _)| (l.clone(), self.fresh("v"))).collect();
                for ((_, y), (_, ft)) in pat.iter().zip(fs) {
                    env.insert(y.clone(), ft.clone());
                }
                code.push(Instruction::Assign(Lhs::Record(pat), Rhs::Arg(var(&x))));
            }
            Form::Dup => {
                let (x, t) = self.pick(&self.vars_where(env, |t| !t.contains_operation()))?;
                env.remove(&x);
                let rt = Type::record([("car", t.clone()), ("cdr", t)]);
                self.bind(env, Rhs::Apply(FunName::Dup, var(&x)), rt, code);
            }
            Form::AssertSome => {
                let (x, t) = self.pick(&self.vars_where(env, |t| matches!(t, Type::Option(_))))?;
                let Type::Option(inner) = t else { unreachable!() };
                env.remove(&x);
                let arg = Arg::Record(vec![(Label::from("opt"), x)]);
                self.bind(env, Rhs::Apply(FunName::AssertSome, arg), Type::record([("res", *inner)]), code);
            }
            Form::Call => {
                let (f, input, output) = self.helpers.choose(self.rng)?.clone();
                let mut fields = Vec::new();
                let mut used: Vec<Label> = Vec::new();
                for (l, t) in input.iter() {
                    let avoid: Vec<&Label> = used.iter().collect();
                    let x = self.operand(env, t, &avoid, code);
                    used.push(x.clone());
                    fields.push((l.clone(), x));
                }
                for x in &used {
                    env.remove(x);
                }
                self.spend(fields.len() as isize);
                self.bind(env, Rhs::Apply(FunName::User(f), Arg::Record(fields)), output.to_type(), code);
            }
            Form::Proj => {
                let (x, t) = self.pick(&self.vars_where(env, |t| matches!(t, Type::Record(fs) if !fs.is_empty())))?;
                let Type::Record(fs) = &t else { unreachable!() };
                let (l, ft) = fs.choose(self.rng).expect("non-empty").clone();
                env.remove(&x);
                self.bind(env, Rhs::Proj(x, l), ft, code);
            }
            Form::Update => {
                let (x, t) = self.pick(&self.vars_where(env, |t| matches!(t, Type::Record(fs) if !fs.is_empty())))?;
                let Type::Record(fs) = &t else { unreachable!() };
                let n = self.rng.gen_range(1..=fs.len());
                let mut chosen: Vec<(Label, Type)> = fs.choose_multiple(self.rng, n).cloned().collect();
                chosen.sort_by(|a, b| a.0.cmp(&b.0));
                let mut fields = Vec::new();
                let mut used = Vec::new();
                for (l, ft) in &chosen {
                    let mut avoid: Vec<&Label> = used.iter().collect();
                    avoid.push(&x);
                    let y = self.operand(env, ft, &avoid, code);
                    used.push(y.clone());
                    fields.push((l.clone(), y));
                }
                env.remove(&x);
                for y in &used {
                    env.remove(y);
                }
                self.spend(n as isize);
                self.bind(env, Rhs::Update(x, fields), t.clone(), code);
            }
            Form::RhsMatch => {
                let (x, t) = self.pick(&self.vars_where(env, |t| t.variant_view().is_some()))?;
                env.remove(&x);
                let (r, rt) = self.rhs_match(&x, &t);
                self.bind(env, r, rt, code);
            }
            Form::Construct => {
                let (x, t) = self.pick(&self.vars_where(env, |t| !t.contains_operation()))?;
                env.remove(&x);
                let (c, annot, rt) = if t.is_unit() && self.rng.gen_bool(0.4) {
                    match self.rng.gen_range(0..2) {
                        0 => {
                            let c = if self.rng.gen() { "True" } else { "False" };
                            (Label::from(c), Some(Type::bool()), Type::bool())
                        }
                        _ => {
                            let e = self.random_type(1);
                            (Label::from("None"), Some(Type::option(e.clone())), Type::option(e))
                        }
                    }
                } else if self.rng.gen_bool(0.25) {
                    (Label::from("Some"), None, Type::option(t.clone()))
                } else {
                    let labels = self.sorted_labels(&CTOR_LABELS, 1, MAX_CTORS);
                    let pos = self.rng.gen_range(0..labels.len());
                    let cs: Vec<(Label, Type)> = labels
                        .iter()
                        .enumerate()
                        .map(|(i, l)| {
                            let pt = if i == pos { t.clone() } else { self.random_type(1) };
                            (l.clone(), pt)
                        })
                        .collect();
                    let vt = Type::Variant(cs);
                    (labels[pos].clone(), Some(vt.clone()), vt)
                };
                self.bind(env, Rhs::Construct(c, var(&x), annot), rt, code);
            }
            Form::Arith => {
                let ge = self.rng.gen_bool(0.4);
                let (x, t) = match self.pick(&self.vars_where(env, is_numeric)) {
                    Some(found) => found,
                    None => {
                        let t = [Type::nat(), Type::int(), Type::mutez()].choose(self.rng).expect("non-empty").clone();
                        (self.operand(env, &t, &[], code), t)
                    }
                };
                let y = self.operand(env, &t, &[&x], code);
                env.remove(&x);
                env.remove(&y);
                self.spend(2);
                let (op, rt) = if ge { (BinOp::Ge, Type::bool()) } else { (BinOp::Add, t) };
                let (a, b) = if self.rng.gen() { (x, y) } else { (y, x) };
                self.bind(env, Rhs::BinOp(op, a, b), rt, code);
            }
            Form::MapGet => {
                let (m, t) = self.pick(&self.vars_where(env, |t| matches!(t, Type::Map(..))))?;
                let Type::Map(k, v) = &t else { unreachable!() };
                let key = self.operand(env, k, &[&m], code);
                env.remove(&m);
                env.remove(&key);
                self.spend(2);
                self.bind(env, Rhs::BinOp(BinOp::MapGet, m, key), Type::option((**v).clone()), code);
            }
            Form::MapUpdate => {
                let (m, t) = self.pick(&self.vars_where(env, |t| matches!(t, Type::Map(..))))?;
                let Type::Map(k, v) = &t else { unreachable!() };
                let key = self.operand(env, k, &[&m], code);
                let val = self.operand(env, &Type::option((**v).clone()), &[&m, &key], code);
                env.remove(&m);
                env.remove(&key);
                env.remove(&val);
                self.spend(3);
                self.bind(env, Rhs::MapUpdate(m, key, val), t.clone(), code);
            }
            Form::Amount => {
                self.bind(env, Rhs::Amount, Type::mutez(), code);
            }
            Form::Drop => {
                let (x, _) = self.pick(&self.vars_where(env, |t| !t.contains_operation()))?;
                env.remove(&x);
                code.push(Instruction::Drop(x));
            }
            Form::Match => {
                if depth >= MAX_DEPTH {
                    return None;
                }
                let (x, t) = self.pick(&self.vars_where(env, |t| t.variant_view().is_some()))?;
                return Some(self.match_instr(env, &x, &t, depth, code));
            }
        }
        Some(false)
    }

    fn applicable(&self, form: Form, env: &RecordEnv, depth: usize) -> bool {
        let any = |p: &dyn Fn(&Type) -> bool| env.iter().any(|(_, t)| p(t));
        let record = |t: &Type| matches!(t, Type::Record(fs) if !fs.is_empty());
        let plain = |t: &Type| !t.contains_operation();
        let variant = |t: &Type| t.variant_view().is_some();
        match form {
            Form::Literal | Form::Amount => true,
            Form::Rename => !env.is_empty(),
            Form::BuildRecord | Form::Dup | Form::Construct | Form::Drop => any(&plain),
            Form::Destructure | Form::Proj | Form::Update => any(&record),
            Form::AssertSome => any(&|t| matches!(t, Type::Option(_))),
            Form::Call => !self.helpers.is_empty(),
            Form::RhsMatch => any(&variant),
            Form::Match => depth < MAX_DEPTH && any(&variant),
            Form::Arith => any(&is_numeric),
            Form::MapGet | Form::MapUpdate => any(&|t| matches!(t, Type::Map(..))),
        }
    }

    /// A match expression on `x` whose branches only use their binders.
    fn rhs_match(&mut self, x: &Label, t: &Type) -> (Rhs, Type) {
        let ctors = t.variant_view().expect("variant-like");
        // Candidate result types: payloads, fields of record payloads, and
        // a wrapper variant that always works.
        let mut candidates: Vec<Type> = Vec::new();
        for (_, p) in &ctors {
            candidates.push(p.clone());
            if let Type::Record(fs) = p {
                candidates.extend(fs.iter().map(|(_, ft)| ft.clone()));
            }
        }
        let producible = |rt: &Type, p: &Type| p == rt || matches!(p, Type::Record(fs) if fs.iter().any(|(_, ft)| ft == rt));
        let usable: Vec<Type> = candidates
            .into_iter()
            .filter(|rt| ctors.iter().all(|(_, p)| producible(rt, p)))
            .collect();
        let wrapper = || {
            let labels: Vec<Label> = CTOR_LABELS[..ctors.len()].iter().map(|l| Label::from(*l)).collect();
            Type::Variant(labels.into_iter().zip(ctors.iter().map(|(_, p)| p.clone())).collect())
        };
        let rt = match usable.choose(self.rng) {
            Some(rt) if self.rng.gen_bool(0.6) => rt.clone(),
            _ => wrapper(),
        };
        let mut branches = Vec::new();
        for (i, (c, p)) in ctors.iter().enumerate() {
            let b = self.fresh("b");
            let body = if *p == rt {
                Rhs::Arg(var(&b))
            } else if let Some((l, _)) = p.record_fields().and_then(|fs| fs.iter().find(|(_, ft)| *ft == rt)) {
                Rhs::Proj(b.clone(), l.clone())
            } else {
                let Type::Variant(ws) = &rt else { unreachable!("wrapper is a variant") };
                Rhs::Construct(ws[i].0.clone(), var(&b), Some(rt.clone()))
            };
            branches.push(Branch {
                ctor: c.clone(),
                binder: b,
                body,
            });
        }
        branches.shuffle(self.rng);
        self.spend(ctors.len() as isize * 2);
        (Rhs::Match(x.clone(), branches), rt)
    }

    /// A match instruction on `x`. Returns whether every branch fails.
    fn match_instr(&mut self, env: &mut RecordEnv, x: &Label, t: &Type, depth: usize, code: &mut Vec<Instruction>) -> bool {
        let ctors = t.variant_view().expect("variant-like");
        env.remove(x);
        let mut target: Option<RecordEnv> = None;
        let mut branches = Vec::new();
        let mut pending = Vec::new();
        for (c, p) in &ctors {
            let b = self.fresh("b");
            let mut benv = env.clone();
            benv.insert(b.clone(), p.clone());
            let (mut body, diverged) = self.block(&mut benv, depth + 1, true);
            if !diverged {
                match &target {
                    None => target = Some(benv),
                    Some(tg) => {
                        let tg = tg.clone();
                        body.extend(self.close(&mut benv, &tg));
                    }
                }
            }
            pending.push((c.clone(), b, body, diverged));
        }
        for (c, b, body, _) in pending {
            branches.push(Branch {
                ctor: c,
                binder: b,
                body: Instruction::seq(body),
            });
        }
        branches.shuffle(self.rng);
        code.push(Instruction::Match(x.clone(), branches));
        match target {
            Some(tg) => {
                *env = tg;
                false
            }
            None => true,
        }
    }

    /// Brings `env` to exactly `target` by renaming, literal introduction
    /// and dropping the rest.
    fn close(&mut self, env: &mut RecordEnv, target: &RecordEnv) -> Vec<Instruction> {
        let mut code = Vec::new();
        // Free target names that are bound at the wrong type.
        for (l, t) in target.iter() {
            if let Some(cur) = env.get(l) {
                if cur != t {
                    let cur = cur.clone();
                    let v = self.fresh("v");
                    env.remove(l);
                    env.insert(v.clone(), cur);
                    code.push(assign(&v, Rhs::Arg(var(l))));
                }
            }
        }
        for (l, t) in target.iter() {
            if env.get(l) == Some(t) {
                continue;
            }
            let donors: Vec<Label> = env
                .iter()
                .filter(|(y, ty)| *ty == t && !target.contains(y))
                .map(|(y, _)| y.clone())
                .collect();
            let r = match donors.choose(self.rng) {
                Some(y) if self.rng.gen_bool(0.8) => {
                    env.remove(y);
                    Rhs::Arg(var(y))
                }
                _ => Rhs::Arg(Arg::Val(self.literal(t))),
            };
            env.insert(l.clone(), t.clone());
            code.push(assign(l, r));
        }
        let extra: Vec<Label> = env.labels().filter(|l| !target.contains(l)).cloned().collect();
        for x in extra {
            env.remove(&x);
            code.push(Instruction::Drop(x));
        }
        code
    }
}

/// Every kind of right-hand side, used to measure generator coverage.
pub const RHS_KINDS: [&str; 11] = [
    "arg", "dup", "assert_some", "call", "proj", "update", "match", "construct", "binop", "map_update", "amount",
];

/// The kinds of right-hand side occurring in `p`.
pub fn rhs_kinds(p: &Program) -> std::collections::BTreeSet<&'static str> {
    fn rhs(r: &Rhs, out: &mut std::collections::BTreeSet<&'static str>) {
        let kind = match r {
            Rhs::Arg(_) => "arg",
            Rhs::Apply(FunName::Dup, _) => "dup",
            Rhs::Apply(FunName::AssertSome, _) => "assert_some",
            Rhs::Apply(FunName::User(_), _) => "call",
            Rhs::Proj(..) => "proj",
            Rhs::Update(..) => "update",
            Rhs::Match(_, bs) => {
                for b in bs {
                    rhs(&b.body, out);
                }
                "match"
            }
            Rhs::Construct(..) => "construct",
            Rhs::BinOp(..) => "binop",
            Rhs::MapUpdate(..) => "map_update",
            Rhs::Amount => "amount",
        };
        out.insert(kind);
    }
    fn instr(i: &Instruction, out: &mut std::collections::BTreeSet<&'static str>) {
        match i {
            Instruction::Seq(a, b) => {
                instr(a, out);
                instr(b, out);
            }
            Instruction::Assign(_, r) => rhs(r, out),
            Instruction::Match(_, bs) => bs.iter().for_each(|b| instr(&b.body, out)),
            _ => {}
        }
    }
    let mut out = std::collections::BTreeSet::new();
    for f in &p.functions {
        instr(&f.body, &mut out);
    }
    out
}
