//! Hand-written recursive descent parser for Albert sources.
//!
//! Literals are first read as untyped [`Raw`] terms so that constructor
//! applications over variables (`(C x : ty)`) and literal values
//! (`(C 1 : ty)`, `(5 : int)`) share one grammar; they are classified once
//! the surrounding context is known.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::ToPrimitive;

use super::lexer::{tokenize, Pos, Tok};
use super::{
    is_keyword, Arg, BinOp, Branch, FunName, Function, Instruction, Label, Lhs, PrimType, Program,
    Rhs, Type, Value, MUTEZ_MAX,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(pos: Pos, message: impl Into<String>) -> Self {
        ParseError {
            pos,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.message)
    }
}

type PResult<T> = Result<T, ParseError>;

/// Parses a whole `.alb` source file.
pub fn parse_program(source: &str) -> PResult<Program> {
    let mut p = Parser::new(source, &[])?;
    let program = p.program()?;
    Ok(program)
}

/// Parses a standalone type expression.
pub fn parse_type(source: &str) -> PResult<Type> {
    let mut p = Parser::new(source, &[])?;
    let ty = p.ty()?;
    p.expect_eof()?;
    Ok(ty)
}

/// Parses a literal value. `aliases` resolves type names used in
/// annotations; `expected` types bare literals such as `[]` or `5`.
pub fn parse_value(
    source: &str,
    expected: Option<&Type>,
    aliases: &[(Label, Type)],
) -> PResult<Value> {
    let mut p = Parser::new(source, aliases)?;
    let raw = p.raw_app()?;
    p.expect_eof()?;
    p.to_value(&raw, expected)
}

#[derive(Debug, Clone)]
enum Raw {
    Var(Label, Pos),
    Nat(BigUint),
    Neg(BigInt),
    Str(String),
    Ctor(Label, Option<Box<Raw>>, Pos),
    Record(Vec<(Label, Raw)>),
    EmptyBraces,
    Map(Vec<(Raw, Raw)>, Pos),
    List(Vec<Raw>, Pos),
    Ascribe(Box<Raw>, Type),
}

impl Raw {
    fn has_vars(&self) -> bool {
        match self {
            Raw::Var(..) => true,
            Raw::Ctor(_, p, _) => p.as_ref().is_some_and(|p| p.has_vars()),
            Raw::Record(fs) => fs.iter().any(|(_, r)| r.has_vars()),
            Raw::Map(es, _) => es.iter().any(|(k, v)| k.has_vars() || v.has_vars()),
            Raw::List(xs, _) => xs.iter().any(Raw::has_vars),
            Raw::Ascribe(r, _) => r.has_vars(),
            _ => false,
        }
    }
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    idx: usize,
    aliases: HashMap<String, Type>,
    /// Output types of functions defined so far, used to desugar bare calls.
    functions: HashMap<String, Type>,
}

impl Parser {
    fn new(src: &str, aliases: &[(Label, Type)]) -> PResult<Self> {
        Ok(Parser {
            toks: tokenize(src)?,
            idx: 0,
            aliases: aliases
                .iter()
                .map(|(l, t)| (l.as_str().to_owned(), t.clone()))
                .collect(),
            functions: HashMap::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.idx].0
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.idx + n).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.idx].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.idx].0.clone();
        if self.idx < self.toks.len() - 1 {
            self.idx += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(ParseError::new(self.pos(), msg))
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        self.err(format!("expected {wanted}, found {}", self.peek().describe()))
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.unexpected(&tok.describe())
        }
    }

    fn expect_eof(&mut self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.unexpected("end of input")
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    /// A variable, record label or function name.
    fn name(&mut self) -> PResult<Label> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(Label::new(s))
            }
            Tok::Ident(s) => self.err(format!("`{s}` is a reserved word")),
            _ => self.unexpected("an identifier"),
        }
    }

    /// Constructor names may reuse the builtin constructor keywords.
    fn ctor_name(&mut self) -> PResult<Label> {
        match self.peek().clone() {
            Tok::Ident(s)
                if !is_keyword(&s) || matches!(s.as_str(), "True" | "False" | "Some" | "None") =>
            {
                self.bump();
                Ok(Label::new(s))
            }
            _ => self.unexpected("a constructor name"),
        }
    }

    // ---- items ----

    fn program(&mut self) -> PResult<Program> {
        let mut program = Program::default();
        let mut fn_names = HashSet::new();
        loop {
            if self.eat_kw("type") {
                let pos = self.pos();
                let name = self.name()?;
                if PrimType::from_name(name.as_str()).is_some()
                    || matches!(name.as_str(), "list" | "map" | "option" | "or")
                {
                    return Err(ParseError::new(
                        pos,
                        format!("`{name}` is a builtin type and cannot be redefined"),
                    ));
                }
                if self.aliases.contains_key(name.as_str()) {
                    return Err(ParseError::new(pos, format!("duplicate type alias `{name}`")));
                }
                self.expect(Tok::Eq)?;
                let ty = self.ty()?;
                self.aliases.insert(name.as_str().to_owned(), ty.clone());
                program.type_aliases.push((name, ty));
            } else if self.eat_kw("def") {
                let pos = self.pos();
                let name = self.name()?;
                if !fn_names.insert(name.clone()) {
                    return Err(ParseError::new(pos, format!("duplicate function `{name}`")));
                }
                self.expect(Tok::Colon)?;
                let input = self.ty()?;
                self.expect(Tok::Arrow)?;
                let output = self.ty()?;
                self.expect(Tok::Eq)?;
                let body = self.instrs()?;
                self.functions.insert(name.as_str().to_owned(), output.clone());
                program.functions.push(Function {
                    name,
                    input,
                    output,
                    body,
                });
            } else if *self.peek() == Tok::Eof {
                return Ok(program);
            } else {
                return self.unexpected("`def` or `type`");
            }
        }
    }

    // ---- types ----

    pub(crate) fn ty(&mut self) -> PResult<Type> {
        if self.eat_kw("list") {
            return Ok(Type::list(self.atype()?));
        }
        if self.eat_kw("option") {
            return Ok(Type::option(self.atype()?));
        }
        if self.eat_kw("map") {
            let k = self.atype()?;
            let v = self.atype()?;
            return Ok(Type::map(k, v));
        }
        if self.eat_kw("or") {
            let l = self.atype()?;
            let r = self.atype()?;
            return Ok(Type::variant([("Left", l), ("Right", r)]));
        }
        self.atype()
    }

    fn atype(&mut self) -> PResult<Type> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                if let Some(p) = PrimType::from_name(&s) {
                    self.bump();
                    return Ok(Type::Prim(p));
                }
                if matches!(s.as_str(), "list" | "map" | "option" | "or") {
                    return self.err(format!("type `{s} ...` must be parenthesized here"));
                }
                if is_keyword(&s) {
                    return self.err(format!("`{s}` is a reserved word"));
                }
                self.bump();
                Ok(Type::Alias(Label::new(s)))
            }
            Tok::LBrace => {
                self.bump();
                let mut fields = Vec::new();
                let mut seen = HashSet::new();
                while *self.peek() != Tok::RBrace {
                    let pos = self.pos();
                    let l = self.name()?;
                    if !seen.insert(l.clone()) {
                        return Err(ParseError::new(pos, format!("duplicate label `{l}`")));
                    }
                    self.expect(Tok::Colon)?;
                    fields.push((l, self.ty()?));
                    if !self.eat(&Tok::Semi) {
                        break;
                    }
                }
                self.expect(Tok::RBrace)?;
                Ok(Type::Record(fields))
            }
            Tok::LBracket => {
                self.bump();
                if *self.peek() == Tok::RBracket {
                    return self.err("a variant type needs at least one constructor");
                }
                let mut ctors = Vec::new();
                let mut seen = HashSet::new();
                loop {
                    let pos = self.pos();
                    let c = self.ctor_name()?;
                    if !seen.insert(c.clone()) {
                        return Err(ParseError::new(pos, format!("duplicate constructor `{c}`")));
                    }
                    self.expect(Tok::Colon)?;
                    ctors.push((c, self.ty()?));
                    if !self.eat(&Tok::Bar) {
                        break;
                    }
                }
                self.expect(Tok::RBracket)?;
                Ok(Type::Variant(ctors))
            }
            Tok::LParen => {
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            _ => self.unexpected("a type"),
        }
    }

    // ---- instructions ----

    fn at_seq_end(&self) -> bool {
        matches!(self.peek(), Tok::Eof | Tok::Bar)
            || self.is_kw("def")
            || self.is_kw("type")
            || self.is_kw("end")
    }

    fn instrs(&mut self) -> PResult<Instruction> {
        let mut items = vec![self.instr()?];
        while self.eat(&Tok::Semi) {
            if self.at_seq_end() {
                break;
            }
            items.push(self.instr()?);
        }
        Ok(Instruction::seq(items))
    }

    fn instr(&mut self) -> PResult<Instruction> {
        if self.eat_kw("noop") {
            return Ok(Instruction::Noop);
        }
        if self.eat_kw("drop") {
            return Ok(Instruction::Drop(self.name()?));
        }
        if self.eat_kw("failwith") {
            return Ok(Instruction::Failwith(self.arg()?));
        }
        if self.eat_kw("match") {
            let scrutinee = self.name()?;
            self.expect_kw("with")?;
            let branches = self.branches(Self::instrs)?;
            return Ok(Instruction::Match(scrutinee, branches));
        }
        match self.peek().clone() {
            Tok::LBrace => {
                self.bump();
                let mut fields = Vec::new();
                let mut labels = HashSet::new();
                let mut vars = HashSet::new();
                while *self.peek() != Tok::RBrace {
                    let pos = self.pos();
                    let l = self.name()?;
                    if !labels.insert(l.clone()) {
                        return Err(ParseError::new(pos, format!("duplicate label `{l}`")));
                    }
                    self.expect(Tok::Eq)?;
                    let pos = self.pos();
                    let x = self.name()?;
                    if !vars.insert(x.clone()) {
                        return Err(ParseError::new(pos, format!("variable `{x}` bound twice")));
                    }
                    fields.push((l, x));
                    if !self.eat(&Tok::Semi) {
                        break;
                    }
                }
                self.expect(Tok::RBrace)?;
                self.expect(Tok::Eq)?;
                let rhs = self.rhs()?;
                Ok(Instruction::Assign(Lhs::Record(fields), rhs))
            }
            Tok::LParen => {
                self.bump();
                let a = self.name()?;
                self.expect(Tok::Comma)?;
                let pos = self.pos();
                let b = self.name()?;
                if a == b {
                    return Err(ParseError::new(pos, format!("variable `{b}` bound twice")));
                }
                self.expect(Tok::RParen)?;
                self.expect(Tok::Eq)?;
                let rhs = self.rhs()?;
                Ok(Instruction::Assign(
                    Lhs::Record(vec![(Label::from("car"), a), (Label::from("cdr"), b)]),
                    rhs,
                ))
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                if *self.peek_at(1) == Tok::Eq {
                    let x = self.name()?;
                    self.bump();
                    let rhs = self.rhs()?;
                    return Ok(Instruction::Assign(Lhs::Var(x), rhs));
                }
                if !self.atom_start_at(1) {
                    return self.unexpected_after_name();
                }
                // A bare call `f arg` binds each field of f's output record
                // to a variable of the same name.
                let pos = self.pos();
                let f = self.name()?;
                let out = match self.functions.get(f.as_str()) {
                    Some(t) => t.clone(),
                    None => {
                        return Err(ParseError::new(
                            pos,
                            format!("unknown function `{f}` (functions must be defined before use)"),
                        ))
                    }
                };
                let labels = match self.resolve_head(&out, pos)? {
                    Type::Record(fields) => fields.into_iter().map(|(l, _)| l).collect::<Vec<_>>(),
                    _ => {
                        return Err(ParseError::new(
                            pos,
                            format!("bare call to `{f}` requires a record output type"),
                        ))
                    }
                };
                let arg = self.arg()?;
                Ok(Instruction::Assign(
                    Lhs::Record(labels.into_iter().map(|l| (l.clone(), l)).collect()),
                    Rhs::Apply(FunName::User(f), arg),
                ))
            }
            _ => self.unexpected("an instruction"),
        }
    }

    fn unexpected_after_name<T>(&mut self) -> PResult<T> {
        self.bump();
        self.unexpected("`=` or a function argument")
    }

    fn branches<T>(&mut self, body: fn(&mut Self) -> PResult<T>) -> PResult<Vec<Branch<T>>> {
        self.eat(&Tok::Bar);
        let mut out = Vec::new();
        loop {
            let ctor = self.ctor_name()?;
            let binder = self.name()?;
            self.expect(Tok::Arrow)?;
            let b = body(self)?;
            out.push(Branch {
                ctor,
                binder,
                body: b,
            });
            if !self.eat(&Tok::Bar) {
                break;
            }
        }
        self.expect_kw("end")?;
        Ok(out)
    }

    // ---- right-hand sides ----

    fn atom_start_at(&self, n: usize) -> bool {
        match self.peek_at(n) {
            Tok::Nat(_) | Tok::Neg(_) | Tok::Str(_) | Tok::LBrace | Tok::LParen => true,
            Tok::Ident(s) => !is_keyword(s) || matches!(s.as_str(), "True" | "False" | "None"),
            _ => false,
        }
    }

    fn rhs(&mut self) -> PResult<Rhs> {
        if self.eat_kw("match") {
            let scrutinee = self.name()?;
            self.expect_kw("with")?;
            let branches = self.branches(Self::rhs)?;
            return Ok(Rhs::Match(scrutinee, branches));
        }
        if self.eat_kw("dup") {
            return Ok(Rhs::Apply(FunName::Dup, self.arg()?));
        }
        if self.eat_kw("assert_some") {
            return Ok(Rhs::Apply(FunName::AssertSome, self.arg()?));
        }
        if self.eat_kw("amount") {
            return Ok(Rhs::Amount);
        }
        if self.eat_kw("update") {
            let m = self.name()?;
            let k = self.name()?;
            let v = self.name()?;
            return Ok(Rhs::MapUpdate(m, k, v));
        }
        if self.eat_kw("Some") {
            return Ok(match self.arg()? {
                Arg::Val(v) => Rhs::Arg(Arg::Val(Value::Some(Box::new(v)))),
                arg => Rhs::Construct(Label::from("Some"), arg, None),
            });
        }
        match self.peek().clone() {
            Tok::LBrace if matches!(self.peek_at(1), Tok::Ident(_)) && self.is_kw_at(2, "with") => {
                self.bump();
                let x = self.name()?;
                self.expect_kw("with")?;
                let mut fields = Vec::new();
                let mut seen = HashSet::new();
                while *self.peek() != Tok::RBrace {
                    let pos = self.pos();
                    let l = self.name()?;
                    if !seen.insert(l.clone()) {
                        return Err(ParseError::new(pos, format!("duplicate label `{l}`")));
                    }
                    self.expect(Tok::Eq)?;
                    fields.push((l, self.name()?));
                    if !self.eat(&Tok::Semi) {
                        break;
                    }
                }
                self.expect(Tok::RBrace)?;
                if fields.is_empty() {
                    return self.err("record update needs at least one field");
                }
                Ok(Rhs::Update(x, fields))
            }
            Tok::LParen => {
                let raw = self.raw_atom()?;
                if let Raw::Ascribe(inner, ty) = &raw {
                    if let Raw::Ctor(c, Some(payload), _) = &**inner {
                        if payload.has_vars() {
                            let arg = self.classify_arg(payload)?;
                            return Ok(Rhs::Construct(c.clone(), arg, Some(ty.clone())));
                        }
                    }
                }
                Ok(Rhs::Arg(self.classify_arg(&raw)?))
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                let x = self.name()?;
                match self.peek() {
                    Tok::Dot => {
                        self.bump();
                        Ok(Rhs::Proj(x, self.name()?))
                    }
                    Tok::LBracket => {
                        self.bump();
                        let k = self.name()?;
                        self.expect(Tok::RBracket)?;
                        Ok(Rhs::BinOp(BinOp::MapGet, x, k))
                    }
                    Tok::Plus => {
                        self.bump();
                        Ok(Rhs::BinOp(BinOp::Add, x, self.name()?))
                    }
                    Tok::Ge => {
                        self.bump();
                        Ok(Rhs::BinOp(BinOp::Ge, x, self.name()?))
                    }
                    _ if self.atom_start_at(0) => Ok(Rhs::Apply(FunName::User(x), self.arg()?)),
                    _ => Ok(Rhs::Arg(Arg::Var(x))),
                }
            }
            _ => Ok(Rhs::Arg(self.arg()?)),
        }
    }

    fn is_kw_at(&self, n: usize, kw: &str) -> bool {
        matches!(self.peek_at(n), Tok::Ident(s) if s == kw)
    }

    fn arg(&mut self) -> PResult<Arg> {
        let raw = self.raw_atom()?;
        self.classify_arg(&raw)
    }

    fn classify_arg(&self, raw: &Raw) -> PResult<Arg> {
        match raw {
            Raw::Var(x, _) => Ok(Arg::Var(x.clone())),
            Raw::Record(fields) if raw.has_vars() => {
                let mut out = Vec::new();
                for (l, r) in fields {
                    match r {
                        Raw::Var(x, _) => out.push((l.clone(), x.clone())),
                        _ => {
                            return self.err(
                                "a record argument must bind only variables (name intermediate values first)",
                            )
                        }
                    }
                }
                Ok(Arg::Record(out))
            }
            _ => Ok(Arg::Val(self.to_value(raw, None)?)),
        }
    }

    // ---- raw literal terms ----

    fn raw_app(&mut self) -> PResult<Raw> {
        if let Tok::Ident(s) = self.peek().clone() {
            let ctorish = !is_keyword(&s) || matches!(s.as_str(), "Some" | "Operation" | "True" | "False" | "None");
            if ctorish && self.atom_start_at(1) {
                let pos = self.pos();
                self.bump();
                let payload = self.raw_atom()?;
                return Ok(Raw::Ctor(Label::new(s), Some(Box::new(payload)), pos));
            }
        }
        self.raw_atom()
    }

    fn raw_atom(&mut self) -> PResult<Raw> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Nat(n) => {
                self.bump();
                Ok(Raw::Nat(n))
            }
            Tok::Neg(n) => {
                self.bump();
                Ok(Raw::Neg(n))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Raw::Str(s))
            }
            Tok::Ident(s) if matches!(s.as_str(), "True" | "False" | "None") => {
                self.bump();
                Ok(Raw::Ctor(Label::new(s), None, pos))
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(Raw::Var(Label::new(s), pos))
            }
            Tok::LBrace => {
                self.bump();
                if self.eat(&Tok::RBrace) {
                    return Ok(Raw::EmptyBraces);
                }
                if matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::Eq {
                    let mut fields = Vec::new();
                    let mut seen = HashSet::new();
                    while *self.peek() != Tok::RBrace {
                        let lpos = self.pos();
                        let l = self.name()?;
                        if !seen.insert(l.clone()) {
                            return Err(ParseError::new(lpos, format!("duplicate label `{l}`")));
                        }
                        self.expect(Tok::Eq)?;
                        fields.push((l, self.raw_app()?));
                        if !self.eat(&Tok::Semi) {
                            break;
                        }
                    }
                    self.expect(Tok::RBrace)?;
                    Ok(Raw::Record(fields))
                } else {
                    let mut entries = Vec::new();
                    while *self.peek() != Tok::RBrace {
                        let k = self.raw_app()?;
                        self.expect(Tok::Arrow)?;
                        let v = self.raw_app()?;
                        entries.push((k, v));
                        if !self.eat(&Tok::Semi) {
                            break;
                        }
                    }
                    self.expect(Tok::RBrace)?;
                    Ok(Raw::Map(entries, pos))
                }
            }
            Tok::LBracket => {
                self.bump();
                let mut items = Vec::new();
                while *self.peek() != Tok::RBracket {
                    items.push(self.raw_app()?);
                    if !self.eat(&Tok::Semi) {
                        break;
                    }
                }
                self.expect(Tok::RBracket)?;
                Ok(Raw::List(items, pos))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.raw_app()?;
                let out = if self.eat(&Tok::Colon) {
                    Raw::Ascribe(Box::new(inner), self.ty()?)
                } else {
                    inner
                };
                self.expect(Tok::RParen)?;
                Ok(out)
            }
            _ => self.unexpected("a value or variable"),
        }
    }

    fn resolve_head(&self, ty: &Type, pos: Pos) -> PResult<Type> {
        let mut t = ty.clone();
        for _ in 0..64 {
            match t {
                Type::Alias(name) => match self.aliases.get(name.as_str()) {
                    Some(def) => t = def.clone(),
                    None => {
                        return Err(ParseError::new(pos, format!("unknown type alias `{name}`")))
                    }
                },
                other => return Ok(other),
            }
        }
        Err(ParseError::new(pos, "cyclic type alias"))
    }

    fn to_value(&self, raw: &Raw, expected: Option<&Type>) -> PResult<Value> {
        let here = self.pos();
        let exp = match expected {
            Some(t) => Some(self.resolve_head(t, here)?),
            None => None,
        };
        let mismatch = |what: &str| -> PResult<Value> {
            Err(ParseError::new(
                here,
                format!(
                    "{what} does not match the expected type {}",
                    expected.map(|t| t.to_string()).unwrap_or_default()
                ),
            ))
        };
        match raw {
            Raw::Var(x, pos) => Err(ParseError::new(
                *pos,
                format!("variable `{x}` cannot appear inside a literal value"),
            )),
            Raw::Nat(n) => match exp {
                None | Some(Type::Prim(PrimType::Nat)) => Ok(Value::Nat(n.clone())),
                Some(Type::Prim(PrimType::Int)) => Ok(Value::Int(BigInt::from(n.clone()))),
                Some(Type::Prim(PrimType::Mutez)) => match n.to_u64() {
                    Some(m) if m <= MUTEZ_MAX => Ok(Value::Mutez(m)),
                    _ => Err(ParseError::new(here, "mutez literal out of range (must be < 2^63)")),
                },
                _ => mismatch("integer literal"),
            },
            Raw::Neg(n) => match exp {
                None | Some(Type::Prim(PrimType::Int)) => Ok(Value::Int(n.clone())),
                _ => mismatch("negative literal"),
            },
            Raw::Str(s) => match exp {
                None | Some(Type::Prim(PrimType::String)) => Ok(Value::String(s.clone())),
                _ => mismatch("string literal"),
            },
            Raw::Ctor(c, None, pos) => match (c.as_str(), exp) {
                ("True", None | Some(Type::Prim(PrimType::Bool))) => Ok(Value::Bool(true)),
                ("False", None | Some(Type::Prim(PrimType::Bool))) => Ok(Value::Bool(false)),
                ("None", Some(Type::Option(_))) => match expected.and_then(|t| self.resolve_head(t, *pos).ok()) {
                    Some(Type::Option(elem)) => Ok(Value::None(*elem)),
                    _ => unreachable!("resolved above"),
                },
                ("None", None) => Err(ParseError::new(
                    *pos,
                    "`None` needs a type annotation, e.g. `(None : option nat)`",
                )),
                _ => mismatch(&format!("`{c}`")),
            },
            Raw::Ctor(c, Some(payload), pos) => match (c.as_str(), exp) {
                ("Some", None) => Ok(Value::Some(Box::new(self.to_value(payload, None)?))),
                ("Some", Some(Type::Option(elem))) => {
                    Ok(Value::Some(Box::new(self.to_value(payload, Some(&elem))?)))
                }
                ("Operation", None | Some(Type::Prim(PrimType::Operation))) => match &**payload {
                    Raw::Str(s) => Ok(Value::Operation(s.clone())),
                    _ => Err(ParseError::new(*pos, "`Operation` expects a string descriptor")),
                },
                (_, Some(Type::Variant(ctors))) => match ctors.iter().find(|(l, _)| l == c) {
                    Some((_, cty)) => Ok(Value::Variant {
                        ctor: c.clone(),
                        payload: Box::new(self.to_value(payload, Some(cty))?),
                        ty: expected.cloned().expect("expected type present"),
                    }),
                    None => Err(ParseError::new(
                        *pos,
                        format!("constructor `{c}` is not part of the annotated variant type"),
                    )),
                },
                (_, None) => Err(ParseError::new(
                    *pos,
                    format!("constructor `{c}` needs a type annotation, e.g. `({c} x : [{c} : ...])`"),
                )),
                _ => mismatch(&format!("constructor `{c}`")),
            },
            Raw::Record(fields) => {
                let ftys = match &exp {
                    None => None,
                    Some(Type::Record(f)) => Some(f),
                    Some(_) => return mismatch("record literal"),
                };
                let mut out = Vec::with_capacity(fields.len());
                for (l, r) in fields {
                    let fty = ftys.and_then(|f| f.iter().find(|(fl, _)| fl == l)).map(|(_, t)| t);
                    out.push((l.clone(), self.to_value(r, fty)?));
                }
                out.sort_by(|a, b| a.0.cmp(&b.0));
                Ok(Value::Record(out))
            }
            Raw::EmptyBraces => match exp {
                None | Some(Type::Record(_)) => Ok(Value::Record(Vec::new())),
                Some(Type::Map(k, v)) => Ok(Value::Map(BTreeMap::new(), *k, *v)),
                _ => mismatch("`{}`"),
            },
            Raw::Map(entries, pos) => match exp {
                Some(Type::Map(k, v)) => {
                    let mut out = BTreeMap::new();
                    for (rk, rv) in entries {
                        let key = self.to_value(rk, Some(&k))?;
                        let val = self.to_value(rv, Some(&v))?;
                        if out.insert(key, val).is_some() {
                            return Err(ParseError::new(*pos, "duplicate key in map literal"));
                        }
                    }
                    Ok(Value::Map(out, *k, *v))
                }
                None => Err(ParseError::new(
                    *pos,
                    "map literal needs a type annotation, e.g. `({\"a\" -> 1} : map string nat)`",
                )),
                _ => mismatch("map literal"),
            },
            Raw::List(items, pos) => match exp {
                Some(Type::List(elem)) => {
                    let vals = items
                        .iter()
                        .map(|r| self.to_value(r, Some(&elem)))
                        .collect::<PResult<Vec<_>>>()?;
                    Ok(Value::List(vals, *elem))
                }
                None => Err(ParseError::new(
                    *pos,
                    "list literal needs a type annotation, e.g. `([] : list nat)`",
                )),
                _ => mismatch("list literal"),
            },
            Raw::Ascribe(inner, ty) => self.to_value(inner, Some(ty)),
        }
    }
}
