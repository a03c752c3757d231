//! Pretty-printer. Output re-parses to a structurally equal AST.

use std::fmt::Write;

use super::{Arg, BinOp, Branch, FunName, Instruction, Lhs, Program, Rhs, Type, Value};

pub fn print_type(t: &Type) -> String {
    let mut out = String::new();
    write_type(&mut out, t);
    out
}

fn write_type(out: &mut String, t: &Type) {
    match t {
        Type::Prim(p) => out.push_str(p.name()),
        Type::Alias(a) => out.push_str(a.as_str()),
        Type::Record(fields) => {
            out.push('{');
            for (i, (l, ft)) in fields.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                let _ = write!(out, "{l} : ");
                write_type(out, ft);
            }
            out.push('}');
        }
        Type::Variant(ctors) => {
            out.push('[');
            for (i, (c, ct)) in ctors.iter().enumerate() {
                if i > 0 {
                    out.push_str(" | ");
                }
                let _ = write!(out, "{c} : ");
                write_type(out, ct);
            }
            out.push(']');
        }
        Type::List(e) => {
            out.push_str("list ");
            write_type_atom(out, e);
        }
        Type::Option(e) => {
            out.push_str("option ");
            write_type_atom(out, e);
        }
        Type::Map(k, v) => {
            out.push_str("map ");
            write_type_atom(out, k);
            out.push(' ');
            write_type_atom(out, v);
        }
    }
}

fn write_type_atom(out: &mut String, t: &Type) {
    if matches!(t, Type::List(_) | Type::Option(_) | Type::Map(..)) {
        out.push('(');
        write_type(out, t);
        out.push(')');
    } else {
        write_type(out, t);
    }
}

/// Prints a value in literal syntax; every literal carries enough
/// annotations to be re-read without an expected type.
pub fn print_value(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, false);
    out
}

fn write_string(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c => out.push(c),
        }
    }
    out.push('"');
}

fn write_value(out: &mut String, v: &Value, atomic: bool) {
    match v {
        Value::Nat(n) => {
            let _ = write!(out, "{n}");
        }
        Value::Int(n) if n.sign() == num_bigint::Sign::Minus => {
            let _ = write!(out, "{n}");
        }
        Value::Int(n) => {
            let _ = write!(out, "({n} : int)");
        }
        Value::Mutez(n) => {
            let _ = write!(out, "({n} : mutez)");
        }
        Value::String(s) => write_string(out, s),
        Value::Bool(b) => out.push_str(if *b { "True" } else { "False" }),
        Value::Record(fields) => {
            out.push('{');
            for (i, (l, fv)) in fields.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                let _ = write!(out, "{l} = ");
                write_value(out, fv, false);
            }
            out.push('}');
        }
        Value::Variant { ctor, payload, ty } => {
            let _ = write!(out, "({ctor} ");
            write_value(out, payload, true);
            out.push_str(" : ");
            write_type(out, ty);
            out.push(')');
        }
        Value::List(items, t) => {
            out.push_str("([");
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                write_value(out, x, false);
            }
            out.push_str("] : list ");
            write_type_atom(out, t);
            out.push(')');
        }
        Value::Map(entries, k, val) => {
            out.push_str("({");
            for (i, (kv, vv)) in entries.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                write_value(out, kv, false);
                out.push_str(" -> ");
                write_value(out, vv, false);
            }
            out.push_str("} : map ");
            write_type_atom(out, k);
            out.push(' ');
            write_type_atom(out, val);
            out.push(')');
        }
        Value::None(t) => {
            out.push_str("(None : option ");
            write_type_atom(out, t);
            out.push(')');
        }
        Value::Some(inner) => {
            if atomic {
                out.push('(');
            }
            out.push_str("Some ");
            write_value(out, inner, true);
            if atomic {
                out.push(')');
            }
        }
        Value::Operation(d) => {
            if atomic {
                out.push('(');
            }
            out.push_str("Operation ");
            write_string(out, d);
            if atomic {
                out.push(')');
            }
        }
    }
}

fn write_fields(out: &mut String, fields: &[(super::Label, super::Label)]) {
    out.push('{');
    for (i, (l, x)) in fields.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        let _ = write!(out, "{l} = {x}");
    }
    out.push('}');
}

fn write_arg(out: &mut String, a: &Arg) {
    match a {
        Arg::Var(x) => out.push_str(x.as_str()),
        Arg::Val(v) => write_value(out, v, true),
        Arg::Record(fields) => write_fields(out, fields),
    }
}

pub fn print_rhs(r: &Rhs) -> String {
    let mut out = String::new();
    write_rhs(&mut out, r);
    out
}

fn write_rhs(out: &mut String, r: &Rhs) {
    match r {
        Rhs::Arg(a) => write_arg(out, a),
        Rhs::Apply(f, a) => {
            match f {
                FunName::Dup => out.push_str("dup "),
                FunName::AssertSome => out.push_str("assert_some "),
                FunName::User(name) => {
                    let _ = write!(out, "{name} ");
                }
            }
            write_arg(out, a);
        }
        Rhs::Proj(x, l) => {
            let _ = write!(out, "{x}.{l}");
        }
        Rhs::Update(x, fields) => {
            let _ = write!(out, "{{{x} with ");
            for (i, (l, y)) in fields.iter().enumerate() {
                if i > 0 {
                    out.push_str("; ");
                }
                let _ = write!(out, "{l} = {y}");
            }
            out.push('}');
        }
        Rhs::Match(x, branches) => {
            let _ = write!(out, "match {x} with");
            for b in branches {
                let _ = write!(out, " | {} {} -> ", b.ctor, b.binder);
                write_rhs(out, &b.body);
            }
            out.push_str(" end");
        }
        Rhs::Construct(c, a, None) => {
            let _ = write!(out, "{c} ");
            write_arg(out, a);
        }
        Rhs::Construct(c, a, Some(t)) => {
            let _ = write!(out, "({c} ");
            write_arg(out, a);
            out.push_str(" : ");
            write_type(out, t);
            out.push(')');
        }
        Rhs::BinOp(BinOp::Add, a, b) => {
            let _ = write!(out, "{a} + {b}");
        }
        Rhs::BinOp(BinOp::Ge, a, b) => {
            let _ = write!(out, "{a} >= {b}");
        }
        Rhs::BinOp(BinOp::MapGet, m, k) => {
            let _ = write!(out, "{m}[{k}]");
        }
        Rhs::MapUpdate(m, k, v) => {
            let _ = write!(out, "update {m} {k} {v}");
        }
        Rhs::Amount => out.push_str("amount"),
    }
}

fn write_lhs(out: &mut String, l: &Lhs) {
    match l {
        Lhs::Var(x) => out.push_str(x.as_str()),
        Lhs::Record(fields) => write_fields(out, fields),
    }
}

/// One-line rendering of an instruction; match bodies are elided.
pub fn print_instruction_head(i: &Instruction) -> String {
    let mut out = String::new();
    match i {
        Instruction::Noop => out.push_str("noop"),
        Instruction::Seq(..) => out.push_str("<seq>"),
        Instruction::Assign(l, r) => {
            write_lhs(&mut out, l);
            out.push_str(" = ");
            write_rhs(&mut out, r);
        }
        Instruction::Drop(x) => {
            let _ = write!(out, "drop {x}");
        }
        Instruction::Match(x, _) => {
            let _ = write!(out, "match {x} with");
        }
        Instruction::Failwith(a) => {
            out.push_str("failwith ");
            write_arg(&mut out, a);
        }
    }
    out
}

fn indent(out: &mut String, n: usize) {
    out.extend(std::iter::repeat_n(' ', n));
}

fn write_block(out: &mut String, body: &Instruction, depth: usize) {
    let items = body.flatten();
    for (k, i) in items.iter().enumerate() {
        indent(out, depth);
        match i {
            Instruction::Match(x, branches) => write_match(out, x, branches, depth),
            other => out.push_str(&print_instruction_head(other)),
        }
        if k + 1 < items.len() {
            out.push(';');
        }
        if k + 1 < items.len() {
            out.push('\n');
        }
    }
}

fn write_match(out: &mut String, x: &super::Label, branches: &[Branch<Instruction>], depth: usize) {
    let _ = writeln!(out, "match {x} with");
    for b in branches {
        indent(out, depth);
        let _ = writeln!(out, "| {} {} ->", b.ctor, b.binder);
        write_block(out, &b.body, depth + 4);
        out.push('\n');
    }
    indent(out, depth);
    out.push_str("end");
}

/// Prints a whole program: aliases first, then functions, separated by
/// blank lines, with no trailing newline.
pub fn print_albert(p: &Program) -> String {
    let mut items = Vec::new();
    for (name, t) in &p.type_aliases {
        items.push(format!("type {name} = {}", print_type(t)));
    }
    for f in &p.functions {
        let mut s = format!(
            "def {} : {} -> {} =\n",
            f.name,
            print_type(&f.input),
            print_type(&f.output)
        );
        write_block(&mut s, &f.body, 2);
        items.push(s);
    }
    items.join("\n\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_program, parse_value, Function, Label};

    #[test]
    fn smallest_program() {
        let p = Program {
            type_aliases: vec![],
            functions: vec![Function {
                name: Label::from("f"),
                input: Type::unit(),
                output: Type::unit(),
                body: Instruction::Noop,
            }],
        };
        assert_eq!(print_albert(&p), "def f : {} -> {} =\n  noop");
    }

    #[test]
    fn values_are_self_describing() {
        for src in [
            "(5 : int)",
            "-3",
            "(7 : mutez)",
            "([] : list nat)",
            "({\"no\" -> 0; \"yes\" -> 0} : map string nat)",
            "(None : option (list nat))",
            "Some (Some 1)",
            "{a = \"x\\\"y\"; b = (A {} : [A : {} | B : nat])}",
            "Operation \"transfer\"",
        ] {
            let v = parse_value(src, None, &[]).unwrap();
            assert_eq!(print_value(&v), src);
            assert_eq!(parse_value(&print_value(&v), None, &[]).unwrap(), v);
        }
    }

    #[test]
    fn program_round_trip() {
        let src = "type s = {a : nat; b : option nat}\n\n\
                   def f : {x : s} -> {y : nat} =\n  \
                   {a = a; b = b} = x;\n  \
                   match b with\n  \
                   | None n ->\n      drop n\n  \
                   | Some s ->\n      drop s\n  \
                   end;\n  \
                   y = a";
        let p = parse_program(src).unwrap();
        assert_eq!(print_albert(&p), src);
    }
}
