use super::{MichInstr, MichType, MichValue, Script};

pub fn print_mich_type(t: &MichType) -> String {
    match t {
        MichType::Unit => "unit".into(),
        MichType::Nat => "nat".into(),
        MichType::Int => "int".into(),
        MichType::String => "string".into(),
        MichType::Mutez => "mutez".into(),
        MichType::Bool => "bool".into(),
        MichType::Operation => "operation".into(),
        MichType::Pair(a, b) => format!("pair {} {}", ty_atom(a), ty_atom(b)),
        MichType::Or(a, b) => format!("or {} {}", ty_atom(a), ty_atom(b)),
        MichType::Option(a) => format!("option {}", ty_atom(a)),
        MichType::List(a) => format!("list {}", ty_atom(a)),
        MichType::Map(k, v) => format!("map {} {}", ty_atom(k), ty_atom(v)),
    }
}

fn ty_atom(t: &MichType) -> String {
    let s = print_mich_type(t);
    if s.contains(' ') {
        format!("({s})")
    } else {
        s
    }
}

fn string_lit(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn print_mich_value(v: &MichValue) -> String {
    match v {
        MichValue::Unit => "Unit".into(),
        MichValue::Nat(n) => n.to_string(),
        MichValue::Int(n) => n.to_string(),
        MichValue::Mutez(n) => n.to_string(),
        MichValue::String(s) => string_lit(s),
        MichValue::Bool(b) => if *b { "True" } else { "False" }.into(),
        MichValue::Pair(a, b) => format!("(Pair {} {})", print_mich_value(a), print_mich_value(b)),
        MichValue::Left(a) => format!("(Left {})", print_mich_value(a)),
        MichValue::Right(a) => format!("(Right {})", print_mich_value(a)),
        MichValue::Some(a) => format!("(Some {})", print_mich_value(a)),
        MichValue::None => "None".into(),
        MichValue::List(xs) if xs.is_empty() => "{}".into(),
        MichValue::List(xs) => {
            let items: Vec<String> = xs.iter().map(print_mich_value).collect();
            format!("{{ {} }}", items.join(" ; "))
        }
        MichValue::Map(m) if m.is_empty() => "{}".into(),
        MichValue::Map(m) => {
            let items: Vec<String> = m
                .iter()
                .map(|(k, v)| format!("Elt {} {}", print_mich_value(k), print_mich_value(v)))
                .collect();
            format!("{{ {} }}", items.join(" ; "))
        }
        MichValue::Operation(d) => format!("<operation {}>", string_lit(d)),
    }
}

/// Single-line rendering; nested sequences are printed inline.
pub fn print_instr(i: &MichInstr) -> String {
    let mut out = String::new();
    write_instr(&mut out, i, None);
    out
}

/// Prints a sequence at column `indent`, breaking lines when it does not
/// fit in a short single line.
pub fn print_seq(code: &[MichInstr], indent: usize) -> String {
    let mut out = String::new();
    write_seq(&mut out, code, Some(indent));
    out
}

fn is_flat(code: &[MichInstr]) -> bool {
    code.iter().all(|i| {
        !matches!(
            i,
            MichInstr::IfLeft(..) | MichInstr::If(..) | MichInstr::IfNone(..) | MichInstr::Seq(_)
        )
    })
}

fn write_seq(out: &mut String, code: &[MichInstr], indent: Option<usize>) {
    if code.is_empty() {
        out.push_str("{}");
        return;
    }
    let inline = {
        let items: Vec<String> = code.iter().map(print_instr).collect();
        format!("{{ {} }}", items.join(" ; "))
    };
    let Some(col) = indent else {
        out.push_str(&inline);
        return;
    };
    if is_flat(code) && inline.len() + col <= 80 {
        out.push_str(&inline);
        return;
    }
    out.push_str("{ ");
    for (k, i) in code.iter().enumerate() {
        if k > 0 {
            out.push_str(" ;\n");
            out.push_str(&" ".repeat(col + 2));
        }
        write_instr(out, i, Some(col + 2));
    }
    out.push_str(" }");
}

fn write_instr(out: &mut String, i: &MichInstr, indent: Option<usize>) {
    let branches = |out: &mut String, name: &str, a: &[MichInstr], b: &[MichInstr]| {
        out.push_str(name);
        match indent {
            None => {
                out.push(' ');
                write_seq(out, a, None);
                out.push(' ');
                write_seq(out, b, None);
            }
            Some(col) => {
                for arm in [a, b] {
                    out.push('\n');
                    out.push_str(&" ".repeat(col + 2));
                    write_seq(out, arm, Some(col + 2));
                }
            }
        }
    };
    match i {
        MichInstr::Push(t, v) => {
            out.push_str(&format!("PUSH {} {}", ty_atom(t), print_mich_value(v)))
        }
        MichInstr::Unit => out.push_str("UNIT"),
        MichInstr::Pair => out.push_str("PAIR"),
        MichInstr::Car => out.push_str("CAR"),
        MichInstr::Cdr => out.push_str("CDR"),
        MichInstr::Unpair => out.push_str("UNPAIR"),
        MichInstr::Dup => out.push_str("DUP"),
        MichInstr::Drop => out.push_str("DROP"),
        MichInstr::Swap => out.push_str("SWAP"),
        MichInstr::Dig(n) => out.push_str(&format!("DIG {n}")),
        MichInstr::Dug(n) => out.push_str(&format!("DUG {n}")),
        MichInstr::Left(t) => out.push_str(&format!("LEFT {}", ty_atom(t))),
        MichInstr::Right(t) => out.push_str(&format!("RIGHT {}", ty_atom(t))),
        MichInstr::IfLeft(a, b) => branches(out, "IF_LEFT", a, b),
        MichInstr::If(a, b) => branches(out, "IF", a, b),
        MichInstr::IfNone(a, b) => branches(out, "IF_NONE", a, b),
        MichInstr::Some => out.push_str("SOME"),
        MichInstr::None(t) => out.push_str(&format!("NONE {}", ty_atom(t))),
        MichInstr::Nil(t) => out.push_str(&format!("NIL {}", ty_atom(t))),
        MichInstr::Cons => out.push_str("CONS"),
        MichInstr::Add => out.push_str("ADD"),
        MichInstr::Compare => out.push_str("COMPARE"),
        MichInstr::Ge => out.push_str("GE"),
        MichInstr::Get => out.push_str("GET"),
        MichInstr::Update => out.push_str("UPDATE"),
        MichInstr::Amount => out.push_str("AMOUNT"),
        MichInstr::Failwith => out.push_str("FAILWITH"),
        MichInstr::Seq(body) => write_seq(out, body, indent),
    }
}

/// `parameter <ty>;\nstorage <ty>;\ncode { ... };` followed by a newline.
pub fn print_script(s: &Script) -> String {
    format!(
        "parameter {};\nstorage {};\ncode {};\n",
        ty_atom(&s.parameter),
        ty_atom(&s.storage),
        print_seq(&s.code, 5)
    )
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;

    #[test]
    fn identity_code() {
        let s = Script {
            parameter: MichType::Unit,
            storage: MichType::Nat,
            code: vec![MichInstr::Cdr, MichInstr::Nil(MichType::Operation), MichInstr::Pair],
        };
        assert_eq!(
            print_script(&s),
            "parameter unit;\nstorage nat;\ncode { CDR ; NIL operation ; PAIR };\n"
        );
    }

    #[test]
    fn push_map_literal() {
        let mut m = BTreeMap::new();
        m.insert(MichValue::String("yes".into()), MichValue::Nat(0u8.into()));
        m.insert(MichValue::String("no".into()), MichValue::Nat(0u8.into()));
        let i = MichInstr::Push(
            MichType::map(MichType::String, MichType::Nat),
            MichValue::Map(m),
        );
        assert_eq!(
            print_instr(&i),
            "PUSH (map string nat) { Elt \"no\" 0 ; Elt \"yes\" 0 }"
        );
    }

    #[test]
    fn storage_type_is_parenthesized() {
        let t = MichType::pair(MichType::Mutez, MichType::map(MichType::String, MichType::Nat));
        assert_eq!(ty_atom(&t), "(pair mutez (map string nat))");
    }
}
