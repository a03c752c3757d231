use std::fmt;

use num_bigint::{BigInt, BigUint};

use super::ParseError;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Nat(BigUint),
    /// A literal with a leading minus sign.
    Neg(BigInt),
    Str(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Semi,
    Colon,
    Eq,
    Bar,
    Comma,
    Dot,
    Arrow,
    Ge,
    Plus,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Nat(n) => format!("`{n}`"),
            Tok::Neg(n) => format!("`{n}`"),
            Tok::Str(_) => "string literal".to_owned(),
            Tok::LBrace => "`{`".to_owned(),
            Tok::RBrace => "`}`".to_owned(),
            Tok::LBracket => "`[`".to_owned(),
            Tok::RBracket => "`]`".to_owned(),
            Tok::LParen => "`(`".to_owned(),
            Tok::RParen => "`)`".to_owned(),
            Tok::Semi => "`;`".to_owned(),
            Tok::Colon => "`:`".to_owned(),
            Tok::Eq => "`=`".to_owned(),
            Tok::Bar => "`|`".to_owned(),
            Tok::Comma => "`,`".to_owned(),
            Tok::Dot => "`.`".to_owned(),
            Tok::Arrow => "`->`".to_owned(),
            Tok::Ge => "`>=`".to_owned(),
            Tok::Plus => "`+`".to_owned(),
            Tok::Eof => "end of input".to_owned(),
        }
    }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut line_start = 0;

    while i < bytes.len() {
        let c = bytes[i];
        let pos = Pos {
            line,
            col: i - line_start + 1,
        };
        match c {
            b'\n' => {
                i += 1;
                line += 1;
                line_start = i;
            }
            b' ' | b'\t' | b'\r' => i += 1,
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'{' => single(&mut toks, &mut i, Tok::LBrace, pos),
            b'}' => single(&mut toks, &mut i, Tok::RBrace, pos),
            b'[' => single(&mut toks, &mut i, Tok::LBracket, pos),
            b']' => single(&mut toks, &mut i, Tok::RBracket, pos),
            b'(' => single(&mut toks, &mut i, Tok::LParen, pos),
            b')' => single(&mut toks, &mut i, Tok::RParen, pos),
            b';' => single(&mut toks, &mut i, Tok::Semi, pos),
            b':' => single(&mut toks, &mut i, Tok::Colon, pos),
            b'=' => single(&mut toks, &mut i, Tok::Eq, pos),
            b'|' => single(&mut toks, &mut i, Tok::Bar, pos),
            b',' => single(&mut toks, &mut i, Tok::Comma, pos),
            b'.' => single(&mut toks, &mut i, Tok::Dot, pos),
            b'+' => single(&mut toks, &mut i, Tok::Plus, pos),
            b'>' if bytes.get(i + 1) == Some(&b'=') => {
                toks.push((Tok::Ge, pos));
                i += 2;
            }
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                toks.push((Tok::Arrow, pos));
                i += 2;
            }
            b'-' if bytes.get(i + 1).is_some_and(u8::is_ascii_digit) => {
                let start = i + 1;
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n: BigUint = src[start..i].parse().expect("digits");
                toks.push((Tok::Neg(-BigInt::from(n)), pos));
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i].is_ascii_alphabetic() || bytes[i] == b'_') {
                    return Err(ParseError::new(pos, "identifiers cannot start with a digit"));
                }
                toks.push((Tok::Nat(src[start..i].parse().expect("digits")), pos));
            }
            b'"' => {
                i += 1;
                let mut s = String::new();
                loop {
                    match bytes.get(i) {
                        None | Some(b'\n') => {
                            return Err(ParseError::new(pos, "unterminated string literal"))
                        }
                        Some(b'"') => {
                            i += 1;
                            break;
                        }
                        Some(b'\\') => {
                            match bytes.get(i + 1) {
                                Some(b'"') => s.push('"'),
                                Some(b'\\') => s.push('\\'),
                                _ => {
                                    let at = Pos {
                                        line,
                                        col: i - line_start + 1,
                                    };
                                    return Err(ParseError::new(
                                        at,
                                        "invalid escape sequence (only \\\" and \\\\ are allowed)",
                                    ));
                                }
                            }
                            i += 2;
                        }
                        Some(&b) if b.is_ascii() && !b.is_ascii_control() => {
                            s.push(b as char);
                            i += 1;
                        }
                        Some(_) => {
                            let at = Pos {
                                line,
                                col: i - line_start + 1,
                            };
                            return Err(ParseError::new(
                                at,
                                "string literals may only contain printable ASCII",
                            ));
                        }
                    }
                }
                toks.push((Tok::Str(s), pos));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                toks.push((Tok::Ident(src[start..i].to_owned()), pos));
            }
            _ => {
                let shown = src[i..].chars().next().unwrap_or('?');
                return Err(ParseError::new(pos, format!("unexpected character {shown:?}")));
            }
        }
    }
    let eof = Pos {
        line,
        col: bytes.len() - line_start + 1,
    };
    toks.push((Tok::Eof, eof));
    Ok(toks)
}

fn single(toks: &mut Vec<(Tok, Pos)>, i: &mut usize, tok: Tok, pos: Pos) {
    toks.push((tok, pos));
    *i += 1;
}
