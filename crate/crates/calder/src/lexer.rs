//! Hand-rolled lexer for the actor-language subset.

use crate::diag::{Diagnostic, Pos};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    // punctuation
    LParen,
    RParen,
    LBracket,
    RBracket,
    Colon,
    Semi,
    Comma,
    Dot,
    DotDot,
    Assign,  // :=
    Arrow,   // -->
    FlowsTo, // ==>
    At,
    // operators
    Plus,
    Minus,
    Star,
    Slash,
    Shl,
    Shr,
    Amp,
    Pipe,
    Caret,
    Lt,
    Le,
    Gt,
    Ge,
    Eq, // =
    Ne, // !=
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(v) => format!("integer `{v}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::DotDot => "`..`".into(),
            Tok::Assign => "`:=`".into(),
            Tok::Arrow => "`-->`".into(),
            Tok::FlowsTo => "`==>`".into(),
            Tok::At => "`@`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Shl => "`<<`".into(),
            Tok::Shr => "`>>`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Caret => "`^`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Ne => "`!=`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub fn lex(file: u32, src: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! pos {
        () => {
            Pos::new(file, line, col)
        };
    }

    while i < bytes.len() {
        let c = bytes[i] as char;
        // whitespace
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        // comments
        if c == '/' && i + 1 < bytes.len() {
            if bytes[i + 1] == b'/' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            if bytes[i + 1] == b'*' {
                let start = pos!();
                i += 2;
                col += 2;
                loop {
                    if i + 1 >= bytes.len() {
                        return Err(Diagnostic::at(start, "unterminated block comment"));
                    }
                    if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                        i += 2;
                        col += 2;
                        break;
                    }
                    if bytes[i] == b'\n' {
                        line += 1;
                        col = 1;
                    } else {
                        col += 1;
                    }
                    i += 1;
                }
                continue;
            }
        }
        let p = pos!();
        // identifiers / keywords
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() {
                let ch = bytes[i] as char;
                if ch.is_ascii_alphanumeric() || ch == '_' {
                    i += 1;
                    col += 1;
                } else {
                    break;
                }
            }
            out.push(Token {
                tok: Tok::Ident(src[start..i].to_string()),
                pos: p,
            });
            continue;
        }
        // numbers (decimal or 0x hex)
        if c.is_ascii_digit() {
            let start = i;
            let mut hex = false;
            if c == '0' && i + 1 < bytes.len() && (bytes[i + 1] == b'x' || bytes[i + 1] == b'X') {
                hex = true;
                i += 2;
                col += 2;
            }
            while i < bytes.len() {
                let ch = bytes[i] as char;
                let ok = if hex {
                    ch.is_ascii_hexdigit()
                } else {
                    ch.is_ascii_digit()
                };
                if ok {
                    i += 1;
                    col += 1;
                } else {
                    break;
                }
            }
            let text = &src[start..i];
            let value = if hex {
                u64::from_str_radix(&text[2..], 16).ok().map(|v| v as i64)
            } else {
                text.parse::<i64>().ok()
            };
            match value {
                Some(v) => out.push(Token {
                    tok: Tok::Int(v),
                    pos: p,
                }),
                None => {
                    return Err(Diagnostic::at(
                        p,
                        format!("integer literal `{text}` out of range"),
                    ))
                }
            }
            continue;
        }
        // multi-char operators first
        let rest = &src[i..];
        let (tok, len) = if rest.starts_with("==>") {
            (Tok::FlowsTo, 3)
        } else if rest.starts_with("-->") {
            (Tok::Arrow, 3)
        } else if rest.starts_with(":=") {
            (Tok::Assign, 2)
        } else if rest.starts_with("..") {
            (Tok::DotDot, 2)
        } else if rest.starts_with("<<") {
            (Tok::Shl, 2)
        } else if rest.starts_with(">>") {
            (Tok::Shr, 2)
        } else if rest.starts_with("<=") {
            (Tok::Le, 2)
        } else if rest.starts_with(">=") {
            (Tok::Ge, 2)
        } else if rest.starts_with("!=") {
            (Tok::Ne, 2)
        } else {
            let single = match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                ':' => Tok::Colon,
                ';' => Tok::Semi,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                '@' => Tok::At,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '&' => Tok::Amp,
                '|' => Tok::Pipe,
                '^' => Tok::Caret,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                '=' => Tok::Eq,
                _ => {
                    return Err(Diagnostic::at(p, format!("unexpected character `{c}`")));
                }
            };
            (single, 1)
        };
        out.push(Token { tok, pos: p });
        i += len;
        col += len as u32;
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: pos!(),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_operators_and_idents() {
        let toks = lex(0, "a := b ==> OUT:[x] --> 0x1F .. 42").unwrap();
        let kinds: Vec<Tok> = toks.into_iter().map(|t| t.tok).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::Ident("a".into()),
                Tok::Assign,
                Tok::Ident("b".into()),
                Tok::FlowsTo,
                Tok::Ident("OUT".into()),
                Tok::Colon,
                Tok::LBracket,
                Tok::Ident("x".into()),
                Tok::RBracket,
                Tok::Arrow,
                Tok::Int(31),
                Tok::DotDot,
                Tok::Int(42),
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn tracks_positions_across_lines() {
        let toks = lex(0, "a\n  b").unwrap();
        assert_eq!(toks[0].pos, Pos::new(0, 1, 1));
        assert_eq!(toks[1].pos, Pos::new(0, 2, 3));
    }

    #[test]
    fn rejects_bad_character() {
        let err = lex(0, "a $ b").unwrap_err();
        assert!(err.message.contains("unexpected character"));
    }

    #[test]
    fn comments_are_skipped() {
        let toks = lex(0, "a // line\n/* block\n still */ b").unwrap();
        let kinds: Vec<Tok> = toks.into_iter().map(|t| t.tok).collect();
        assert_eq!(
            kinds,
            vec![Tok::Ident("a".into()), Tok::Ident("b".into()), Tok::Eof]
        );
    }
}
