//! Tokenizer shared by the contract and invariant parsers.

use std::fmt;

use num_bigint::BigInt;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
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
pub enum Tok {
    Ident(String),
    Int(BigInt),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    Caret,
    Assign,
    Plus,
    Minus,
    Star,
    Slash,
    /// Overflow-checked arithmetic: `+!`, `-!`, `*!`.
    PlusChecked,
    MinusChecked,
    StarChecked,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(name) => return write!(f, "identifier `{name}`"),
            Tok::Int(v) => return write!(f, "integer `{v}`"),
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Caret => "^",
            Tok::Assign => "=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::PlusChecked => "+!",
            Tok::MinusChecked => "-!",
            Tok::StarChecked => "*!",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::AndAnd => "&&",
            Tok::Eof => "end of input",
        };
        write!(f, "`{s}`")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LexError {
    /// A run of operator characters that is not part of the language.
    UnknownOperator { op: String, pos: Pos },
    UnexpectedChar { ch: char, pos: Pos },
}

/// Splits `src` into tokens. `#` starts a comment running to end of line.
pub fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                pos,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            let digits: String = chars[start..i].iter().collect();
            let value = digits.parse::<BigInt>().expect("ascii digits parse");
            out.push(Token {
                tok: Tok::Int(value),
                pos,
            });
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            ':' => Some(Tok::Colon),
            '^' => Some(Tok::Caret),
            _ => None,
        };
        if let Some(tok) = single {
            bump!();
            out.push(Token { tok, pos });
            continue;
        }
        if "+-*/=!<>&|%".contains(c) {
            let start = i;
            while i < chars.len() && "+-*/=!<>&|%".contains(chars[i]) {
                bump!();
            }
            let run: String = chars[start..i].iter().collect();
            let mut toks = split_operators(&run).ok_or_else(|| LexError::UnknownOperator {
                op: run.clone(),
                pos,
            })?;
            let mut p = pos;
            for tok in toks.drain(..) {
                let width = tok_width(&tok);
                out.push(Token { tok, pos: p });
                p.col += width;
            }
            continue;
        }
        return Err(LexError::UnexpectedChar { ch: c, pos });
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
    });
    Ok(out)
}

fn tok_width(tok: &Tok) -> usize {
    match tok {
        Tok::Plus | Tok::Minus | Tok::Star | Tok::Slash | Tok::Assign | Tok::Lt | Tok::Gt => 1,
        _ => 2,
    }
}

/// Greedy split of an operator run such as `==` or `-!` or `=-`.
/// Returns `None` if any piece is not a known operator.
fn split_operators(run: &str) -> Option<Vec<Tok>> {
    const TABLE: &[(&str, Tok)] = &[
        ("+!", Tok::PlusChecked),
        ("-!", Tok::MinusChecked),
        ("*!", Tok::StarChecked),
        ("==", Tok::EqEq),
        ("!=", Tok::NotEq),
        ("<=", Tok::Le),
        (">=", Tok::Ge),
        ("&&", Tok::AndAnd),
        ("+", Tok::Plus),
        ("-", Tok::Minus),
        ("*", Tok::Star),
        ("/", Tok::Slash),
        ("=", Tok::Assign),
        ("<", Tok::Lt),
        (">", Tok::Gt),
    ];
    let mut rest = run;
    let mut out = Vec::new();
    'outer: while !rest.is_empty() {
        for (text, tok) in TABLE {
            if let Some(tail) = rest.strip_prefix(text) {
                // `+!=` would otherwise lex as `+!` `=`.
                if text.ends_with('!') && tail.starts_with('=') {
                    continue;
                }
                out.push(tok.clone());
                rest = tail;
                continue 'outer;
            }
        }
        return None;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn operators_and_comments() {
        assert_eq!(
            toks("a==b && c!=0 # trailing\nx +! 1"),
            vec![
                Tok::Ident("a".into()),
                Tok::EqEq,
                Tok::Ident("b".into()),
                Tok::AndAnd,
                Tok::Ident("c".into()),
                Tok::NotEq,
                Tok::Int(0.into()),
                Tok::Ident("x".into()),
                Tok::PlusChecked,
                Tok::Int(1.into()),
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn unknown_operator_is_reported() {
        let err = tokenize("a % b").unwrap_err();
        assert!(matches!(err, LexError::UnknownOperator { ref op, .. } if op == "%"));
        assert!(matches!(
            tokenize("a || b").unwrap_err(),
            LexError::UnknownOperator { .. }
        ));
    }

    #[test]
    fn positions_are_one_based() {
        let t = tokenize("x\n  y").unwrap();
        assert_eq!(t[1].pos, Pos { line: 2, col: 3 });
    }
}
