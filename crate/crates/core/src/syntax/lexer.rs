use std::fmt;

use crate::span::Span;

use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(u64),
    /// A float literal such as `0f` or `2.5f`, kept as written.
    Float(String),
    Fn,
    Underscore,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    Eq,
    At,
    Plus,
    Minus,
    Star,
    Slash,
    Arrow,
    Ellipsis,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(name) => return write!(f, "`{name}`"),
            Tok::Int(n) => return write!(f, "`{n}`"),
            Tok::Float(text) => return write!(f, "`{text}`"),
            Tok::Fn => "`fn`",
            Tok::Underscore => "`_`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::LBracket => "`[`",
            Tok::RBracket => "`]`",
            Tok::Comma => "`,`",
            Tok::Semi => "`;`",
            Tok::Colon => "`:`",
            Tok::Eq => "`=`",
            Tok::At => "`@`",
            Tok::Plus => "`+`",
            Tok::Minus => "`-`",
            Tok::Star => "`*`",
            Tok::Slash => "`/`",
            Tok::Arrow => "`->`",
            Tok::Ellipsis => "`...`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

fn ident_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_'
}

fn ident_continue(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'\''
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if bytes[i..].starts_with(b"//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = if ident_start(c) {
            while i < bytes.len() && ident_continue(bytes[i]) {
                i += 1;
            }
            match &text[start..i] {
                "fn" => Tok::Fn,
                "_" => Tok::Underscore,
                word => Tok::Ident(word.to_string()),
            }
        } else if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let mut float = false;
            if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                float = true;
            }
            if i < bytes.len() && bytes[i] == b'f' && !(i + 1 < bytes.len() && ident_continue(bytes[i + 1])) {
                i += 1;
                float = true;
            }
            if i < bytes.len() && ident_continue(bytes[i]) {
                return Err(ParseError::new(
                    Span::new(start, i + 1),
                    "malformed numeric literal",
                ));
            }
            if float {
                Tok::Float(text[start..i].to_string())
            } else {
                match text[start..i].parse() {
                    Ok(n) => Tok::Int(n),
                    Err(_) => {
                        return Err(ParseError::new(Span::new(start, i), "integer literal too large"))
                    }
                }
            }
        } else {
            let (tok, len) = match c {
                b'(' => (Tok::LParen, 1),
                b')' => (Tok::RParen, 1),
                b'{' => (Tok::LBrace, 1),
                b'}' => (Tok::RBrace, 1),
                b'[' => (Tok::LBracket, 1),
                b']' => (Tok::RBracket, 1),
                b',' => (Tok::Comma, 1),
                b';' => (Tok::Semi, 1),
                b':' => (Tok::Colon, 1),
                b'=' => (Tok::Eq, 1),
                b'@' => (Tok::At, 1),
                b'+' => (Tok::Plus, 1),
                b'-' if bytes.get(i + 1) == Some(&b'>') => (Tok::Arrow, 2),
                b'-' => (Tok::Minus, 1),
                b'*' => (Tok::Star, 1),
                b'/' => (Tok::Slash, 1),
                b'.' if bytes[i..].starts_with(b"...") => (Tok::Ellipsis, 3),
                _ => {
                    let ch = text[i..].chars().next().unwrap_or('?');
                    return Err(ParseError::new(
                        Span::new(i, i + ch.len_utf8()),
                        format!("unexpected character `{ch}`"),
                    ));
                }
            };
            i += len;
            tok
        };
        out.push(Token {
            tok,
            span: Span::new(start, i),
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span::new(text.len(), text.len()),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(text: &str) -> Vec<Tok> {
        tokenize(text).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn identifiers_and_literals() {
        assert_eq!(
            toks("s0' h_in 0f 12 _ fn"),
            vec![
                Tok::Ident("s0'".into()),
                Tok::Ident("h_in".into()),
                Tok::Float("0f".into()),
                Tok::Int(12),
                Tok::Underscore,
                Tok::Fn,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn punctuation_and_comments() {
        assert_eq!(
            toks("a -> b // note\n-inf ..."),
            vec![
                Tok::Ident("a".into()),
                Tok::Arrow,
                Tok::Ident("b".into()),
                Tok::Minus,
                Tok::Ident("inf".into()),
                Tok::Ellipsis,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn rejects_stray_characters() {
        let err = tokenize("a # b").unwrap_err();
        assert_eq!(err.span, Span::new(2, 3));
        assert!(tokenize("12abc").is_err());
    }
}
