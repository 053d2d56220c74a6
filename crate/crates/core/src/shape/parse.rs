//! Recursive-descent parser for the textual shape syntax.
//!
//! ```text
//! shape := atom ('@' atom)*
//! atom  := '[' ']' | '[' dim (',' dim)* ']' | ident
//! dim   := digits | '*' | ident | '(' op dim dim ')'
//! ```

use super::{DimExpr, DimOp, Shape, ShapeError};

/// A term parsed without knowing its sort. A bare identifier may be either a
/// shape variable or a dimension variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawTerm {
    Shape(Shape),
    Dim(DimExpr),
    Ident(String),
}

pub fn parse_shape(text: &str) -> Result<Shape, ShapeError> {
    let mut p = Parser::new(text);
    let shape = p.shape()?;
    p.finish()?;
    Ok(shape)
}

pub fn parse_dim(text: &str) -> Result<DimExpr, ShapeError> {
    let mut p = Parser::new(text);
    let dim = p.dim()?;
    p.finish()?;
    Ok(dim)
}

pub fn parse_term(text: &str) -> Result<RawTerm, ShapeError> {
    let mut p = Parser::new(text);
    p.skip_ws();
    let term = match p.peek() {
        Some(b'[') => RawTerm::Shape(p.shape()?),
        Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
            let name = p.ident()?;
            p.skip_ws();
            if p.peek() == Some(b'@') {
                RawTerm::Shape(p.append_tail(Shape::Var(name))?)
            } else {
                RawTerm::Ident(name)
            }
        }
        _ => RawTerm::Dim(p.dim()?),
    };
    p.finish()?;
    Ok(term)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            src: text.as_bytes(),
            pos: 0,
        }
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ShapeError> {
        Err(ShapeError::Syntax {
            offset: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ShapeError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.error(format!("expected `{}`", c as char))
        }
    }

    fn finish(&mut self) -> Result<(), ShapeError> {
        self.skip_ws();
        match self.peek() {
            None => Ok(()),
            Some(c) => self.error(format!("unexpected `{}`", c as char)),
        }
    }

    fn shape(&mut self) -> Result<Shape, ShapeError> {
        let first = self.atom()?;
        self.append_tail(first)
    }

    fn append_tail(&mut self, first: Shape) -> Result<Shape, ShapeError> {
        let mut parts = vec![first];
        while self.eat(b'@') {
            parts.push(self.atom()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Shape::Append(parts)
        })
    }

    fn atom(&mut self) -> Result<Shape, ShapeError> {
        self.skip_ws();
        match self.peek() {
            Some(b'[') => {
                self.pos += 1;
                let mut dims = Vec::new();
                if self.eat(b']') {
                    return Ok(Shape::Concrete(dims));
                }
                loop {
                    dims.push(self.dim()?);
                    if self.eat(b']') {
                        return Ok(Shape::Concrete(dims));
                    }
                    self.expect(b',')?;
                }
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => Ok(Shape::Var(self.ident()?)),
            _ => self.error("expected a shape"),
        }
    }

    fn dim(&mut self) -> Result<DimExpr, ShapeError> {
        self.skip_ws();
        match self.peek() {
            Some(b'*') => {
                self.pos += 1;
                Ok(DimExpr::Star)
            }
            Some(b'(') => {
                self.pos += 1;
                self.skip_ws();
                let op = match self.peek() {
                    Some(b'+') => DimOp::Add,
                    Some(b'-') => DimOp::Sub,
                    Some(b'*') => DimOp::Mul,
                    Some(b'/') => DimOp::Div,
                    _ => return self.error("expected one of `+ - * /`"),
                };
                self.pos += 1;
                let lhs = self.dim()?;
                let rhs = self.dim()?;
                self.expect(b')')?;
                Ok(DimExpr::op(op, lhs, rhs))
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
                let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                let value: u64 = match digits.parse() {
                    Ok(v) => v,
                    Err(_) => {
                        self.pos = start;
                        return self.error("dimension constant out of range");
                    }
                };
                if value == 0 {
                    self.pos = start;
                    return self.error("dimension constants must be positive");
                }
                Ok(DimExpr::Const(value))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => Ok(DimExpr::Var(self.ident()?)),
            _ => self.error("expected a dimension"),
        }
    }

    fn ident(&mut self) -> Result<String, ShapeError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.pos += 1,
            _ => return self.error("expected an identifier"),
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        Ok(String::from_utf8(self.src[start..self.pos].to_vec()).unwrap())
    }
}
