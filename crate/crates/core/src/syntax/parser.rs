use std::collections::HashSet;

use crate::shape::{parse_shape, validate_shape, Shape, ShapeError};
use crate::span::Span;
use crate::types::{Elem, Type};

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;

pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        text,
        tokens,
        pos: 0,
    };
    let program = p.program()?;
    check_unique_names(&program)?;
    Ok(program)
}

/// Parses a single expression, as used in tests and tooling.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        text,
        tokens: tokenize(text)?,
        pos: 0,
    };
    let e = p.tuple_expr()?;
    p.expect(Tok::Eof)?;
    Ok(e)
}

/// Parses a type in signature notation: `(t s @ [d1, d2], t s) -> t s`.
/// A name followed by a shape is a tensor; a lone name is a type variable.
pub fn parse_signature(text: &str) -> Result<Type, ParseError> {
    let mut p = Parser {
        text,
        tokens: tokenize(text)?,
        pos: 0,
    };
    let t = p.sig_type()?;
    p.expect(Tok::Eof)?;
    Ok(t)
}

fn check_unique_names(program: &Program) -> Result<(), ParseError> {
    let mut seen = HashSet::new();
    for item in &program.items {
        for id in item.bound_names() {
            if !seen.insert(id.name.as_str()) {
                return Err(ParseError::new(
                    id.span,
                    format!("duplicate top-level binding `{}`", id.name),
                ));
            }
        }
    }
    Ok(())
}

struct Parser<'a> {
    text: &'a str,
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: Tok) -> bool {
        if *self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error_here(&self, expected: &str) -> ParseError {
        let tok = self.peek();
        let message = match tok {
            Tok::Ellipsis => "`...` is not part of the language".to_string(),
            _ => format!("expected {expected}, found {tok}"),
        };
        ParseError::new(self.span(), message)
    }

    fn expect(&mut self, tok: Tok) -> Result<Span, ParseError> {
        if *self.peek() == tok {
            Ok(self.bump().span)
        } else {
            Err(self.error_here(&tok.to_string()))
        }
    }

    fn ident(&mut self) -> Result<Ident, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.bump().span;
                Ok(Ident { name, span })
            }
            _ => Err(self.error_here("an identifier")),
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut items = Vec::new();
        while *self.peek() != Tok::Eof {
            if self.eat(Tok::Semi) {
                continue;
            }
            let start = self.span();
            let pattern = if self.at_pattern() {
                let p = self.pattern()?;
                self.expect(Tok::Eq)?;
                Some(p)
            } else {
                None
            };
            let expr = self.tuple_expr()?;
            let span = start.to(expr.span);
            items.push(Item {
                pattern,
                expr,
                span,
            });
        }
        Ok(Program { items })
    }

    /// Lookahead for `name, _, name =`.
    fn at_pattern(&self) -> bool {
        let mut k = 0;
        loop {
            if !matches!(self.peek_at(k), Tok::Ident(_) | Tok::Underscore) {
                return false;
            }
            match self.peek_at(k + 1) {
                Tok::Eq => return true,
                Tok::Comma => k += 2,
                _ => return false,
            }
        }
    }

    fn pattern(&mut self) -> Result<Pattern, ParseError> {
        let start = self.span();
        let mut items = Vec::new();
        let mut seen = HashSet::new();
        loop {
            match self.peek().clone() {
                Tok::Underscore => items.push(PatItem::Wildcard(self.bump().span)),
                Tok::Ident(_) => {
                    let id = self.ident()?;
                    if !seen.insert(id.name.clone()) {
                        return Err(ParseError::new(
                            id.span,
                            format!("`{}` is bound twice in this pattern", id.name),
                        ));
                    }
                    items.push(PatItem::Name(id));
                }
                _ => return Err(self.error_here("a name or `_`")),
            }
            if !self.eat(Tok::Comma) {
                break;
            }
        }
        Ok(Pattern {
            items,
            span: start.to(self.prev_span()),
        })
    }

    /// An expression, or a comma-separated tuple without parentheses.
    fn tuple_expr(&mut self) -> Result<Expr, ParseError> {
        let first = self.expr()?;
        if *self.peek() != Tok::Comma {
            return Ok(first);
        }
        let mut parts = vec![first];
        while self.eat(Tok::Comma) {
            parts.push(self.expr()?);
        }
        let span = parts[0].span.to(parts[parts.len() - 1].span);
        Ok(Expr::new(ExprKind::Tuple(parts), span))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.binary(1)
    }

    fn binary_op(&self) -> Option<BinOp> {
        let op = match self.peek() {
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            _ => return None,
        };
        Some(op)
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = if min_prec >= 2 {
            self.primary()?
        } else {
            self.binary(min_prec + 1)?
        };
        while let Some(op) = self.binary_op().filter(|op| op.precedence() == min_prec) {
            self.bump();
            let rhs = if min_prec >= 2 {
                self.primary()?
            } else {
                self.binary(min_prec + 1)?
            };
            let span = lhs.span.to(rhs.span);
            lhs = Expr::new(
                ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            );
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let start = self.span();
        if let Some(op) = self.binary_op() {
            if matches!(self.peek_at(1), Tok::Comma | Tok::RParen) {
                self.bump();
                return Ok(Expr::new(ExprKind::OpRef(op), start));
            }
            if op == BinOp::Sub && *self.peek_at(1) == Tok::Ident("inf".into()) {
                self.bump();
                let end = self.bump().span;
                return Ok(Expr::new(ExprKind::Lit(Literal::NegInf), start.to(end)));
            }
        }
        match self.peek().clone() {
            Tok::Fn => self.fn_expr(),
            Tok::Ident(_) => {
                let callee = self.ident()?;
                if *self.peek() != Tok::LParen {
                    return Ok(Expr::new(ExprKind::Var(callee.name), callee.span));
                }
                self.bump();
                let mut args = Vec::new();
                if *self.peek() != Tok::RParen {
                    loop {
                        args.push(self.expr()?);
                        if !self.eat(Tok::Comma) {
                            break;
                        }
                    }
                }
                let end = self.expect(Tok::RParen)?;
                Ok(Expr::new(ExprKind::Call { callee, args }, start.to(end)))
            }
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::new(ExprKind::Lit(Literal::Int(n)), start))
            }
            Tok::Float(text) => {
                self.bump();
                Ok(Expr::new(ExprKind::Lit(Literal::Float(text)), start))
            }
            Tok::LParen => {
                self.bump();
                let mut parts = vec![self.expr()?];
                while self.eat(Tok::Comma) {
                    parts.push(self.expr()?);
                }
                let end = self.expect(Tok::RParen)?;
                if parts.len() == 1 {
                    let mut inner = parts.pop().unwrap();
                    inner.span = start.to(end);
                    Ok(inner)
                } else {
                    Ok(Expr::new(ExprKind::Tuple(parts), start.to(end)))
                }
            }
            Tok::Underscore => Err(ParseError::new(
                start,
                "`_` is only allowed in patterns",
            )),
            _ => Err(self.error_here("an expression")),
        }
    }

    fn fn_expr(&mut self) -> Result<Expr, ParseError> {
        let start = self.expect(Tok::Fn)?;
        self.expect(Tok::LParen)?;
        let mut params: Vec<Param> = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let name = self.ident()?;
                if params.iter().any(|p| p.name.name == name.name) {
                    return Err(ParseError::new(
                        name.span,
                        format!("duplicate parameter `{}`", name.name),
                    ));
                }
                let annotation = if self.eat(Tok::Colon) {
                    Some(self.annotation()?)
                } else {
                    None
                };
                params.push(Param { name, annotation });
                if !self.eat(Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        let ret = if self.eat(Tok::Colon) {
            Some(self.annotation()?)
        } else {
            None
        };
        let body = self.body()?;
        let span = start.to(body.span);
        Ok(Expr::new(ExprKind::Fn(FnExpr { params, ret, body }), span))
    }

    fn body(&mut self) -> Result<Body, ParseError> {
        let start = self.expect(Tok::LBrace)?;
        let mut lets = Vec::new();
        loop {
            if self.at_pattern() {
                let pattern = self.pattern()?;
                self.expect(Tok::Eq)?;
                let value = self.expr()?;
                self.expect(Tok::Semi)?;
                lets.push(Let { pattern, value });
                continue;
            }
            let result = self.tuple_expr()?;
            self.eat(Tok::Semi);
            let end = self.expect(Tok::RBrace)?;
            return Ok(Body {
                lets,
                result: Box::new(result),
                span: start.to(end),
            });
        }
    }

    fn annotation(&mut self) -> Result<Annotation, ParseError> {
        let start = self.span();
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let mut parts = vec![self.annotation()?];
                while self.eat(Tok::Comma) {
                    parts.push(self.annotation()?);
                }
                let end = self.expect(Tok::RParen)?;
                if parts.len() == 1 {
                    return Ok(parts.pop().unwrap());
                }
                Ok(Annotation::Tuple(parts, start.to(end)))
            }
            Tok::LBracket => {
                let (shape, span) = self.shape()?;
                Ok(Annotation::Tensor {
                    elem: None,
                    shape: Some(shape),
                    span,
                })
            }
            Tok::Ident(name) => match self.peek_at(1) {
                Tok::LBracket | Tok::Ident(_) => {
                    self.bump();
                    let (shape, end) = self.shape()?;
                    Ok(Annotation::Tensor {
                        elem: Some(name),
                        shape: Some(shape),
                        span: start.to(end),
                    })
                }
                Tok::At => {
                    let (shape, span) = self.shape()?;
                    Ok(Annotation::Tensor {
                        elem: None,
                        shape: Some(shape),
                        span,
                    })
                }
                _ if is_element_type(&name) => {
                    self.bump();
                    Ok(Annotation::Tensor {
                        elem: Some(name),
                        shape: None,
                        span: start,
                    })
                }
                _ => {
                    self.bump();
                    Ok(Annotation::Tensor {
                        elem: None,
                        shape: Some(Shape::Var(name)),
                        span: start,
                    })
                }
            },
            _ => Err(self.error_here("a type annotation")),
        }
    }

    fn sig_type(&mut self) -> Result<Type, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let mut parts = Vec::new();
                if *self.peek() != Tok::RParen {
                    loop {
                        parts.push(self.sig_type()?);
                        if !self.eat(Tok::Comma) {
                            break;
                        }
                    }
                }
                self.expect(Tok::RParen)?;
                if self.eat(Tok::Arrow) {
                    let ret = self.sig_type()?;
                    return Ok(Type::Fn(parts, Box::new(ret)));
                }
                match parts.len() {
                    1 => Ok(parts.pop().unwrap()),
                    0 => Err(ParseError::new(self.prev_span(), "empty tuple type")),
                    _ => Ok(Type::Tuple(parts)),
                }
            }
            Tok::Ident(name) => {
                self.bump();
                if matches!(self.peek(), Tok::LBracket | Tok::Ident(_)) {
                    let elem = if is_element_type(&name) {
                        Elem::Named(name)
                    } else {
                        Elem::Var(name)
                    };
                    let (shape, _) = self.shape()?;
                    Ok(Type::Tensor(elem, shape))
                } else {
                    Ok(Type::Var(name))
                }
            }
            _ => Err(self.error_here("a type")),
        }
    }

    /// Finds the extent of a shape in the token stream and hands its text
    /// to the shape parser.
    fn shape(&mut self) -> Result<(Shape, Span), ParseError> {
        let start = self.span();
        loop {
            match self.peek() {
                Tok::Ident(_) => {
                    self.bump();
                }
                Tok::LBracket => {
                    let mut depth = 0usize;
                    loop {
                        match self.peek() {
                            Tok::LBracket => depth += 1,
                            Tok::RBracket => depth -= 1,
                            Tok::Eof => return Err(self.error_here("`]`")),
                            _ => {}
                        }
                        self.bump();
                        if depth == 0 {
                            break;
                        }
                    }
                }
                _ => return Err(self.error_here("a shape")),
            }
            if !self.eat(Tok::At) {
                break;
            }
        }
        let span = start.to(self.prev_span());
        let text = &self.text[span.start..span.end];
        let shape = parse_shape(text).map_err(|e| match e {
            ShapeError::Syntax { offset, message } => {
                let at = span.start + offset;
                ParseError::new(Span::new(at, (at + 1).min(span.end)), message)
            }
            other => ParseError::new(span, other.to_string()),
        })?;
        if let Err(violations) = validate_shape(&shape) {
            return Err(ParseError::new(span, violations[0].to_string()));
        }
        Ok((shape, span))
    }
}
