use std::fmt;

use crate::shape::Shape;
use crate::span::Span;

/// Element type names with a fixed meaning; any other name in element
/// position is an element variable.
pub const ELEMENT_TYPES: [&str; 12] = [
    "f16", "f32", "f64", "i8", "i16", "i32", "i64", "u8", "u16", "u32", "u64", "bool",
];

pub fn is_element_type(name: &str) -> bool {
    ELEMENT_TYPES.contains(&name)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub items: Vec<Item>,
}

/// A top-level `pattern = expr` or a bare expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Item {
    pub pattern: Option<Pattern>,
    pub expr: Expr,
    pub span: Span,
}

impl Item {
    /// Names bound by this item, in order, wildcards skipped.
    pub fn bound_names(&self) -> Vec<&Ident> {
        self.pattern.iter().flat_map(|p| p.names()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatItem {
    Name(Ident),
    Wildcard(Span),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub items: Vec<PatItem>,
    pub span: Span,
}

impl Pattern {
    pub fn names(&self) -> impl Iterator<Item = &Ident> {
        self.items.iter().filter_map(|p| match p {
            PatItem::Name(id) => Some(id),
            PatItem::Wildcard(_) => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

impl fmt::Display for BinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    /// `0f`, `2.5f`, `1.5`.
    Float(String),
    NegInf,
    Int(u64),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Float(text) => f.write_str(text),
            Literal::NegInf => f.write_str("-inf"),
            Literal::Int(n) => write!(f, "{n}"),
        }
    }
}

/// A type annotation on a parameter or a function result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Annotation {
    /// `f32 [n,n]`, `t i`, `f32` (scalar) or a bare shape such as `r`.
    Tensor {
        elem: Option<String>,
        shape: Option<Shape>,
        span: Span,
    },
    Tuple(Vec<Annotation>, Span),
}

impl Annotation {
    pub fn span(&self) -> Span {
        match self {
            Annotation::Tensor { span, .. } | Annotation::Tuple(_, span) => *span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: Ident,
    pub annotation: Option<Annotation>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Let {
    pub pattern: Pattern,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Body {
    pub lets: Vec<Let>,
    pub result: Box<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FnExpr {
    pub params: Vec<Param>,
    pub ret: Option<Annotation>,
    pub body: Body,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Fn(FnExpr),
    Call { callee: Ident, args: Vec<Expr> },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Var(String),
    Tuple(Vec<Expr>),
    Lit(Literal),
    /// An operator used as a value, as in `reduce(+, 0f, x)`.
    OpRef(BinOp),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }
}

/// Resets every span to [`Span::DUMMY`], for comparing trees by structure.
pub trait EraseSpans {
    fn erase_spans(&mut self);
}

impl EraseSpans for Program {
    fn erase_spans(&mut self) {
        for item in &mut self.items {
            item.span = Span::DUMMY;
            if let Some(p) = &mut item.pattern {
                p.erase_spans();
            }
            item.expr.erase_spans();
        }
    }
}

impl EraseSpans for Ident {
    fn erase_spans(&mut self) {
        self.span = Span::DUMMY;
    }
}

impl EraseSpans for Pattern {
    fn erase_spans(&mut self) {
        self.span = Span::DUMMY;
        for item in &mut self.items {
            match item {
                PatItem::Name(id) => id.erase_spans(),
                PatItem::Wildcard(span) => *span = Span::DUMMY,
            }
        }
    }
}

impl EraseSpans for Annotation {
    fn erase_spans(&mut self) {
        match self {
            Annotation::Tensor { span, .. } => *span = Span::DUMMY,
            Annotation::Tuple(parts, span) => {
                *span = Span::DUMMY;
                parts.iter_mut().for_each(EraseSpans::erase_spans);
            }
        }
    }
}

impl EraseSpans for Expr {
    fn erase_spans(&mut self) {
        self.span = Span::DUMMY;
        match &mut self.kind {
            ExprKind::Fn(f) => {
                for p in &mut f.params {
                    p.name.erase_spans();
                    if let Some(a) = &mut p.annotation {
                        a.erase_spans();
                    }
                }
                if let Some(a) = &mut f.ret {
                    a.erase_spans();
                }
                f.body.span = Span::DUMMY;
                for l in &mut f.body.lets {
                    l.pattern.erase_spans();
                    l.value.erase_spans();
                }
                f.body.result.erase_spans();
            }
            ExprKind::Call { callee, args } => {
                callee.erase_spans();
                args.iter_mut().for_each(EraseSpans::erase_spans);
            }
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.erase_spans();
                rhs.erase_spans();
            }
            ExprKind::Tuple(parts) => parts.iter_mut().for_each(EraseSpans::erase_spans),
            ExprKind::Var(_) | ExprKind::Lit(_) | ExprKind::OpRef(_) => {}
        }
    }
}

/// Structural equality ignoring spans.
pub fn same_structure<T: EraseSpans + Clone + PartialEq>(a: &T, b: &T) -> bool {
    let (mut a, mut b) = (a.clone(), b.clone());
    a.erase_spans();
    b.erase_spans();
    a == b
}
