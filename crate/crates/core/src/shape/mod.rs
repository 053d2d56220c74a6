//! The algebra of tensor shapes and dimension expressions.
//!
//! A [`Shape`] is either a list of dimensions, a shape variable, or the
//! append (`@`) of several shapes. Dimensions are [`DimExpr`] terms built from
//! positive constants, the variable dimension `*`, dimension variables, and
//! binary arithmetic written in prefix form, e.g. `(+ d 1)`.
//!
//! Shape and dimension variables share one namespace, but every name has a
//! single [`Sort`].

mod parse;
mod simp;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use parse::{parse_dim, parse_shape, parse_term, RawTerm};
pub use simp::{simp, simp_dim, simp_shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DimOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl DimOp {
    pub fn symbol(self) -> char {
        match self {
            DimOp::Add => '+',
            DimOp::Sub => '-',
            DimOp::Mul => '*',
            DimOp::Div => '/',
        }
    }

    pub fn is_commutative(self) -> bool {
        matches!(self, DimOp::Add | DimOp::Mul)
    }
}

/// A symbolic dimension size.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DimExpr {
    Const(u64),
    /// The variable dimension `*`: its extent differs across the tensor.
    Star,
    Var(String),
    Op(DimOp, Box<DimExpr>, Box<DimExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Shape {
    Concrete(Vec<DimExpr>),
    Var(String),
    Append(Vec<Shape>),
}

/// Either side of a shape constraint.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ShapeTerm {
    S(Shape),
    D(DimExpr),
}

/// The sort of a variable name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Shape,
    Dim,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Shape => "shape",
            Sort::Dim => "dimension",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ShapeError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("invalid dimension: `{expr}` does not denote a positive size")]
    InvalidDimension { expr: String },
    #[error("arithmetic overflow in `{expr}`")]
    Overflow { expr: String },
    #[error("`{name}` is a {found} but is used where a {expected} is required")]
    SortMismatch {
        name: String,
        expected: Sort,
        found: Sort,
    },
}

impl DimExpr {
    pub fn var(name: impl Into<String>) -> Self {
        DimExpr::Var(name.into())
    }

    pub fn op(op: DimOp, lhs: DimExpr, rhs: DimExpr) -> Self {
        DimExpr::Op(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn as_const(&self) -> Option<u64> {
        match self {
            DimExpr::Const(c) => Some(*c),
            _ => None,
        }
    }

    fn visit_vars<'a>(&'a self, f: &mut impl FnMut(&'a str, Sort)) {
        match self {
            DimExpr::Var(v) => f(v, Sort::Dim),
            DimExpr::Op(_, l, r) => {
                l.visit_vars(f);
                r.visit_vars(f);
            }
            DimExpr::Const(_) | DimExpr::Star => {}
        }
    }

    /// True if `needle` occurs as a subterm (including the whole term).
    pub fn contains(&self, needle: &DimExpr) -> bool {
        if self == needle {
            return true;
        }
        match self {
            DimExpr::Op(_, l, r) => l.contains(needle) || r.contains(needle),
            _ => false,
        }
    }

    /// Replaces every occurrence of the subterm `target` with `with`.
    pub fn replace_subterm(&self, target: &DimExpr, with: &DimExpr) -> DimExpr {
        if self == target {
            return with.clone();
        }
        match self {
            DimExpr::Op(op, l, r) => DimExpr::op(
                *op,
                l.replace_subterm(target, with),
                r.replace_subterm(target, with),
            ),
            other => other.clone(),
        }
    }

    fn replace_vars(&self, binding: &BTreeMap<String, ShapeTerm>) -> Result<DimExpr, ShapeError> {
        Ok(match self {
            DimExpr::Var(v) => match binding.get(v) {
                Some(ShapeTerm::D(d)) => d.clone(),
                Some(ShapeTerm::S(_)) => {
                    return Err(ShapeError::SortMismatch {
                        name: v.clone(),
                        expected: Sort::Dim,
                        found: Sort::Shape,
                    })
                }
                None => self.clone(),
            },
            DimExpr::Op(op, l, r) => {
                DimExpr::op(*op, l.replace_vars(binding)?, r.replace_vars(binding)?)
            }
            DimExpr::Const(_) | DimExpr::Star => self.clone(),
        })
    }
}

impl Shape {
    pub fn var(name: impl Into<String>) -> Self {
        Shape::Var(name.into())
    }

    pub fn scalar() -> Self {
        Shape::Concrete(Vec::new())
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, Shape::Concrete(d) if d.is_empty())
    }

    fn visit_vars<'a>(&'a self, f: &mut impl FnMut(&'a str, Sort)) {
        match self {
            Shape::Concrete(dims) => dims.iter().for_each(|d| d.visit_vars(f)),
            Shape::Var(v) => f(v, Sort::Shape),
            Shape::Append(parts) => parts.iter().for_each(|p| p.visit_vars(f)),
        }
    }

    /// Applies `f` to every dimension expression directly inside a list part.
    pub fn map_dims(&self, f: &mut impl FnMut(&DimExpr) -> DimExpr) -> Shape {
        match self {
            Shape::Concrete(dims) => Shape::Concrete(dims.iter().map(&mut *f).collect()),
            Shape::Var(_) => self.clone(),
            Shape::Append(parts) => Shape::Append(parts.iter().map(|p| p.map_dims(f)).collect()),
        }
    }

    pub fn any_dim(&self, f: &mut impl FnMut(&DimExpr) -> bool) -> bool {
        match self {
            Shape::Concrete(dims) => dims.iter().any(&mut *f),
            Shape::Var(_) => false,
            Shape::Append(parts) => parts.iter().any(|p| p.any_dim(f)),
        }
    }

    fn replace_vars(&self, binding: &BTreeMap<String, ShapeTerm>) -> Result<Shape, ShapeError> {
        Ok(match self {
            Shape::Concrete(dims) => Shape::Concrete(
                dims.iter()
                    .map(|d| d.replace_vars(binding))
                    .collect::<Result<_, _>>()?,
            ),
            Shape::Var(v) => match binding.get(v) {
                Some(ShapeTerm::S(s)) => s.clone(),
                Some(ShapeTerm::D(_)) => {
                    return Err(ShapeError::SortMismatch {
                        name: v.clone(),
                        expected: Sort::Shape,
                        found: Sort::Dim,
                    })
                }
                None => self.clone(),
            },
            Shape::Append(parts) => Shape::Append(
                parts
                    .iter()
                    .map(|p| p.replace_vars(binding))
                    .collect::<Result<_, _>>()?,
            ),
        })
    }
}

impl ShapeTerm {
    pub fn sort(&self) -> Sort {
        match self {
            ShapeTerm::S(_) => Sort::Shape,
            ShapeTerm::D(_) => Sort::Dim,
        }
    }

    /// The variable name if this term is a bare variable of either sort.
    pub fn as_var(&self) -> Option<&str> {
        match self {
            ShapeTerm::S(Shape::Var(v)) | ShapeTerm::D(DimExpr::Var(v)) => Some(v),
            _ => None,
        }
    }

    pub fn as_const(&self) -> Option<u64> {
        match self {
            ShapeTerm::D(d) => d.as_const(),
            ShapeTerm::S(_) => None,
        }
    }

    pub fn visit_vars<'a>(&'a self, f: &mut impl FnMut(&'a str, Sort)) {
        match self {
            ShapeTerm::S(s) => s.visit_vars(f),
            ShapeTerm::D(d) => d.visit_vars(f),
        }
    }

    pub fn mentions(&self, name: &str) -> bool {
        let mut found = false;
        self.visit_vars(&mut |v, _| found |= v == name);
        found
    }

    /// Textual replacement of variables, without simplification.
    pub fn replace_vars(&self, binding: &BTreeMap<String, ShapeTerm>) -> Result<ShapeTerm, ShapeError> {
        Ok(match self {
            ShapeTerm::S(s) => ShapeTerm::S(s.replace_vars(binding)?),
            ShapeTerm::D(d) => ShapeTerm::D(d.replace_vars(binding)?),
        })
    }

    pub fn replace_dim_subterm(&self, target: &DimExpr, with: &DimExpr) -> ShapeTerm {
        match self {
            ShapeTerm::S(s) => ShapeTerm::S(s.map_dims(&mut |d| d.replace_subterm(target, with))),
            ShapeTerm::D(d) => ShapeTerm::D(d.replace_subterm(target, with)),
        }
    }

    pub fn contains_dim(&self, needle: &DimExpr) -> bool {
        match self {
            ShapeTerm::S(s) => s.any_dim(&mut |d| d.contains(needle)),
            ShapeTerm::D(d) => d.contains(needle),
        }
    }
}

/// The free shape and dimension variables of a term.
pub fn fsv(term: &ShapeTerm) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    term.visit_vars(&mut |v, _| {
        out.insert(v.to_string());
    });
    out
}

/// Replaces variables per `binding` and canonicalizes the result.
pub fn substitute(
    term: &ShapeTerm,
    binding: &BTreeMap<String, ShapeTerm>,
) -> Result<ShapeTerm, ShapeError> {
    if binding.is_empty() {
        return Ok(term.clone());
    }
    simp(&term.replace_vars(binding)?)
}

/// Lower bound on the rank of a shape, and whether the rank may be larger.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinRank {
    pub known: usize,
    pub open: bool,
}

pub fn min_rank(shape: &Shape) -> MinRank {
    match shape {
        Shape::Concrete(dims) => MinRank {
            known: dims.len(),
            open: false,
        },
        Shape::Var(_) => MinRank {
            known: 0,
            open: true,
        },
        Shape::Append(parts) => parts.iter().map(min_rank).fold(
            MinRank {
                known: 0,
                open: false,
            },
            |acc, r| MinRank {
                known: acc.known + r.known,
                open: acc.open || r.open,
            },
        ),
    }
}

/// A node that breaks the shape construction rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// An append with fewer than two parts.
    AppendArity { node: String, parts: usize },
    ZeroConstant,
    InvalidIdentifier(String),
    /// `*` used as an operand of an arithmetic node.
    StarInArithmetic { node: String },
    /// A name used both as a shape and as a dimension.
    SortConflict(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::AppendArity { node, parts } => {
                write!(f, "append `{node}` has {parts} part(s); at least two are required")
            }
            Violation::ZeroConstant => f.write_str("dimension constant 0 is not a positive size"),
            Violation::InvalidIdentifier(name) => write!(f, "`{name}` is not a valid identifier"),
            Violation::StarInArithmetic { node } => {
                write!(f, "the variable dimension `*` cannot appear in arithmetic `{node}`")
            }
            Violation::SortConflict(name) => {
                write!(f, "`{name}` is used both as a shape and as a dimension")
            }
        }
    }
}

pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn validate_dim(dim: &DimExpr, out: &mut Vec<Violation>) {
    match dim {
        DimExpr::Const(0) => out.push(Violation::ZeroConstant),
        DimExpr::Const(_) | DimExpr::Star => {}
        DimExpr::Var(v) => {
            if !is_identifier(v) {
                out.push(Violation::InvalidIdentifier(v.clone()));
            }
        }
        DimExpr::Op(_, l, r) => {
            if **l == DimExpr::Star || **r == DimExpr::Star {
                out.push(Violation::StarInArithmetic {
                    node: dim.to_string(),
                });
            }
            validate_dim(l, out);
            validate_dim(r, out);
        }
    }
}

fn validate_shape_node(shape: &Shape, out: &mut Vec<Violation>) {
    match shape {
        Shape::Concrete(dims) => dims.iter().for_each(|d| validate_dim(d, out)),
        Shape::Var(v) => {
            if !is_identifier(v) {
                out.push(Violation::InvalidIdentifier(v.clone()));
            }
        }
        Shape::Append(parts) => {
            if parts.len() < 2 {
                out.push(Violation::AppendArity {
                    node: shape.to_string(),
                    parts: parts.len(),
                });
            }
            parts.iter().for_each(|p| validate_shape_node(p, out));
        }
    }
}

fn sort_conflicts(term: &ShapeTerm, out: &mut Vec<Violation>) {
    let mut sorts: BTreeMap<&str, Sort> = BTreeMap::new();
    let mut reported = BTreeSet::new();
    term.visit_vars(&mut |v, sort| {
        let prev = *sorts.entry(v).or_insert(sort);
        if prev != sort && reported.insert(v) {
            out.push(Violation::SortConflict(v.to_string()));
        }
    });
}

/// Checks a shape against the construction rules.
pub fn validate_shape(shape: &Shape) -> Result<(), Vec<Violation>> {
    validate_term(&ShapeTerm::S(shape.clone()))
}

pub fn validate_term(term: &ShapeTerm) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    match term {
        ShapeTerm::S(s) => validate_shape_node(s, &mut out),
        ShapeTerm::D(d) => validate_dim(d, &mut out),
    }
    sort_conflicts(term, &mut out);
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

impl fmt::Display for DimExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DimExpr::Const(c) => write!(f, "{c}"),
            DimExpr::Star => f.write_str("*"),
            DimExpr::Var(v) => f.write_str(v),
            DimExpr::Op(op, l, r) => write!(f, "({} {l} {r})", op.symbol()),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Concrete(dims) => {
                f.write_str("[")?;
                for (i, d) in dims.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{d}")?;
                }
                f.write_str("]")
            }
            Shape::Var(v) => f.write_str(v),
            Shape::Append(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" @ ")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for ShapeTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeTerm::S(s) => s.fmt(f),
            ShapeTerm::D(d) => d.fmt(f),
        }
    }
}
