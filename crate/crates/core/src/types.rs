//! Types, element types and type schemes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::shape::{substitute, DimExpr, Shape, ShapeError, ShapeTerm, Sort};
use crate::solver::ConstraintSet;

/// Marks compiler-generated names; never valid in user identifiers.
pub const FRESH_MARK: char = '$';

pub fn is_fresh(name: &str) -> bool {
    name.contains(FRESH_MARK)
}

/// The user-facing part of a name, `d1` for `d1$7`.
pub fn base_name(name: &str) -> &str {
    name.split(FRESH_MARK).next().unwrap_or(name)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Elem {
    Named(String),
    Var(String),
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Elem::Named(n) | Elem::Var(n) => f.write_str(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Type {
    Var(String),
    Tensor(Elem, Shape),
    Tuple(Vec<Type>),
    Fn(Vec<Type>, Box<Type>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    Type,
    Elem,
    Shape,
    Dim,
}

impl From<Sort> for VarKind {
    fn from(sort: Sort) -> Self {
        match sort {
            Sort::Shape => VarKind::Shape,
            Sort::Dim => VarKind::Dim,
        }
    }
}

impl Type {
    pub fn scalar(elem: Elem) -> Type {
        Type::Tensor(elem, Shape::scalar())
    }

    /// Calls `f` for every variable occurrence, left to right.
    pub fn visit_vars<'a>(&'a self, f: &mut impl FnMut(&'a str, VarKind)) {
        match self {
            Type::Var(v) => f(v, VarKind::Type),
            Type::Tensor(e, s) => {
                if let Elem::Var(v) = e {
                    f(v, VarKind::Elem);
                }
                visit_shape_vars(s, f);
            }
            Type::Tuple(parts) => parts.iter().for_each(|t| t.visit_vars(f)),
            Type::Fn(params, ret) => {
                params.iter().for_each(|t| t.visit_vars(f));
                ret.visit_vars(f);
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<(String, VarKind)> {
        let mut out = BTreeSet::new();
        self.visit_vars(&mut |v, k| {
            out.insert((v.to_string(), k));
        });
        out
    }

    pub fn mentions_type_var(&self, name: &str) -> bool {
        let mut found = false;
        self.visit_vars(&mut |v, k| found |= k == VarKind::Type && v == name);
        found
    }

    pub fn map_shapes<E>(&self, f: &mut impl FnMut(&Shape) -> Result<Shape, E>) -> Result<Type, E> {
        Ok(match self {
            Type::Var(v) => Type::Var(v.clone()),
            Type::Tensor(e, s) => Type::Tensor(e.clone(), f(s)?),
            Type::Tuple(parts) => Type::Tuple(parts.iter().map(|t| t.map_shapes(f)).collect::<Result<_, E>>()?),
            Type::Fn(params, ret) => Type::Fn(
                params.iter().map(|t| t.map_shapes(f)).collect::<Result<_, E>>()?,
                Box::new(ret.map_shapes(f)?),
            ),
        })
    }

    pub fn map_elems(&self, f: &mut impl FnMut(&Elem) -> Elem) -> Type {
        match self {
            Type::Var(v) => Type::Var(v.clone()),
            Type::Tensor(e, s) => Type::Tensor(f(e), s.clone()),
            Type::Tuple(parts) => Type::Tuple(parts.iter().map(|t| t.map_elems(f)).collect()),
            Type::Fn(params, ret) => Type::Fn(
                params.iter().map(|t| t.map_elems(f)).collect(),
                Box::new(ret.map_elems(f)),
            ),
        }
    }

    pub fn map_type_vars(&self, f: &mut impl FnMut(&str) -> Type) -> Type {
        match self {
            Type::Var(v) => f(v),
            Type::Tensor(..) => self.clone(),
            Type::Tuple(parts) => Type::Tuple(parts.iter().map(|t| t.map_type_vars(f)).collect()),
            Type::Fn(params, ret) => Type::Fn(
                params.iter().map(|t| t.map_type_vars(f)).collect(),
                Box::new(ret.map_type_vars(f)),
            ),
        }
    }

    /// Applies a shape/dimension substitution to every shape, simplifying.
    pub fn substitute_shapes(&self, binding: &BTreeMap<String, ShapeTerm>) -> Result<Type, ShapeError> {
        self.map_shapes(&mut |s| match substitute(&ShapeTerm::S(s.clone()), binding)? {
            ShapeTerm::S(s) => Ok(s),
            ShapeTerm::D(_) => unreachable!("substitution preserves sorts"),
        })
    }
}

pub(crate) fn visit_shape_vars<'a>(shape: &'a Shape, f: &mut impl FnMut(&'a str, VarKind)) {
    fn dim<'a>(d: &'a DimExpr, f: &mut impl FnMut(&'a str, VarKind)) {
        match d {
            DimExpr::Var(v) => f(v, VarKind::Dim),
            DimExpr::Op(_, l, r) => {
                dim(l, f);
                dim(r, f);
            }
            DimExpr::Const(_) | DimExpr::Star => {}
        }
    }
    match shape {
        Shape::Var(v) => f(v, VarKind::Shape),
        Shape::Concrete(dims) => dims.iter().for_each(|d| dim(d, f)),
        Shape::Append(parts) => parts.iter().for_each(|p| visit_shape_vars(p, f)),
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Var(v) => write!(f, "'{v}"),
            Type::Tensor(e, s) => write!(f, "{e} {s}"),
            Type::Tuple(parts) => {
                f.write_str("(")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str(")")
            }
            Type::Fn(params, ret) => {
                match params.as_slice() {
                    [single @ (Type::Var(_) | Type::Tensor(..))] => write!(f, "{single}")?,
                    _ => {
                        f.write_str("(")?;
                        for (i, p) in params.iter().enumerate() {
                            if i > 0 {
                                f.write_str(", ")?;
                            }
                            write!(f, "{p}")?;
                        }
                        f.write_str(")")?;
                    }
                }
                match ret.as_ref() {
                    Type::Fn(..) => write!(f, " -> ({ret})"),
                    _ => write!(f, " -> {ret}"),
                }
            }
        }
    }
}

/// A type with quantified variables and the shape constraints that still
/// relate them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeScheme {
    pub vars: Vec<(String, VarKind)>,
    pub constraints: ConstraintSet,
    pub body: Type,
}

impl TypeScheme {
    pub fn mono(body: Type) -> Self {
        TypeScheme {
            vars: Vec::new(),
            constraints: ConstraintSet::new(),
            body,
        }
    }

    /// Quantifies every variable of `body`.
    pub fn closed(body: Type) -> Self {
        let mut vars = Vec::new();
        body.visit_vars(&mut |v, k| {
            if !vars.iter().any(|(n, _)| n == v) {
                vars.push((v.to_string(), k));
            }
        });
        TypeScheme {
            vars,
            constraints: ConstraintSet::new(),
            body,
        }
    }

    /// Variables of the body and constraints that are not quantified.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.body.visit_vars(&mut |v, _| {
            out.insert(v.to_string());
        });
        for c in &self.constraints {
            for side in [&c.lhs, &c.rhs] {
                side.visit_vars(&mut |v, _| {
                    out.insert(v.to_string());
                });
            }
        }
        for (v, _) in &self.vars {
            out.remove(v);
        }
        out
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }
}

impl fmt::Display for TypeScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.body)?;
        if !self.constraints.is_empty() {
            let cs: Vec<_> = self.constraints.iter().map(|c| c.to_string()).collect();
            write!(f, " where {}", cs.join(", "))?;
        }
        Ok(())
    }
}
