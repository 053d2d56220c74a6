//! Canonicalization of shapes and dimension expressions.
//!
//! Canonical dimensions have all constant subterms folded, the operands of
//! `+` and `*` ordered (variables by name, then `*`, then compound terms,
//! constants last), constant chains such as `(+ (+ x 1) 2)` merged, and
//! `(+ x x)` written as `(* x 2)`. Floored division is only ever folded when
//! both operands are constants.
//!
//! Canonical shapes contain no nested appends, no `[]` parts inside an
//! append, and no two adjacent list parts.

use std::cmp::Ordering;

use super::{DimExpr, DimOp, Shape, ShapeError, ShapeTerm};

pub fn simp(term: &ShapeTerm) -> Result<ShapeTerm, ShapeError> {
    Ok(match term {
        ShapeTerm::S(s) => ShapeTerm::S(simp_shape(s)?),
        ShapeTerm::D(d) => ShapeTerm::D(simp_dim(d)?),
    })
}

pub fn simp_dim(dim: &DimExpr) -> Result<DimExpr, ShapeError> {
    match dim {
        DimExpr::Op(op, l, r) => combine(*op, simp_dim(l)?, simp_dim(r)?),
        other => Ok(other.clone()),
    }
}

pub fn simp_shape(shape: &Shape) -> Result<Shape, ShapeError> {
    match shape {
        Shape::Concrete(dims) => Ok(Shape::Concrete(
            dims.iter().map(simp_dim).collect::<Result<_, _>>()?,
        )),
        Shape::Var(_) => Ok(shape.clone()),
        Shape::Append(parts) => {
            let mut flat = Vec::new();
            for part in parts {
                match simp_shape(part)? {
                    Shape::Append(inner) => flat.extend(inner),
                    other => flat.push(other),
                }
            }
            let mut merged: Vec<Shape> = Vec::with_capacity(flat.len());
            for part in flat {
                match (merged.last_mut(), part) {
                    (_, Shape::Concrete(dims)) if dims.is_empty() => {}
                    (Some(Shape::Concrete(prev)), Shape::Concrete(dims)) => prev.extend(dims),
                    (_, part) => merged.push(part),
                }
            }
            Ok(match merged.len() {
                0 => Shape::scalar(),
                1 => merged.pop().unwrap(),
                _ => Shape::Append(merged),
            })
        }
    }
}

/// Total order used to arrange the operands of commutative operators.
pub(crate) fn canonical_cmp(a: &DimExpr, b: &DimExpr) -> Ordering {
    fn rank(d: &DimExpr) -> u8 {
        match d {
            DimExpr::Var(_) => 0,
            DimExpr::Star => 1,
            DimExpr::Op(..) => 2,
            DimExpr::Const(_) => 3,
        }
    }
    match (a, b) {
        (DimExpr::Var(x), DimExpr::Var(y)) => x.cmp(y),
        (DimExpr::Const(x), DimExpr::Const(y)) => x.cmp(y),
        (DimExpr::Op(o1, l1, r1), DimExpr::Op(o2, l2, r2)) => o1
            .cmp(o2)
            .then_with(|| canonical_cmp(l1, l2))
            .then_with(|| canonical_cmp(r1, r2)),
        _ => rank(a).cmp(&rank(b)),
    }
}

fn fold(op: DimOp, a: u64, b: u64) -> Result<DimExpr, ShapeError> {
    let expr = || DimExpr::op(op, DimExpr::Const(a), DimExpr::Const(b)).to_string();
    let value = match op {
        DimOp::Add => a.checked_add(b),
        DimOp::Mul => a.checked_mul(b),
        DimOp::Sub => Some(a.saturating_sub(b)),
        DimOp::Div => Some(a / b),
    }
    .ok_or_else(|| ShapeError::Overflow { expr: expr() })?;
    if value == 0 {
        return Err(ShapeError::InvalidDimension { expr: expr() });
    }
    Ok(DimExpr::Const(value))
}

/// Builds `(op l r)` from canonical operands, returning a canonical term.
fn combine(op: DimOp, l: DimExpr, r: DimExpr) -> Result<DimExpr, ShapeError> {
    if let (DimExpr::Const(a), DimExpr::Const(b)) = (&l, &r) {
        return fold(op, *a, *b);
    }
    let (l, r) = if op.is_commutative() && canonical_cmp(&l, &r) == Ordering::Greater {
        (r, l)
    } else {
        (l, r)
    };
    match (op, &l, &r) {
        (DimOp::Add, _, _) if l == r => combine(DimOp::Mul, l, DimExpr::Const(2)),
        (DimOp::Mul | DimOp::Div, _, DimExpr::Const(1)) => Ok(l),
        (DimOp::Add | DimOp::Mul, DimExpr::Op(inner, x, c1), DimExpr::Const(c2))
            if *inner == op && c1.as_const().is_some() =>
        {
            let folded = fold(op, c1.as_const().unwrap(), *c2)?;
            combine(op, (**x).clone(), folded)
        }
        _ => Ok(DimExpr::op(op, l, r)),
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_dim, parse_shape};
    use super::*;

    fn d(text: &str) -> DimExpr {
        parse_dim(text).unwrap()
    }

    fn sd(text: &str) -> String {
        simp_dim(&d(text)).unwrap().to_string()
    }

    fn ss(text: &str) -> String {
        simp_shape(&parse_shape(text).unwrap()).unwrap().to_string()
    }

    #[test]
    fn removes_empty_append_parts() {
        assert_eq!(ss("[] @ [n, n]"), "[n,n]");
        assert_eq!(ss("s @ []"), "s");
        assert_eq!(ss("[] @ []"), "[]");
    }

    #[test]
    fn merges_adjacent_lists() {
        assert_eq!(ss("[a] @ [b]"), "[a,b]");
        assert_eq!(ss("s @ [a] @ [b] @ t @ [c]"), "s @ [a,b] @ t @ [c]");
    }

    #[test]
    fn flattens_nested_appends() {
        let nested = Shape::Append(vec![
            Shape::Append(vec![Shape::var("a"), Shape::Concrete(vec![DimExpr::Const(1)])]),
            Shape::Append(vec![Shape::Concrete(vec![DimExpr::Const(2)]), Shape::var("b")]),
        ]);
        assert_eq!(simp_shape(&nested).unwrap().to_string(), "a @ [1,2] @ b");
    }

    #[test]
    fn moves_constants_right() {
        assert_eq!(sd("(+ 1 (- h 8))"), "(+ (- h 8) 1)");
        assert_eq!(sd("(* 4 d)"), "(* d 4)");
        assert_eq!(sd("(+ b a)"), "(+ a b)");
        assert_eq!(sd("(- 1 h)"), "(- 1 h)");
    }

    #[test]
    fn folds_constants() {
        assert_eq!(sd("(* 2 3)"), "6");
        assert_eq!(sd("(+ 1 (- 1031 8))"), "1024");
        assert_eq!(sd("(/ 7 2)"), "3");
        assert_eq!(sd("(+ (+ x 1) 2)"), "(+ x 3)");
        assert_eq!(sd("(* 2 (* x 3))"), "(* x 6)");
        assert_eq!(sd("(* x 1)"), "x");
    }

    #[test]
    fn like_terms_double() {
        assert_eq!(sd("(+ d d)"), "(* d 2)");
        assert_eq!(sd("(+ (* d 2) (* d 2))"), "(* d 4)");
    }

    #[test]
    fn division_is_left_alone() {
        assert_eq!(sd("(/ (* x 4) 4)"), "(/ (* x 4) 4)");
        assert_eq!(sd("(/ x 1)"), "x");
    }

    #[test]
    fn non_positive_fold_is_an_error() {
        assert!(matches!(simp_dim(&d("(- 3 3)")), Err(ShapeError::InvalidDimension { .. })));
        assert!(matches!(simp_dim(&d("(- 3 5)")), Err(ShapeError::InvalidDimension { .. })));
        assert!(matches!(simp_dim(&d("(/ 3 4)")), Err(ShapeError::InvalidDimension { .. })));
        assert!(matches!(
            simp_dim(&d("(* 18446744073709551615 2)")),
            Err(ShapeError::Overflow { .. })
        ));
    }
}
