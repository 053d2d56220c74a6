//! The rewrite rules, one function per rule group. Each function looks at a
//! single constraint (by index) and either leaves the set alone, rewrites it,
//! or reports a failure.

use std::collections::BTreeMap;

use crate::shape::{min_rank, simp, DimExpr, DimOp, Shape, ShapeError, ShapeTerm};

use super::{Constraint, ConstraintSet, FailKind, Failure, Firing, RuleGroup};

pub(super) type RuleResult = Result<Option<(Vec<Constraint>, Firing)>, Failure>;

pub(super) fn try_group(group: RuleGroup, set: &ConstraintSet, i: usize) -> RuleResult {
    let items = set.as_slice();
    match group {
        RuleGroup::Basic => basic(items, i),
        RuleGroup::Reorder => reorder(items, i),
        RuleGroup::Unpack => unpack(items, i),
        RuleGroup::EmptyShapes => empty_shapes(items, i),
        RuleGroup::AppendUnpack => append_unpack(items, i),
        RuleGroup::AppendDim => append_dim(items, i),
        RuleGroup::Simplify => simplify(items, i),
        RuleGroup::Arith => arith(items, i),
        RuleGroup::Partial => partial(items, i),
    }
}

fn fail(rule: RuleGroup, kind: FailKind, c: &Constraint, message: impl Into<String>) -> Failure {
    Failure {
        offender: c.clone(),
        rule,
        kind,
        message: message.into(),
    }
}

fn firing(
    rule: RuleGroup,
    index: usize,
    action: &'static str,
    before: Vec<Constraint>,
    after: Vec<Constraint>,
) -> Firing {
    Firing {
        rule,
        index,
        action,
        before,
        after,
    }
}

/// Replaces the constraint at `i` with `with`, appending `extra` at the end.
fn splice(items: &[Constraint], i: usize, with: Vec<Constraint>, extra: Vec<Constraint>) -> Vec<Constraint> {
    let mut out = Vec::with_capacity(items.len() + with.len() + extra.len());
    out.extend_from_slice(&items[..i]);
    out.extend(with);
    out.extend_from_slice(&items[i + 1..]);
    out.extend(extra);
    out
}

fn basic(items: &[Constraint], i: usize) -> RuleResult {
    let c = &items[i];
    const RULE: RuleGroup = RuleGroup::Basic;

    if c.lhs == c.rhs {
        let next = splice(items, i, vec![], vec![]);
        return Ok(Some((next, firing(RULE, i, "tautology", vec![c.clone()], vec![]))));
    }

    if let Some(a) = c.lhs.as_var() {
        if c.rhs.mentions(a) {
            // `a = (* a 1)` and similar become tautologies once simplified.
            return match simp(&c.rhs) {
                Ok(s) if s.as_var() == Some(a) => Ok(None),
                Ok(s) if s.mentions(a) => Err(fail(
                    RULE,
                    FailKind::Occurs,
                    c,
                    format!("`{a}` occurs in `{}`", c.rhs),
                )),
                _ => Ok(None),
            };
        }
        let binding: BTreeMap<String, ShapeTerm> = [(a.to_string(), c.rhs.clone())].into();
        let mut before = Vec::new();
        let mut after = Vec::new();
        let mut next = Vec::with_capacity(items.len());
        for (j, other) in items.iter().enumerate() {
            if j != i && other.mentions(a) {
                let rewrite = |t: &ShapeTerm| {
                    t.replace_vars(&binding).map_err(|e| {
                        fail(RULE, FailKind::SortConflict, other, e.to_string())
                    })
                };
                let replaced = other.derive(rewrite(&other.lhs)?, rewrite(&other.rhs)?);
                before.push(other.clone());
                after.push(replaced.clone());
                next.push(replaced);
            } else {
                next.push(other.clone());
            }
        }
        if before.is_empty() {
            return Ok(None);
        }
        return Ok(Some((next, firing(RULE, i, "replace", before, after))));
    }

    if let (ShapeTerm::D(l), ShapeTerm::D(r)) = (&c.lhs, &c.rhs) {
        match (l, r) {
            (DimExpr::Const(_), DimExpr::Const(_)) => {
                return Err(fail(RULE, FailKind::DistinctConstants, c, format!("{l} is not {r}")));
            }
            (DimExpr::Star, DimExpr::Const(_) | DimExpr::Op(..))
            | (DimExpr::Const(_) | DimExpr::Op(..), DimExpr::Star) => {
                return Err(fail(
                    RULE,
                    FailKind::StarMismatch,
                    c,
                    format!("the variable dimension `*` cannot equal `{}`", if *l == DimExpr::Star { r } else { l }),
                ));
            }
            _ => {}
        }
    }
    Ok(None)
}

fn reorder(items: &[Constraint], i: usize) -> RuleResult {
    let c = &items[i];
    let swap = match (&c.lhs, &c.rhs) {
        (l, r) if l.as_const().is_some() && r.as_const().is_none() => true,
        (l, r) => r.as_var().is_some() && l.as_var().is_none(),
    };
    if !swap {
        return Ok(None);
    }
    let swapped = c.derive(c.rhs.clone(), c.lhs.clone());
    let next = splice(items, i, vec![swapped.clone()], vec![]);
    Ok(Some((next, firing(RuleGroup::Reorder, i, "reorder", vec![c.clone()], vec![swapped]))))
}

fn unpack(items: &[Constraint], i: usize) -> RuleResult {
    let c = &items[i];
    let (ShapeTerm::S(Shape::Concrete(l)), ShapeTerm::S(Shape::Concrete(r))) = (&c.lhs, &c.rhs) else {
        return Ok(None);
    };
    if l.len() != r.len() {
        return Err(fail(
            RuleGroup::Unpack,
            FailKind::RankMismatch,
            c,
            format!("rank {} does not match rank {}", l.len(), r.len()),
        ));
    }
    let pairs: Vec<Constraint> = l
        .iter()
        .zip(r)
        .map(|(a, b)| c.derive(ShapeTerm::D(a.clone()), ShapeTerm::D(b.clone())))
        .collect();
    let next = splice(items, i, pairs.clone(), vec![]);
    Ok(Some((next, firing(RuleGroup::Unpack, i, "unpack", vec![c.clone()], pairs))))
}

/// The parts of an append with nested appends flattened.
fn flat_parts(shape: &Shape) -> Vec<Shape> {
    match shape {
        Shape::Append(parts) => parts.iter().flat_map(flat_parts).collect(),
        other => vec![other.clone()],
    }
}

fn concrete_and_append(c: &Constraint) -> Option<(&Vec<DimExpr>, &Shape, bool)> {
    match (&c.lhs, &c.rhs) {
        (ShapeTerm::S(Shape::Concrete(dims)), ShapeTerm::S(app @ Shape::Append(_))) => Some((dims, app, true)),
        (ShapeTerm::S(app @ Shape::Append(_)), ShapeTerm::S(Shape::Concrete(dims))) => Some((dims, app, false)),
        _ => None,
    }
}

fn empty_shapes(items: &[Constraint], i: usize) -> RuleResult {
    let c = &items[i];
    let Some((dims, app, concrete_left)) = concrete_and_append(c) else {
        return Ok(None);
    };
    let parts = flat_parts(app);
    let mut listed = Vec::new();
    let mut open = Vec::new();
    for part in parts {
        match part {
            Shape::Concrete(d) => listed.extend(d),
            other => open.push(other),
        }
    }
    if open.is_empty() || listed.len() != dims.len() {
        return Ok(None);
    }
    let concrete = ShapeTerm::S(Shape::Concrete(dims.clone()));
    let from_append = ShapeTerm::S(Shape::Concrete(listed));
    let head = if concrete_left {
        c.derive(concrete, from_append)
    } else {
        c.derive(from_append, concrete)
    };
    let empties: Vec<Constraint> = open
        .into_iter()
        .map(|s| c.derive(ShapeTerm::S(s), ShapeTerm::S(Shape::scalar())))
        .collect();
    let mut after = vec![head.clone()];
    after.extend(empties.iter().cloned());
    let next = splice(items, i, vec![head], empties);
    Ok(Some((next, firing(RuleGroup::EmptyShapes, i, "empty shapes", vec![c.clone()], after))))
}

fn peel(parts: &mut [Shape], from_end: bool) -> Option<DimExpr> {
    let part = if from_end { parts.last_mut()? } else { parts.first_mut()? };
    match part {
        Shape::Concrete(dims) if !dims.is_empty() => {
            Some(if from_end { dims.pop().unwrap() } else { dims.remove(0) })
        }
        _ => None,
    }
}

fn rebuild(parts: Vec<Shape>, was_append: bool) -> Shape {
    if was_append {
        Shape::Append(parts)
    } else {
        parts.into_iter().next().unwrap()
    }
}

fn append_unpack(items: &[Constraint], i: usize) -> RuleResult {
    let c = &items[i];
    let (ShapeTerm::S(l), ShapeTerm::S(r)) = (&c.lhs, &c.rhs) else {
        return Ok(None);
    };
    let (l_app, r_app) = (matches!(l, Shape::Append(_)), matches!(r, Shape::Append(_)));
    if !(l_app || r_app) || matches!(l, Shape::Var(_)) || matches!(r, Shape::Var(_)) {
        return Ok(None);
    }
    for from_end in [true, false] {
        let mut lp = flat_parts(l);
        let mut rp = flat_parts(r);
        let (Some(ld), Some(rd)) = (peel(&mut lp, from_end), peel(&mut rp, from_end)) else {
            continue;
        };
        let rest = c.derive(ShapeTerm::S(rebuild(lp, l_app)), ShapeTerm::S(rebuild(rp, r_app)));
        let dim = c.derive(ShapeTerm::D(ld), ShapeTerm::D(rd));
        let after = vec![rest, dim];
        let next = splice(items, i, after.clone(), vec![]);
        let action = if from_end { "peel last" } else { "peel first" };
        return Ok(Some((next, firing(RuleGroup::AppendUnpack, i, action, vec![c.clone()], after))));
    }
    Ok(None)
}

fn append_dim(items: &[Constraint], i: usize) -> RuleResult {
    let c = &items[i];
    let Some((dims, app, _)) = concrete_and_append(c) else {
        return Ok(None);
    };
    let rank = min_rank(app);
    if rank.known > dims.len() {
        return Err(fail(
            RuleGroup::AppendDim,
            FailKind::MinRankExceeded,
            c,
            format!("`{app}` has at least {} dimensions but `{}` has {}", rank.known, Shape::Concrete(dims.clone()), dims.len()),
        ));
    }
    Ok(None)
}

fn simplify(items: &[Constraint], i: usize) -> RuleResult {
    let c = &items[i];
    let on_err = |e: ShapeError| {
        let kind = match e {
            ShapeError::Overflow { .. } => FailKind::Overflow,
            _ => FailKind::InvalidDimension,
        };
        fail(RuleGroup::Simplify, kind, c, e.to_string())
    };
    let lhs = simp(&c.lhs).map_err(on_err)?;
    let rhs = simp(&c.rhs).map_err(on_err)?;
    if lhs == c.lhs && rhs == c.rhs {
        return Ok(None);
    }
    let simplified = c.derive(lhs, rhs);
    let next = splice(items, i, vec![simplified.clone()], vec![]);
    Ok(Some((next, firing(RuleGroup::Simplify, i, "simplify", vec![c.clone()], vec![simplified]))))
}

fn arith(items: &[Constraint], i: usize) -> RuleResult {
    let c = &items[i];
    const RULE: RuleGroup = RuleGroup::Arith;
    let (ShapeTerm::D(DimExpr::Op(op, d, c1)), ShapeTerm::D(DimExpr::Const(c2))) = (&c.lhs, &c.rhs) else {
        return Ok(None);
    };
    let (Some(c1), c2) = (c1.as_const(), *c2) else {
        return Ok(None);
    };
    let solved = match op {
        DimOp::Mul if c2 % c1 == 0 => c2 / c1,
        DimOp::Mul => {
            return Err(fail(RULE, FailKind::ArithInversion, c, format!("{c2} is not divisible by {c1}")));
        }
        DimOp::Add if c2 > c1 => c2 - c1,
        DimOp::Add => {
            return Err(fail(
                RULE,
                FailKind::ArithInversion,
                c,
                format!("`{}` is at least {} and cannot equal {c2}", c.lhs, c1 + 1),
            ));
        }
        DimOp::Sub => c1
            .checked_add(c2)
            .ok_or_else(|| fail(RULE, FailKind::Overflow, c, "dimension overflow"))?,
        DimOp::Div => return Ok(None),
    };
    let inverted = c.derive(ShapeTerm::D((**d).clone()), ShapeTerm::D(DimExpr::Const(solved)));
    let next = splice(items, i, vec![inverted.clone()], vec![]);
    Ok(Some((next, firing(RULE, i, "invert", vec![c.clone()], vec![inverted]))))
}

fn partial(items: &[Constraint], i: usize) -> RuleResult {
    let c = &items[i];
    let (ShapeTerm::D(expr @ DimExpr::Op(..)), ShapeTerm::D(value @ DimExpr::Const(_))) = (&c.lhs, &c.rhs) else {
        return Ok(None);
    };
    let mut before = Vec::new();
    let mut after = Vec::new();
    let mut next = Vec::with_capacity(items.len());
    for (j, other) in items.iter().enumerate() {
        if j != i && (other.lhs.contains_dim(expr) || other.rhs.contains_dim(expr)) {
            let replaced = other.derive(
                other.lhs.replace_dim_subterm(expr, value),
                other.rhs.replace_dim_subterm(expr, value),
            );
            before.push(other.clone());
            after.push(replaced.clone());
            next.push(replaced);
        } else {
            next.push(other.clone());
        }
    }
    if before.is_empty() {
        return Ok(None);
    }
    Ok(Some((next, firing(RuleGroup::Partial, i, "replace expression", before, after))))
}
