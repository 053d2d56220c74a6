//! The line-oriented constraint file format:
//!
//! ```text
//! # comment
//! s @ [d1, d2] = [n, n]
//! (* d 4) = 12
//! ```
//!
//! A bare identifier takes its sort from the other side of its equation or
//! from its other uses in the file, defaulting to a dimension.

use std::collections::BTreeMap;

use crate::shape::{parse_term, validate_term, DimExpr, RawTerm, Shape, ShapeTerm, Sort};

use super::{Constraint, ConstraintSet, Origin};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ConstraintFileError {
    pub line: usize,
    pub message: String,
}

fn known_sort(term: &RawTerm) -> Option<Sort> {
    match term {
        RawTerm::Shape(_) => Some(Sort::Shape),
        RawTerm::Dim(_) => Some(Sort::Dim),
        RawTerm::Ident(_) => None,
    }
}

fn record_sorts(
    term: &ShapeTerm,
    line: usize,
    sorts: &mut BTreeMap<String, Sort>,
) -> Result<(), ConstraintFileError> {
    let mut conflict = None;
    term.visit_vars(&mut |v, sort| {
        let prev = *sorts.entry(v.to_string()).or_insert(sort);
        if prev != sort {
            conflict = Some(v.to_string());
        }
    });
    match conflict {
        Some(name) => Err(ConstraintFileError {
            line,
            message: format!("`{name}` is used both as a shape and as a dimension"),
        }),
        None => Ok(()),
    }
}

fn into_term(raw: RawTerm, sort: Sort) -> ShapeTerm {
    match (raw, sort) {
        (RawTerm::Shape(s), _) => ShapeTerm::S(s),
        (RawTerm::Dim(d), _) => ShapeTerm::D(d),
        (RawTerm::Ident(name), Sort::Shape) => ShapeTerm::S(Shape::Var(name)),
        (RawTerm::Ident(name), Sort::Dim) => ShapeTerm::D(DimExpr::Var(name)),
    }
}

pub fn parse_constraint_file(text: &str) -> Result<ConstraintSet, ConstraintFileError> {
    let mut rows = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut sides = content.split('=');
        let (Some(lhs), Some(rhs), None) = (sides.next(), sides.next(), sides.next()) else {
            return Err(ConstraintFileError {
                line,
                message: "expected exactly one `=`".into(),
            });
        };
        let parse = |side: &str| {
            parse_term(side).map_err(|e| ConstraintFileError {
                line,
                message: e.to_string(),
            })
        };
        rows.push((line, parse(lhs)?, parse(rhs)?));
    }

    let mut sorts: BTreeMap<String, Sort> = BTreeMap::new();
    for (line, lhs, rhs) in &rows {
        if let (Some(a), Some(b)) = (known_sort(lhs), known_sort(rhs)) {
            if a != b {
                return Err(ConstraintFileError {
                    line: *line,
                    message: format!("cannot equate a {a} with a {b}"),
                });
            }
        }
        let pair_sort = known_sort(lhs).or_else(|| known_sort(rhs));
        for side in [lhs, rhs] {
            if let Some(sort) = known_sort(side).or(pair_sort) {
                record_sorts(&into_term(side.clone(), sort), *line, &mut sorts)?;
            }
        }
    }
    // Propagate sorts through equations whose sides are bare identifiers.
    loop {
        let mut changed = false;
        for (_, lhs, rhs) in &rows {
            let sort_of = |t: &RawTerm| match t {
                RawTerm::Ident(n) => sorts.get(n).copied(),
                other => known_sort(other),
            };
            let sort = sort_of(lhs).or_else(|| sort_of(rhs));
            if let Some(sort) = sort {
                for side in [lhs, rhs] {
                    if let RawTerm::Ident(n) = side {
                        if !sorts.contains_key(n) {
                            sorts.insert(n.clone(), sort);
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut set = ConstraintSet::new();
    for (line, lhs, rhs) in rows {
        let sort_of = |t: &RawTerm| match t {
            RawTerm::Ident(n) => sorts.get(n).copied().unwrap_or(Sort::Dim),
            other => known_sort(other).unwrap(),
        };
        let (ls, rs) = (sort_of(&lhs), sort_of(&rhs));
        let lhs = into_term(lhs, ls);
        let rhs = into_term(rhs, rs);
        for term in [&lhs, &rhs] {
            if let Err(violations) = validate_term(term) {
                return Err(ConstraintFileError {
                    line,
                    message: violations[0].to_string(),
                });
            }
        }
        let c = Constraint::new(lhs, rhs, Origin::Line(line)).map_err(|e| ConstraintFileError {
            line,
            message: e.to_string(),
        })?;
        set.push(c);
    }
    Ok(set)
}
