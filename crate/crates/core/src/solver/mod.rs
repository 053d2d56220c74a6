//! Fixed-point rewriting of shape constraint sets.
//!
//! The solver repeatedly scans the constraints in insertion order. For each
//! constraint it tries the rule groups in priority order (see
//! [`RuleGroup::ORDER`]); the first rule that changes the set fires, and the
//! scan restarts from the first constraint. When nothing fires the set is at
//! a fixed point and the result is a [`Solution`]. Failure rules stop the
//! solve immediately with a [`Failure`] that carries the offending constraint.

mod constraint;
mod file;
mod rules;

use std::collections::BTreeMap;
use std::fmt;

use crate::shape::{ShapeTerm, Sort};

pub use constraint::{Constraint, ConstraintSet, Origin, SortError};
pub use file::{parse_constraint_file, ConstraintFileError};

/// Rewrites allowed per solve before giving up.
pub const ITERATION_CAP: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleGroup {
    Basic,
    Reorder,
    Unpack,
    EmptyShapes,
    AppendUnpack,
    AppendDim,
    Simplify,
    Arith,
    Partial,
}

impl RuleGroup {
    pub const ORDER: [RuleGroup; 9] = [
        RuleGroup::Basic,
        RuleGroup::Reorder,
        RuleGroup::Unpack,
        RuleGroup::EmptyShapes,
        RuleGroup::AppendUnpack,
        RuleGroup::AppendDim,
        RuleGroup::Simplify,
        RuleGroup::Arith,
        RuleGroup::Partial,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleGroup::Basic => "basic",
            RuleGroup::Reorder => "reordering",
            RuleGroup::Unpack => "unpacking",
            RuleGroup::EmptyShapes => "empty-shapes",
            RuleGroup::AppendUnpack => "append-unpacking",
            RuleGroup::AppendDim => "append-dimensionality",
            RuleGroup::Simplify => "simplification",
            RuleGroup::Arith => "arithmetic-simplification",
            RuleGroup::Partial => "partial-expression-simplification",
        }
    }
}

impl fmt::Display for RuleGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FailKind {
    DistinctConstants,
    /// `*` equated with a constant or an arithmetic expression.
    StarMismatch,
    Occurs,
    RankMismatch,
    MinRankExceeded,
    /// An arithmetic equation with no positive integer solution.
    ArithInversion,
    InvalidDimension,
    Overflow,
    /// A name used both as a shape and as a dimension.
    SortConflict,
    IterationCap,
}

impl fmt::Display for FailKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailKind::DistinctConstants => "distinct constants",
            FailKind::StarMismatch => "variable dimension mismatch",
            FailKind::Occurs => "occurs check",
            FailKind::RankMismatch => "rank mismatch",
            FailKind::MinRankExceeded => "minimum rank exceeded",
            FailKind::ArithInversion => "unsatisfiable arithmetic",
            FailKind::InvalidDimension => "invalid dimension",
            FailKind::Overflow => "overflow",
            FailKind::SortConflict => "sort conflict",
            FailKind::IterationCap => "iteration cap",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub offender: Constraint,
    pub rule: RuleGroup,
    pub kind: FailKind,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} rule failed ({}) on `{}`: {}",
            self.rule, self.kind, self.offender, self.message
        )
    }
}

/// One rule application.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Firing {
    pub rule: RuleGroup,
    /// Index of the constraint the rule matched on.
    pub index: usize,
    pub action: &'static str,
    /// Constraints removed or rewritten by the rule.
    pub before: Vec<Constraint>,
    /// Their replacements.
    pub after: Vec<Constraint>,
}

impl fmt::Display for Firing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |cs: &[Constraint]| {
            if cs.is_empty() {
                "(removed)".to_string()
            } else {
                cs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("; ")
            }
        };
        write!(
            f,
            "{} ({}) #{}: {}  =>  {}",
            self.rule,
            self.action,
            self.index,
            join(&self.before),
            join(&self.after)
        )
    }
}

/// A fixed point: bindings for variables plus whatever could not be reduced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub substitution: BTreeMap<String, ShapeTerm>,
    pub residual: ConstraintSet,
    /// The whole fixed-point set, bindings included, in order.
    pub constraints: ConstraintSet,
}

impl Solution {
    fn from_fixed_point(set: ConstraintSet) -> Self {
        let mut substitution = BTreeMap::new();
        let mut residual = ConstraintSet::new();
        for c in &set {
            match c.lhs.as_var() {
                Some(a) if !c.rhs.mentions(a) && !substitution.contains_key(a) => {
                    substitution.insert(a.to_string(), c.rhs.clone());
                }
                _ => {
                    residual.push(c.clone());
                }
            }
        }
        Solution {
            substitution,
            residual,
            constraints: set,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.residual.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    Solved(Solution),
    Failed(Failure),
}

impl SolveOutcome {
    pub fn solution(&self) -> Option<&Solution> {
        match self {
            SolveOutcome::Solved(s) => Some(s),
            SolveOutcome::Failed(_) => None,
        }
    }

    pub fn failure(&self) -> Option<&Failure> {
        match self {
            SolveOutcome::Failed(f) => Some(f),
            SolveOutcome::Solved(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Fired(Firing, ConstraintSet),
    FixedPoint,
    Failed(Failure),
}

/// Applies the first matching rule, scanning constraints in order and, for
/// each constraint, the rule groups in priority order.
pub fn step(set: &ConstraintSet) -> Step {
    for i in 0..set.len() {
        for group in RuleGroup::ORDER {
            match rules::try_group(group, set, i) {
                Ok(Some((next, firing))) => {
                    return Step::Fired(firing, ConstraintSet::from_vec_dedup(next));
                }
                Ok(None) => {}
                Err(failure) => return Step::Failed(failure),
            }
        }
    }
    Step::FixedPoint
}

fn apply_group(group: RuleGroup, set: &mut ConstraintSet) -> Result<Option<Firing>, Failure> {
    for i in 0..set.len() {
        if let Some((next, firing)) = rules::try_group(group, set, i)? {
            *set = ConstraintSet::from_vec_dedup(next);
            return Ok(Some(firing));
        }
    }
    Ok(None)
}

macro_rules! group_entry_points {
    ($($(#[$doc:meta])* $name:ident => $group:ident;)*) => {$(
        $(#[$doc])*
        pub fn $name(set: &mut ConstraintSet) -> Result<Option<Firing>, Failure> {
            apply_group(RuleGroup::$group, set)
        }
    )*};
}

group_entry_points! {
    /// Tautology removal, variable replacement, constant and occurs failures.
    apply_rule_basic => Basic;
    /// Moves constants to the right and lone variables to the left.
    apply_rule_reorder => Reorder;
    apply_rule_unpack => Unpack;
    apply_rule_empty_shapes => EmptyShapes;
    apply_rule_append_unpack => AppendUnpack;
    apply_rule_append_dim => AppendDim;
    apply_rule_simplify => Simplify;
    apply_rule_arith => Arith;
    apply_rule_partial => Partial;
}

fn check_sorts(set: &ConstraintSet) -> Result<(), Failure> {
    let mut sorts: BTreeMap<String, Sort> = BTreeMap::new();
    for c in set {
        let mut conflict = None;
        for term in [&c.lhs, &c.rhs] {
            term.visit_vars(&mut |v, sort| {
                let prev = *sorts.entry(v.to_string()).or_insert(sort);
                if prev != sort && conflict.is_none() {
                    conflict = Some(v.to_string());
                }
            });
        }
        if let Some(name) = conflict {
            return Err(Failure {
                offender: c.clone(),
                rule: RuleGroup::Basic,
                kind: FailKind::SortConflict,
                message: format!("`{name}` is used both as a shape and as a dimension"),
            });
        }
    }
    Ok(())
}

pub fn solve(set: &ConstraintSet) -> SolveOutcome {
    solve_traced(set, |_| {})
}

/// Like [`solve`], calling `on_fire` for every rule application.
pub fn solve_traced(set: &ConstraintSet, mut on_fire: impl FnMut(&Firing)) -> SolveOutcome {
    if let Err(failure) = check_sorts(set) {
        return SolveOutcome::Failed(failure);
    }
    let mut current = set.clone();
    for _ in 0..ITERATION_CAP {
        match step(&current) {
            Step::Fired(firing, next) => {
                on_fire(&firing);
                current = next;
            }
            Step::FixedPoint => return SolveOutcome::Solved(Solution::from_fixed_point(current)),
            Step::Failed(failure) => return SolveOutcome::Failed(failure),
        }
    }
    let offender = current
        .get(0)
        .cloned()
        .unwrap_or_else(|| set.get(0).cloned().expect("a non-empty set fired rules"));
    SolveOutcome::Failed(Failure {
        offender,
        rule: RuleGroup::Basic,
        kind: FailKind::IterationCap,
        message: format!("no fixed point after {ITERATION_CAP} rule applications"),
    })
}
