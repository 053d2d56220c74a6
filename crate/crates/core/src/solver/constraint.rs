use std::collections::HashSet;
use std::fmt;

use crate::shape::{simp, Sort, ShapeTerm};
use crate::span::Span;

/// Where a constraint came from. Rewrites copy the origin of the constraint
/// they were derived from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Origin {
    /// A shape annotation written by the user.
    Annotation { span: Span },
    /// Unification of an argument or result at a call site.
    Call { callee: String, span: Span },
    /// A line of a constraint file (1-based).
    Line(usize),
    Unknown,
}

impl Origin {
    pub fn span(&self) -> Option<Span> {
        match self {
            Origin::Annotation { span } | Origin::Call { span, .. } => Some(*span),
            Origin::Line(_) | Origin::Unknown => None,
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Annotation { .. } => f.write_str("user annotation"),
            Origin::Call { callee, .. } => write!(f, "call to `{callee}`"),
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Unknown => f.write_str("unknown origin"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("cannot equate a {lhs} with a {rhs}")]
pub struct SortError {
    pub lhs: Sort,
    pub rhs: Sort,
}

/// An equation between two shapes or two dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub lhs: ShapeTerm,
    pub rhs: ShapeTerm,
    pub origin: Origin,
}

impl Constraint {
    pub fn new(lhs: ShapeTerm, rhs: ShapeTerm, origin: Origin) -> Result<Self, SortError> {
        if lhs.sort() != rhs.sort() {
            return Err(SortError {
                lhs: lhs.sort(),
                rhs: rhs.sort(),
            });
        }
        Ok(Constraint { lhs, rhs, origin })
    }

    /// Builds a derived constraint that keeps this constraint's origin.
    pub(crate) fn derive(&self, lhs: ShapeTerm, rhs: ShapeTerm) -> Constraint {
        debug_assert_eq!(lhs.sort(), rhs.sort());
        Constraint {
            lhs,
            rhs,
            origin: self.origin.clone(),
        }
    }

    pub fn mentions(&self, name: &str) -> bool {
        self.lhs.mentions(name) || self.rhs.mentions(name)
    }

    /// Both sides run through `simp`, falling back to the raw side when
    /// simplification fails.
    pub fn canonical_sides(&self) -> (ShapeTerm, ShapeTerm) {
        let lhs = simp(&self.lhs).unwrap_or_else(|_| self.lhs.clone());
        let rhs = simp(&self.rhs).unwrap_or_else(|_| self.rhs.clone());
        (lhs, rhs)
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

/// Insertion-ordered constraints with duplicates (under `simp`) removed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstraintSet {
    items: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a constraint unless an equivalent one is already present.
    /// Returns whether the constraint was added.
    pub fn push(&mut self, c: Constraint) -> bool {
        let key = c.canonical_sides();
        if self.items.iter().any(|e| e.canonical_sides() == key) {
            return false;
        }
        self.items.push(c);
        true
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Constraint> {
        self.items.iter()
    }

    pub fn get(&self, i: usize) -> Option<&Constraint> {
        self.items.get(i)
    }

    pub fn as_slice(&self) -> &[Constraint] {
        &self.items
    }

    pub fn into_vec(self) -> Vec<Constraint> {
        self.items
    }

    pub(crate) fn from_vec_dedup(items: Vec<Constraint>) -> Self {
        let mut seen = HashSet::new();
        let items = items
            .into_iter()
            .filter(|c| seen.insert(c.canonical_sides()))
            .collect();
        ConstraintSet { items }
    }
}

impl FromIterator<Constraint> for ConstraintSet {
    fn from_iter<I: IntoIterator<Item = Constraint>>(iter: I) -> Self {
        Self::from_vec_dedup(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a ConstraintSet {
    type Item = &'a Constraint;
    type IntoIter = std::slice::Iter<'a, Constraint>;

    fn into_iter(self) -> Self::IntoIter {
        self.items.iter()
    }
}

impl fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.items {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}
