//! Front end for the Axon language: shape algebra, a fixed-point shape
//! constraint solver, the surface syntax, and Hindley-Milner inference
//! extended with tensor shapes.

pub mod builtins;
pub mod shape;
pub mod solver;
pub mod span;
pub mod syntax;
pub mod typecheck;
pub mod types;

pub use builtins::BuiltinTable;
pub use shape::{DimExpr, DimOp, Shape, ShapeTerm};
pub use solver::{Constraint, ConstraintSet, SolveOutcome};
pub use span::Span;
