use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::shape::{DimExpr, Shape, ShapeError, ShapeTerm};
use crate::solver::{solve_traced, Constraint, ConstraintSet, Failure, Firing, Origin, SolveOutcome};
use crate::types::{base_name, is_fresh, Elem, Type, TypeScheme, VarKind, FRESH_MARK};

use super::TypeError;

/// Rounds of renaming `user = fresh` bindings before giving up.
const PREFER_USER_ROUNDS: usize = 64;

/// Substitutions, the pending shape constraints and a fresh-name counter.
/// Cloning takes a snapshot.
#[derive(Debug, Clone, Default)]
pub struct InferState {
    types: HashMap<String, Type>,
    elems: HashMap<String, Elem>,
    constraints: ConstraintSet,
    shapes: BTreeMap<String, ShapeTerm>,
    residual: ConstraintSet,
    generated: Vec<Constraint>,
    counter: usize,
}

impl InferState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Clears per-binding state, keeping the name counter.
    pub fn reset(&mut self) {
        *self = InferState {
            counter: self.counter,
            ..InferState::default()
        };
    }

    pub fn fresh(&mut self, hint: &str) -> String {
        self.counter += 1;
        format!("{}{FRESH_MARK}{}", base_name(hint), self.counter)
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.constraints
    }

    /// Every constraint added since the last reset, in order.
    pub fn generated(&self) -> &[Constraint] {
        &self.generated
    }

    /// The shape substitution found by the most recent solve.
    pub fn shape_substitution(&self) -> &BTreeMap<String, ShapeTerm> {
        &self.shapes
    }

    pub fn add_constraint(&mut self, c: Constraint) {
        if c.lhs == c.rhs {
            return;
        }
        self.generated.push(c.clone());
        self.constraints.push(c);
    }

    fn shallow(&self, t: &Type) -> Type {
        let mut t = t.clone();
        while let Type::Var(v) = &t {
            match self.types.get(v) {
                Some(next) => t = next.clone(),
                None => break,
            }
        }
        t
    }

    fn elem(&self, e: &Elem) -> Elem {
        let mut e = e.clone();
        while let Elem::Var(v) = &e {
            match self.elems.get(v) {
                Some(next) => e = next.clone(),
                None => break,
            }
        }
        e
    }

    /// Resolves type and element variables throughout `t`.
    pub fn resolve(&self, t: &Type) -> Type {
        match self.shallow(t) {
            Type::Var(v) => Type::Var(v),
            Type::Tensor(e, s) => Type::Tensor(self.elem(&e), s),
            Type::Tuple(parts) => Type::Tuple(parts.iter().map(|p| self.resolve(p)).collect()),
            Type::Fn(params, ret) => Type::Fn(
                params.iter().map(|p| self.resolve(p)).collect(),
                Box::new(self.resolve(&ret)),
            ),
        }
    }

    /// Resolves `t` and applies the current shape substitution.
    pub fn apply(&self, t: &Type) -> Result<Type, ShapeError> {
        let mut t = self.resolve(t);
        for _ in 0..PREFER_USER_ROUNDS {
            let next = t.substitute_shapes(&self.shapes)?;
            if next == t {
                break;
            }
            t = next;
        }
        Ok(t)
    }

    pub fn unify(&mut self, a: &Type, b: &Type, origin: &Origin) -> Result<(), TypeError> {
        let (a, b) = (self.shallow(a), self.shallow(b));
        let span = origin.span();
        match (&a, &b) {
            (Type::Var(x), Type::Var(y)) if x == y => Ok(()),
            (Type::Var(x), t) | (t, Type::Var(x)) => {
                let t = self.resolve(t);
                if t.mentions_type_var(x) {
                    return Err(TypeError::Occurs {
                        var: x.clone(),
                        ty: t.to_string(),
                        span,
                    });
                }
                self.types.insert(x.clone(), t);
                Ok(())
            }
            (Type::Tensor(e1, s1), Type::Tensor(e2, s2)) => {
                self.unify_elem(e1, e2, origin)?;
                let c = Constraint::new(ShapeTerm::S(s1.clone()), ShapeTerm::S(s2.clone()), origin.clone())
                    .expect("shapes on both sides");
                self.add_constraint(c);
                Ok(())
            }
            (Type::Tuple(xs), Type::Tuple(ys)) if xs.len() == ys.len() => {
                for (x, y) in xs.iter().zip(ys) {
                    self.unify(x, y, origin)?;
                }
                Ok(())
            }
            (Type::Fn(p1, r1), Type::Fn(p2, r2)) if p1.len() == p2.len() => {
                for (x, y) in p1.iter().zip(p2) {
                    self.unify(x, y, origin)?;
                }
                self.unify(r1, r2, origin)
            }
            _ => Err(TypeError::Mismatch {
                expected: self.resolve(&a).to_string(),
                found: self.resolve(&b).to_string(),
                span,
            }),
        }
    }

    fn unify_elem(&mut self, a: &Elem, b: &Elem, origin: &Origin) -> Result<(), TypeError> {
        match (self.elem(a), self.elem(b)) {
            (Elem::Var(x), Elem::Var(y)) if x == y => Ok(()),
            (Elem::Var(x), e) | (e, Elem::Var(x)) => {
                self.elems.insert(x, e);
                Ok(())
            }
            (Elem::Named(x), Elem::Named(y)) if x == y => Ok(()),
            (x, y) => Err(TypeError::ElemMismatch {
                left: x.to_string(),
                right: y.to_string(),
                span: origin.span(),
            }),
        }
    }

    /// Replaces quantified variables with fresh ones of the same kind and
    /// adds the scheme's constraints, tagged with `origin`.
    pub fn instantiate(&mut self, scheme: &TypeScheme, origin: &Origin) -> Type {
        if scheme.vars.is_empty() && scheme.constraints.is_empty() {
            return scheme.body.clone();
        }
        let mut types = HashMap::new();
        let mut elems = HashMap::new();
        let mut shapes = BTreeMap::new();
        for (v, kind) in &scheme.vars {
            let f = self.fresh(v);
            match kind {
                VarKind::Type => {
                    types.insert(v.clone(), Type::Var(f));
                }
                VarKind::Elem => {
                    elems.insert(v.clone(), Elem::Var(f));
                }
                VarKind::Shape => {
                    shapes.insert(v.clone(), ShapeTerm::S(Shape::Var(f)));
                }
                VarKind::Dim => {
                    shapes.insert(v.clone(), ShapeTerm::D(DimExpr::Var(f)));
                }
            }
        }
        let rename = |term: &ShapeTerm| term.replace_vars(&shapes).expect("kinds match");
        let body = scheme
            .body
            .map_type_vars(&mut |v| types.get(v).cloned().unwrap_or_else(|| Type::Var(v.to_string())))
            .map_elems(&mut |e| match e {
                Elem::Var(v) => elems.get(v).cloned().unwrap_or_else(|| e.clone()),
                Elem::Named(_) => e.clone(),
            })
            .map_shapes(&mut |s| match rename(&ShapeTerm::S(s.clone())) {
                ShapeTerm::S(s) => Ok::<_, ()>(s),
                ShapeTerm::D(_) => unreachable!(),
            })
            .expect("infallible");
        for c in &scheme.constraints {
            let c = Constraint::new(rename(&c.lhs), rename(&c.rhs), origin.clone()).expect("sorts preserved");
            self.add_constraint(c);
        }
        body
    }

    /// Solves the accumulated constraints to a fixed point. Bindings of a
    /// user-written variable to a generated one are flipped so the user's
    /// name survives, then the set is solved again.
    pub fn solve(&mut self, on_fire: &mut dyn FnMut(&Firing)) -> Result<(), Failure> {
        for _ in 0..PREFER_USER_ROUNDS {
            let solution = match solve_traced(&self.constraints, &mut *on_fire) {
                SolveOutcome::Solved(s) => s,
                SolveOutcome::Failed(f) => return Err(f),
            };
            let mut flipped = false;
            let items: Vec<Constraint> = solution
                .constraints
                .iter()
                .map(|c| match (c.lhs.as_var(), c.rhs.as_var()) {
                    (Some(l), Some(r)) if !is_fresh(l) && is_fresh(r) => {
                        flipped = true;
                        c.derive(c.rhs.clone(), c.lhs.clone())
                    }
                    _ => c.clone(),
                })
                .collect();
            self.shapes = solution.substitution;
            self.residual = solution.residual;
            self.constraints = items.into_iter().collect();
            if !flipped {
                return Ok(());
            }
        }
        Ok(())
    }

    /// Constraints left at the fixed point that are not variable bindings.
    pub fn residual(&self) -> &ConstraintSet {
        &self.residual
    }
}

/// Quantifies the variables of `ty` and `residual`, except those tied to
/// `env_free` directly or through a residual constraint.
pub fn generalize(env_free: &BTreeSet<String>, ty: &Type, residual: &ConstraintSet) -> TypeScheme {
    let mut blocked = env_free.clone();
    let mut kept = ConstraintSet::new();
    for c in residual {
        let mut vars = Vec::new();
        for side in [&c.lhs, &c.rhs] {
            side.visit_vars(&mut |v, _| vars.push(v.to_string()));
        }
        if vars.iter().any(|v| env_free.contains(v)) {
            blocked.extend(vars);
        } else {
            kept.push(c.clone());
        }
    }
    let mut quantified: Vec<(String, VarKind)> = Vec::new();
    let mut add = |v: &str, k: VarKind| {
        if !blocked.contains(v) && !quantified.iter().any(|(n, _)| n == v) {
            quantified.push((v.to_string(), k));
        }
    };
    ty.visit_vars(&mut |v, k| add(v, k));
    for c in &kept {
        for side in [&c.lhs, &c.rhs] {
            side.visit_vars(&mut |v, sort| add(v, sort.into()));
        }
    }
    TypeScheme {
        vars: quantified,
        constraints: kept,
        body: ty.clone(),
    }
}
