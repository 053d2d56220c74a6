//! Hindley-Milner inference over tensor types. Unifying two tensor types
//! emits a shape constraint; constraints are solved after every call site
//! and at the end of every top-level binding.

mod display;
mod state;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::builtins::BuiltinTable;
use crate::shape::ShapeTerm;
use crate::solver::{Constraint, Failure, Firing, Origin, RuleGroup};
use crate::span::Span;
use crate::syntax::{is_element_type, Annotation, Expr, ExprKind, FnExpr, Ident, Literal, Pattern, PatItem, Program};
use crate::types::{Elem, Type, TypeScheme};

pub use display::Renaming;
pub use state::{generalize, InferState};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TypeError {
    #[error("unbound identifier `{name}`")]
    Unbound { name: String, span: Span },
    #[error("`{name}` refers to itself; recursive definitions are not supported")]
    Recursive { name: String, span: Span },
    #[error("depends on `{name}`, which failed to type-check")]
    Unchecked { name: String, span: Span },
    #[error("type mismatch: expected {expected}, found {found}")]
    Mismatch {
        expected: String,
        found: String,
        span: Option<Span>,
    },
    #[error("element type mismatch: {left} vs {right}")]
    ElemMismatch {
        left: String,
        right: String,
        span: Option<Span>,
    },
    #[error("infinite type: '{var} occurs in {ty}")]
    Occurs { var: String, ty: String, span: Option<Span> },
    #[error("`{callee}` expects {expected} argument(s), found {found}")]
    Arity {
        callee: String,
        expected: usize,
        found: usize,
        span: Span,
    },
    #[error("{failure} (from {})", failure.offender.origin)]
    Shape { failure: Failure },
    #[error("invalid shape: {message}")]
    InvalidShape { message: String, span: Option<Span> },
    #[error("no signature of `{name}` fits these arguments ({last}); tried {}", tried.join(" | "))]
    NoOverload {
        name: String,
        tried: Vec<String>,
        last: Box<TypeError>,
        span: Span,
    },
}

impl TypeError {
    pub fn span(&self) -> Option<Span> {
        match self {
            TypeError::Unbound { span, .. }
            | TypeError::Recursive { span, .. }
            | TypeError::Unchecked { span, .. }
            | TypeError::Arity { span, .. }
            | TypeError::NoOverload { span, .. } => Some(*span),
            TypeError::Mismatch { span, .. }
            | TypeError::ElemMismatch { span, .. }
            | TypeError::Occurs { span, .. }
            | TypeError::InvalidShape { span, .. } => *span,
            TypeError::Shape { failure } => failure.offender.origin.span(),
        }
    }

    /// The solver rule behind a shape failure, if any.
    pub fn rule(&self) -> Option<RuleGroup> {
        match self {
            TypeError::Shape { failure } => Some(failure.rule),
            TypeError::NoOverload { last, .. } => last.rule(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Solved,
    PartiallySolved,
    Failed,
    /// Not checked because a binding it uses failed.
    Unchecked,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Solved => "solved",
            Status::PartiallySolved => "partially-solved",
            Status::Failed => "failed",
            Status::Unchecked => "unchecked",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct BindingResult {
    pub name: String,
    pub span: Span,
    pub status: Status,
    /// The generalized scheme, with generated variable names.
    pub scheme: Option<TypeScheme>,
    /// The signature with variables renamed for display.
    pub signature: Option<String>,
    pub residual: Vec<String>,
    pub error: Option<TypeError>,
    /// Shape constraints added while checking this binding.
    pub generated: Vec<Constraint>,
    pub substitution: BTreeMap<String, ShapeTerm>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    Binding(String),
    Note(String),
    Fired(Firing),
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEvent::Binding(name) => write!(f, "== {name}"),
            TraceEvent::Note(note) => write!(f, "-- {note}"),
            TraceEvent::Fired(firing) => write!(f, "{firing}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProgramResult {
    pub bindings: Vec<BindingResult>,
    pub trace: Vec<TraceEvent>,
}

impl ProgramResult {
    pub fn binding(&self, name: &str) -> Option<&BindingResult> {
        self.bindings.iter().find(|b| b.name == name)
    }
}

pub fn infer_program(program: &Program, builtins: &BuiltinTable) -> ProgramResult {
    run(program, builtins, false)
}

/// Like [`infer_program`], also recording every solver rule firing.
pub fn infer_program_traced(program: &Program, builtins: &BuiltinTable) -> ProgramResult {
    run(program, builtins, true)
}

fn run(program: &Program, builtins: &BuiltinTable, trace: bool) -> ProgramResult {
    let mut checker = Checker {
        builtins,
        globals: HashMap::new(),
        failed: HashSet::new(),
        current: Vec::new(),
        locals: Vec::new(),
        pending: Vec::new(),
        st: InferState::new(),
        trace: trace.then(Vec::new),
    };
    let mut bindings = Vec::new();
    for (idx, item) in program.items.iter().enumerate() {
        let names: Vec<&Ident> = item.bound_names();
        let label = match &item.pattern {
            Some(p) => pattern_label(p),
            None => format!("<expr {}>", idx + 1),
        };
        checker.event(|| TraceEvent::Binding(label.clone()));
        checker.st.reset();
        checker.pending.clear();
        checker.locals.clear();
        checker.current = names.iter().map(|id| id.name.clone()).collect();
        let outcome = checker.top_level(item.pattern.as_ref(), &item.expr);
        let generated = checker.st.generated().to_vec();
        let substitution = checker.st.shape_substitution().clone();
        match outcome {
            Ok(parts) => {
                let residual = checker.st.residual().clone();
                let status = if residual.is_empty() {
                    Status::Solved
                } else {
                    Status::PartiallySolved
                };
                let named: Vec<(String, Span, Type)> = match &item.pattern {
                    Some(_) => names
                        .iter()
                        .zip(parts)
                        .map(|(id, ty)| (id.name.clone(), id.span, ty))
                        .collect(),
                    None => vec![(label.clone(), item.span, parts.into_iter().next().expect("one part"))],
                };
                for (name, span, ty) in named {
                    let scheme = generalize(&BTreeSet::new(), &ty, &residual);
                    let residual_list: Vec<Constraint> = residual.iter().cloned().collect();
                    let renaming = Renaming::new(&ty, &residual_list);
                    let signature = renaming.apply(&ty).to_string();
                    let residual_text = residual_list.iter().map(|c| renaming.constraint(c)).collect();
                    if item.pattern.is_some() {
                        checker.globals.insert(name.clone(), scheme.clone());
                    }
                    bindings.push(BindingResult {
                        name,
                        span,
                        status,
                        scheme: Some(scheme),
                        signature: Some(signature),
                        residual: residual_text,
                        error: None,
                        generated: generated.clone(),
                        substitution: substitution.clone(),
                    });
                }
            }
            Err(error) => {
                let status = match error {
                    TypeError::Unchecked { .. } => Status::Unchecked,
                    _ => Status::Failed,
                };
                let entries: Vec<(String, Span)> = if names.is_empty() {
                    vec![(label.clone(), item.span)]
                } else {
                    names.iter().map(|id| (id.name.clone(), id.span)).collect()
                };
                for (name, span) in entries {
                    checker.failed.insert(name.clone());
                    bindings.push(BindingResult {
                        name,
                        span,
                        status,
                        scheme: None,
                        signature: None,
                        residual: Vec::new(),
                        error: Some(error.clone()),
                        generated: generated.clone(),
                        substitution: substitution.clone(),
                    });
                }
            }
        }
    }
    ProgramResult {
        bindings,
        trace: checker.trace.unwrap_or_default(),
    }
}

fn pattern_label(p: &Pattern) -> String {
    p.items
        .iter()
        .map(|i| match i {
            PatItem::Name(id) => id.name.as_str(),
            PatItem::Wildcard(_) => "_",
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// An overloaded builtin used as a value, waiting for its type to be
/// pinned down by the surrounding call.
#[derive(Debug, Clone)]
struct Pending {
    var: String,
    name: String,
    span: Span,
}

struct Checker<'a> {
    builtins: &'a BuiltinTable,
    globals: HashMap<String, TypeScheme>,
    failed: HashSet<String>,
    current: Vec<String>,
    locals: Vec<(String, Type)>,
    pending: Vec<Pending>,
    st: InferState,
    trace: Option<Vec<TraceEvent>>,
}

impl Checker<'_> {
    fn event(&mut self, e: impl FnOnce() -> TraceEvent) {
        if let Some(t) = &mut self.trace {
            t.push(e());
        }
    }

    fn solve(&mut self) -> Result<(), TypeError> {
        let trace = &mut self.trace;
        self.st
            .solve(&mut |f| {
                if let Some(t) = trace.as_mut() {
                    t.push(TraceEvent::Fired(f.clone()));
                }
            })
            .map_err(|failure| TypeError::Shape { failure })
    }

    /// Checks one top-level item and returns the final type of each name
    /// it binds (or of the expression itself).
    fn top_level(&mut self, pattern: Option<&Pattern>, expr: &Expr) -> Result<Vec<Type>, TypeError> {
        let ty = self.infer(expr)?;
        let parts = match pattern {
            Some(p) if p.items.len() > 1 => {
                let parts: Vec<Type> = p.items.iter().map(|_| Type::Var(self.st.fresh("p"))).collect();
                self.st
                    .unify(&Type::Tuple(parts.clone()), &ty, &Origin::Annotation { span: p.span })?;
                p.items
                    .iter()
                    .zip(parts)
                    .filter(|(i, _)| matches!(i, PatItem::Name(_)))
                    .map(|(_, t)| t)
                    .collect()
            }
            Some(p) if matches!(p.items[0], PatItem::Wildcard(_)) => Vec::new(),
            _ => vec![ty],
        };
        self.solve()?;
        self.default_pending()?;
        self.solve()?;
        parts
            .iter()
            .map(|t| {
                self.st.apply(t).map_err(|e| TypeError::InvalidShape {
                    message: e.to_string(),
                    span: Some(expr.span),
                })
            })
            .collect()
    }

    fn infer(&mut self, e: &Expr) -> Result<Type, TypeError> {
        match &e.kind {
            ExprKind::Var(name) => self.lookup(name, e.span),
            ExprKind::OpRef(op) => self.lookup(op.symbol(), e.span),
            ExprKind::Lit(Literal::Int(_)) => Ok(Type::scalar(Elem::Named("i32".into()))),
            ExprKind::Lit(Literal::Float(_) | Literal::NegInf) => {
                Ok(Type::scalar(Elem::Var(self.st.fresh("t"))))
            }
            ExprKind::Tuple(parts) => Ok(Type::Tuple(
                parts.iter().map(|p| self.infer(p)).collect::<Result<_, _>>()?,
            )),
            ExprKind::Binary { op, lhs, rhs } => {
                let args = vec![self.infer(lhs)?, self.infer(rhs)?];
                let callee = Ident {
                    name: op.symbol().to_string(),
                    span: e.span,
                };
                self.call(&callee, args, e.span)
            }
            ExprKind::Call { callee, args } => {
                let args = args.iter().map(|a| self.infer(a)).collect::<Result<_, _>>()?;
                self.call(callee, args, e.span)
            }
            ExprKind::Fn(f) => self.infer_fn(f),
        }
    }

    fn local(&self, name: &str) -> Option<&Type> {
        self.locals.iter().rev().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    fn check_global(&self, name: &str, span: Span) -> Result<(), TypeError> {
        if self.current.iter().any(|n| n == name) {
            return Err(TypeError::Recursive {
                name: name.to_string(),
                span,
            });
        }
        if self.failed.contains(name) {
            return Err(TypeError::Unchecked {
                name: name.to_string(),
                span,
            });
        }
        Ok(())
    }

    fn lookup(&mut self, name: &str, span: Span) -> Result<Type, TypeError> {
        if let Some(t) = self.local(name) {
            return Ok(t.clone());
        }
        self.check_global(name, span)?;
        let origin = Origin::Call {
            callee: name.to_string(),
            span,
        };
        if let Some(scheme) = self.globals.get(name).cloned() {
            return Ok(self.st.instantiate(&scheme, &origin));
        }
        match self.builtins.get(name) {
            Some([single]) => {
                let single = single.clone();
                Ok(self.st.instantiate(&single, &origin))
            }
            Some(_) => {
                let var = self.st.fresh(name);
                self.pending.push(Pending {
                    var: var.clone(),
                    name: name.to_string(),
                    span,
                });
                Ok(Type::Var(var))
            }
            None => Err(TypeError::Unbound {
                name: name.to_string(),
                span,
            }),
        }
    }

    fn call(&mut self, callee: &Ident, args: Vec<Type>, span: Span) -> Result<Type, TypeError> {
        let name = callee.name.as_str();
        let origin = Origin::Call {
            callee: name.to_string(),
            span,
        };
        let ret = if let Some(fty) = self.local(name).cloned() {
            let ret = Type::Var(self.st.fresh("r"));
            self.st.unify(&fty, &Type::Fn(args, Box::new(ret.clone())), &origin)?;
            self.solve()?;
            ret
        } else {
            self.check_global(name, callee.span)?;
            if let Some(scheme) = self.globals.get(name).cloned() {
                let fty = self.st.instantiate(&scheme, &origin);
                self.apply_call(name, &fty, &args, &origin, span)?
            } else {
                match self.builtins.get(name) {
                    Some([single]) => {
                        let single = single.clone();
                        let fty = self.st.instantiate(&single, &origin);
                        self.apply_call(name, &fty, &args, &origin, span)?
                    }
                    Some(candidates) => {
                        let candidates = candidates.to_vec();
                        self.resolve_overload(name, &candidates, &args, &origin, span)?
                    }
                    None => {
                        return Err(TypeError::Unbound {
                            name: name.to_string(),
                            span: callee.span,
                        })
                    }
                }
            }
        };
        self.resolve_pending()?;
        Ok(ret)
    }

    fn apply_call(
        &mut self,
        name: &str,
        fty: &Type,
        args: &[Type],
        origin: &Origin,
        span: Span,
    ) -> Result<Type, TypeError> {
        let ret = match self.st.resolve(fty) {
            Type::Fn(params, ret) => {
                if params.len() != args.len() {
                    return Err(TypeError::Arity {
                        callee: name.to_string(),
                        expected: params.len(),
                        found: args.len(),
                        span,
                    });
                }
                for (p, a) in params.iter().zip(args) {
                    self.st.unify(p, a, origin)?;
                }
                *ret
            }
            other => {
                let ret = Type::Var(self.st.fresh("r"));
                self.st.unify(&other, &Type::Fn(args.to_vec(), Box::new(ret.clone())), origin)?;
                ret
            }
        };
        self.solve()?;
        Ok(ret)
    }

    /// Tries each candidate in order against a snapshot of the state and
    /// commits the first that unifies and solves.
    fn resolve_overload(
        &mut self,
        name: &str,
        candidates: &[TypeScheme],
        args: &[Type],
        origin: &Origin,
        span: Span,
    ) -> Result<Type, TypeError> {
        let mut tried = Vec::new();
        let mut last = None;
        for (i, cand) in candidates.iter().enumerate() {
            self.event(|| TraceEvent::Note(format!("`{name}` candidate {}: {}", i + 1, cand.body)));
            let snapshot = (self.st.clone(), self.pending.clone());
            let fty = self.st.instantiate(cand, origin);
            match self.apply_call(name, &fty, args, origin, span) {
                Ok(ret) => return Ok(ret),
                Err(e) => {
                    self.event(|| TraceEvent::Note(format!("candidate {} rejected: {e}", i + 1)));
                    (self.st, self.pending) = snapshot;
                    tried.push(cand.body.to_string());
                    last = Some(e);
                }
            }
        }
        Err(TypeError::NoOverload {
            name: name.to_string(),
            tried,
            last: Box::new(last.expect("at least one candidate")),
            span,
        })
    }

    /// Resolves overloaded builtins used as values once their type is known.
    fn resolve_pending(&mut self) -> Result<(), TypeError> {
        while let Some(pos) = self
            .pending
            .iter()
            .position(|p| !matches!(self.st.resolve(&Type::Var(p.var.clone())), Type::Var(_)))
        {
            let p = self.pending.remove(pos);
            let candidates = self.builtins.get(&p.name).unwrap_or_default().to_vec();
            let origin = Origin::Call {
                callee: p.name.clone(),
                span: p.span,
            };
            let target = Type::Var(p.var.clone());
            let mut tried = Vec::new();
            let mut last = None;
            let mut done = false;
            for (i, cand) in candidates.iter().enumerate() {
                self.event(|| TraceEvent::Note(format!("`{}` candidate {}: {}", p.name, i + 1, cand.body)));
                let snapshot = (self.st.clone(), self.pending.clone());
                let inst = self.st.instantiate(cand, &origin);
                let attempt = self.st.unify(&inst, &target, &origin).and_then(|()| self.solve());
                match attempt {
                    Ok(()) => {
                        done = true;
                        break;
                    }
                    Err(e) => {
                        (self.st, self.pending) = snapshot;
                        tried.push(cand.body.to_string());
                        last = Some(e);
                    }
                }
            }
            if !done {
                return Err(TypeError::NoOverload {
                    name: p.name,
                    tried,
                    last: Box::new(last.expect("at least one candidate")),
                    span: p.span,
                });
            }
        }
        Ok(())
    }

    /// Gives overloaded values that nothing constrained their first
    /// candidate.
    fn default_pending(&mut self) -> Result<(), TypeError> {
        for p in std::mem::take(&mut self.pending) {
            let first = self.builtins.get(&p.name).and_then(|c| c.first()).cloned();
            if let Some(first) = first {
                let origin = Origin::Call {
                    callee: p.name.clone(),
                    span: p.span,
                };
                let inst = self.st.instantiate(&first, &origin);
                self.st.unify(&inst, &Type::Var(p.var), &origin)?;
            }
        }
        Ok(())
    }

    fn annotation_type(&mut self, a: &Annotation) -> Type {
        match a {
            Annotation::Tensor { elem, shape, .. } => {
                let elem = match elem {
                    Some(n) if is_element_type(n) => Elem::Named(n.clone()),
                    Some(n) => Elem::Var(n.clone()),
                    None => Elem::Var(self.st.fresh("t")),
                };
                Type::Tensor(elem, shape.clone().unwrap_or_else(crate::shape::Shape::scalar))
            }
            Annotation::Tuple(parts, _) => Type::Tuple(parts.iter().map(|p| self.annotation_type(p)).collect()),
        }
    }

    fn bind_pattern(&mut self, p: &Pattern, ty: Type) -> Result<(), TypeError> {
        if let [single] = p.items.as_slice() {
            if let PatItem::Name(id) = single {
                self.locals.push((id.name.clone(), ty));
            }
            return Ok(());
        }
        let parts: Vec<Type> = p.items.iter().map(|_| Type::Var(self.st.fresh("p"))).collect();
        self.st
            .unify(&Type::Tuple(parts.clone()), &ty, &Origin::Annotation { span: p.span })?;
        for (item, t) in p.items.iter().zip(parts) {
            if let PatItem::Name(id) = item {
                self.locals.push((id.name.clone(), t));
            }
        }
        Ok(())
    }

    fn infer_fn(&mut self, f: &FnExpr) -> Result<Type, TypeError> {
        let mark = self.locals.len();
        let mut params = Vec::new();
        for p in &f.params {
            let ty = match &p.annotation {
                Some(a) => self.annotation_type(a),
                None => Type::Var(self.st.fresh(&p.name.name)),
            };
            params.push(ty.clone());
            self.locals.push((p.name.name.clone(), ty));
        }
        for l in &f.body.lets {
            let ty = self.infer(&l.value)?;
            self.bind_pattern(&l.pattern, ty)?;
        }
        let result = self.infer(&f.body.result)?;
        if let Some(ret) = &f.ret {
            let expected = self.annotation_type(ret);
            self.st
                .unify(&result, &expected, &Origin::Annotation { span: ret.span() })?;
            self.solve()?;
        }
        self.locals.truncate(mark);
        Ok(Type::Fn(params, Box::new(result)))
    }
}
