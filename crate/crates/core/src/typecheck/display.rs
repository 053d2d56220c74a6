use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::shape::{substitute, DimExpr, Shape, ShapeTerm};
use crate::solver::Constraint;
use crate::types::{is_fresh, Elem, Type, VarKind};

const SHAPE_NAMES: &str = "abcdefghijklmnopqrstuvwxyz";
const ELEM_NAMES: [&str; 7] = ["t", "u", "v", "w", "x", "y", "z"];

/// Maps generated variable names to short readable ones. User-written
/// names are kept and never reused.
#[derive(Debug, Default)]
pub struct Renaming {
    shapes: BTreeMap<String, ShapeTerm>,
    elems: HashMap<String, String>,
    types: HashMap<String, String>,
}

fn next_name(pool: impl Fn(usize) -> String, taken: &mut BTreeSet<String>) -> String {
    (0..)
        .map(pool)
        .find(|n| !taken.contains(n))
        .inspect(|n| {
            taken.insert(n.clone());
        })
        .expect("unbounded pool")
}

fn letter(i: usize) -> String {
    let letters = SHAPE_NAMES.as_bytes();
    let base = char::from(letters[i % letters.len()]);
    match i / letters.len() {
        0 => base.to_string(),
        k => format!("{base}{k}"),
    }
}

fn elem_name(i: usize) -> String {
    match i / ELEM_NAMES.len() {
        0 => ELEM_NAMES[i].to_string(),
        k => format!("{}{k}", ELEM_NAMES[i % ELEM_NAMES.len()]),
    }
}

impl Renaming {
    /// Builds a renaming for the variables of `ty` followed by those of
    /// `extra`, in order of first appearance.
    pub fn new(ty: &Type, extra: &[Constraint]) -> Self {
        let mut order: Vec<(String, VarKind)> = Vec::new();
        let mut note = |v: &str, k: VarKind| {
            if !order.iter().any(|(n, kk)| n == v && same_space(*kk, k)) {
                order.push((v.to_string(), k));
            }
        };
        ty.visit_vars(&mut |v, k| note(v, k));
        for c in extra {
            for side in [&c.lhs, &c.rhs] {
                side.visit_vars(&mut |v, sort| note(v, sort.into()));
            }
        }
        let mut taken_shapes: BTreeSet<String> = BTreeSet::new();
        let mut taken_elems: BTreeSet<String> = BTreeSet::new();
        for (v, k) in &order {
            if !is_fresh(v) {
                match k {
                    VarKind::Elem => taken_elems.insert(v.clone()),
                    VarKind::Shape | VarKind::Dim => taken_shapes.insert(v.clone()),
                    VarKind::Type => false,
                };
            }
        }
        let mut r = Renaming::default();
        let mut taken_types = BTreeSet::new();
        for (v, k) in order {
            match k {
                VarKind::Type => {
                    let name = next_name(letter, &mut taken_types);
                    r.types.insert(v, name);
                }
                _ if !is_fresh(&v) => {}
                VarKind::Elem => {
                    let name = next_name(elem_name, &mut taken_elems);
                    r.elems.insert(v, name);
                }
                VarKind::Shape => {
                    let name = next_name(letter, &mut taken_shapes);
                    r.shapes.insert(v, ShapeTerm::S(Shape::Var(name)));
                }
                VarKind::Dim => {
                    let name = next_name(letter, &mut taken_shapes);
                    r.shapes.insert(v, ShapeTerm::D(DimExpr::Var(name)));
                }
            }
        }
        r
    }

    fn term(&self, t: &ShapeTerm) -> ShapeTerm {
        substitute(t, &self.shapes).unwrap_or_else(|_| t.replace_vars(&self.shapes).unwrap_or_else(|_| t.clone()))
    }

    pub fn apply(&self, ty: &Type) -> Type {
        ty.map_type_vars(&mut |v| Type::Var(self.types.get(v).cloned().unwrap_or_else(|| v.to_string())))
            .map_elems(&mut |e| match e {
                Elem::Var(v) => Elem::Var(self.elems.get(v).cloned().unwrap_or_else(|| v.clone())),
                Elem::Named(_) => e.clone(),
            })
            .map_shapes(&mut |s| match self.term(&ShapeTerm::S(s.clone())) {
                ShapeTerm::S(s) => Ok::<_, ()>(s),
                ShapeTerm::D(_) => unreachable!(),
            })
            .expect("infallible")
    }

    pub fn constraint(&self, c: &Constraint) -> String {
        format!("{} = {}", self.term(&c.lhs), self.term(&c.rhs))
    }
}

fn same_space(a: VarKind, b: VarKind) -> bool {
    let space = |k| match k {
        VarKind::Type => 0,
        VarKind::Elem => 1,
        VarKind::Shape | VarKind::Dim => 2,
    };
    space(a) == space(b)
}
