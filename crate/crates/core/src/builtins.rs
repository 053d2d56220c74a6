//! Type and shape signatures of the built-in operators.
//!
//! Pointwise operators carry three candidates, tried in order: same shape,
//! then a right operand matching the left's trailing dimensions, then the
//! mirror image.

use std::collections::BTreeMap;

use crate::syntax::parse_signature;
use crate::types::TypeScheme;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegisterError {
    #[error("builtin `{0}` is already registered")]
    Duplicate(String),
    #[error("signature for `{name}` has free variables: {vars}")]
    Open { name: String, vars: String },
    #[error("builtin `{0}` needs at least one signature")]
    Empty(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuiltinTable {
    entries: BTreeMap<String, Vec<TypeScheme>>,
}

const POINTWISE: [&str; 3] = [
    "(t s, t s) -> t s",
    "(t [d] @ s, t s) -> t [d] @ s",
    "(t s, t [d] @ s) -> t [d] @ s",
];

const SIGNATURES: [(&str, &str); 10] = [
    ("exp", "(t s) -> t s"),
    ("matmul", "(t s @ [d1, d2], t s @ [d2, d3]) -> t s @ [d1, d3]"),
    ("concat", "(t [d1] @ s, t [d2] @ s) -> t [(+ d1 d2)] @ s"),
    (
        "conv",
        "(t [n, c, h, w], t [k, c, r, s]) -> t [n, c, (+ 1 (- h r)), (+ 1 (- w s))]",
    ),
    ("transpose", "(t s @ [d1, d2]) -> t s @ [d2, d1]"),
    ("map", "((t s) -> u r, t [d] @ s) -> u [d] @ r"),
    ("reduce", "((t [], t []) -> t [], t [], t [d] @ s) -> t s"),
    ("reverse", "(t [d] @ s) -> t [d] @ s"),
    (
        "loop",
        "(State, (State, t s) -> (State, u r), t [d] @ s) -> (State, u [d] @ r)",
    ),
    (
        "lstmStep",
        "(x, h, c, wi, wf, wo, wc, ri, rf, ro, rc, bi, bf, bo, bc) -> (t s1, t s2)",
    ),
];

/// Parses a closed scheme from signature notation.
///
/// # Panics
/// On malformed text; only used for signatures written in this crate.
pub fn scheme(text: &str) -> TypeScheme {
    let body = parse_signature(text).unwrap_or_else(|e| panic!("bad signature `{text}`: {e}"));
    TypeScheme::closed(body)
}

pub fn default_table() -> BuiltinTable {
    let mut table = BuiltinTable::default();
    for op in ["+", "-", "*", "/", "max"] {
        table.entries.insert(op.to_string(), POINTWISE.iter().map(|s| scheme(s)).collect());
    }
    for (name, sig) in SIGNATURES {
        table.entries.insert(name.to_string(), vec![scheme(sig)]);
    }
    table
}

/// Adds `name` to the table. Replacing an existing entry requires `replace`.
pub fn register(
    mut table: BuiltinTable,
    name: &str,
    schemes: Vec<TypeScheme>,
    replace: bool,
) -> Result<BuiltinTable, RegisterError> {
    if schemes.is_empty() {
        return Err(RegisterError::Empty(name.to_string()));
    }
    if table.entries.contains_key(name) && !replace {
        return Err(RegisterError::Duplicate(name.to_string()));
    }
    for s in &schemes {
        let free = s.free_vars();
        if !free.is_empty() {
            return Err(RegisterError::Open {
                name: name.to_string(),
                vars: free.into_iter().collect::<Vec<_>>().join(", "),
            });
        }
    }
    table.entries.insert(name.to_string(), schemes);
    Ok(table)
}

impl BuiltinTable {
    pub fn get(&self, name: &str) -> Option<&[TypeScheme]> {
        self.entries.get(name).map(Vec::as_slice)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Type, VarKind};

    #[test]
    fn default_table_is_closed_and_ordered() {
        let table = default_table();
        assert_eq!(table.names().count(), 15);
        for name in table.names() {
            assert!(table.get(name).unwrap().iter().all(TypeScheme::is_closed), "{name}");
        }
        let plus = table.get("+").unwrap();
        assert_eq!(plus.len(), 3);
        assert_eq!(plus[0].body.to_string(), "(t s, t s) -> t s");
        assert_eq!(plus[1].body.to_string(), "(t [d] @ s, t s) -> t [d] @ s");
    }

    #[test]
    fn signatures_sort_their_variables() {
        let table = default_table();
        let matmul = &table.get("matmul").unwrap()[0];
        let kinds: Vec<_> = matmul.vars.iter().map(|(n, k)| (n.as_str(), *k)).collect();
        assert_eq!(
            kinds,
            vec![("t", VarKind::Elem), ("s", VarKind::Shape), ("d1", VarKind::Dim), ("d2", VarKind::Dim), ("d3", VarKind::Dim)]
        );
        let lp = &table.get("loop").unwrap()[0];
        assert!(lp.vars.contains(&("State".to_string(), VarKind::Type)));
        let lstm = &table.get("lstmStep").unwrap()[0];
        let Type::Fn(params, _) = &lstm.body else { panic!() };
        assert_eq!(params.len(), 15);
    }

    #[test]
    fn register_checks_duplicates_and_closure() {
        let table = default_table();
        let relu = scheme("(t s) -> t s");
        let table = register(table, "relu", vec![relu.clone()], false).unwrap();
        assert_eq!(table.get("relu").unwrap(), &[relu]);
        let err = register(table.clone(), "matmul", vec![scheme("(t s) -> t s")], false).unwrap_err();
        assert_eq!(err, RegisterError::Duplicate("matmul".into()));
        assert!(register(table.clone(), "matmul", vec![scheme("(t s) -> t s")], true).is_ok());
        let open = TypeScheme::mono(parse_signature("(t s) -> t s").unwrap());
        assert!(matches!(register(table, "bad", vec![open], false), Err(RegisterError::Open { .. })));
    }
}
