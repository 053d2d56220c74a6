use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use axon_core::builtins::{default_table, register, scheme, BuiltinTable};
use axon_core::shape::{parse_shape, simp, simp_dim, substitute, DimExpr, DimOp, Shape, ShapeTerm};
use axon_core::solver::{Origin, RuleGroup};
use axon_core::syntax::parse_program;
use axon_core::typecheck::*;
use axon_core::types::{base_name, Elem, Type, TypeScheme, VarKind};
use proptest::prelude::*;

fn corpus(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name);
    fs::read_to_string(path).unwrap()
}

fn check_with(text: &str, table: &BuiltinTable) -> ProgramResult {
    infer_program(&parse_program(text).unwrap(), table)
}

fn check(text: &str) -> ProgramResult {
    check_with(text, &default_table())
}

fn signature(result: &ProgramResult, name: &str) -> String {
    let b = result.binding(name).unwrap_or_else(|| panic!("no binding {name}"));
    match &b.signature {
        Some(s) => s.clone(),
        None => panic!("{name} failed: {:?}", b.error),
    }
}

fn error(result: &ProgramResult, name: &str) -> TypeError {
    result.binding(name).unwrap().error.clone().expect("expected an error")
}

/// The value bound to the generated variable whose base name is `hint`.
fn bound_by_hint(b: &BindingResult, hint: &str) -> Vec<String> {
    b.substitution
        .iter()
        .filter(|(k, _)| base_name(k) == hint && k.contains('$'))
        .map(|(_, v)| v.to_string())
        .collect()
}

fn strip_fresh(text: &str) -> String {
    let mut out = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '$' {
            while chars.peek().is_some_and(|d| d.is_ascii_digit()) {
                chars.next();
            }
        } else {
            out.push(c);
        }
    }
    out
}

#[test]
fn square_matmul_signature() {
    let start = Instant::now();
    let r = check(&corpus("matmul_square.axon"));
    assert_eq!(signature(&r, "f"), "(f32 [n,n], f32 [n,n]) -> f32 [n,n]");
    assert!(start.elapsed() < Duration::from_secs(1));
    let f = r.binding("f").unwrap();
    assert_eq!(f.status, Status::Solved);
    assert_eq!(f.substitution.get("r").unwrap().to_string(), "[n,n]");
}

#[test]
fn matmul_generates_the_three_worked_constraints() {
    let r = check(&corpus("matmul_square.axon"));
    let generated: Vec<String> = r.binding("f").unwrap().generated.iter().map(|c| strip_fresh(&c.to_string())).collect();
    assert_eq!(
        generated,
        vec!["s @ [d1,d2] = [n,n]", "s @ [d2,d3] = [n,n]", "s @ [d1,d3] = r"]
    );
}

#[test]
fn conv_input_is_recovered_from_output() {
    let r = check(&corpus("conv_reverse.axon"));
    assert_eq!(signature(&r, "g"), "(t [4,8,1031,263], t [4,8,8,8]) -> t [4,8,1024,256]");
    let g = r.binding("g").unwrap();
    assert_eq!(g.substitution.get("i").unwrap().to_string(), "[4,8,1031,263]");
    assert_eq!(bound_by_hint(g, "h"), vec!["1031"]);
    assert_eq!(bound_by_hint(g, "w"), vec!["263"]);
}

#[test]
fn conv_forward_direction() {
    // 1 + 1031 - 8 = 1024 and 1 + 263 - 8 = 256.
    assert_eq!((1 + 1031 - 8, 1 + 263 - 8), (1024, 256));
    let r = check("c = fn (x : f32 [4,8,1031,263], w : f32 [4,8,8,8]) { conv(x, w) }");
    assert_eq!(signature(&r, "c"), "(f32 [4,8,1031,263], f32 [4,8,8,8]) -> f32 [4,8,1024,256]");
}

#[test]
fn scalar_type_flows_to_second_argument() {
    let r = check(&corpus("scalar_max.axon"));
    assert_eq!(signature(&r, "h"), "(f32 [], f32 []) -> f32 []");
}

#[test]
fn softmax_keeps_rank_polymorphism() {
    let r = check(&corpus("softmax.axon"));
    assert_eq!(signature(&r, "softmax"), "f32 [a] @ b -> f32 [a] @ b");
    let scheme = r.binding("softmax").unwrap().scheme.clone().unwrap();
    assert!(scheme.vars.iter().any(|(_, k)| *k == VarKind::Shape));
}

#[test]
fn softmax_subtraction_falls_back_to_broadcast() {
    let r = infer_program_traced(&parse_program(&corpus("softmax.axon")).unwrap(), &default_table());
    let notes: Vec<String> = r
        .trace
        .iter()
        .filter_map(|e| match e {
            TraceEvent::Note(n) => Some(n.clone()),
            _ => None,
        })
        .collect();
    let minus = notes.iter().position(|n| n.starts_with("`-` candidate 1")).unwrap();
    assert!(notes[minus + 1].contains("candidate 1 rejected") && notes[minus + 1].contains("occurs"), "{notes:?}");
    assert!(notes[minus + 2].starts_with("`-` candidate 2"));
    assert!(!notes[minus + 3].contains("candidate 2 rejected"));
}

#[test]
fn attention_signature() {
    let r = check(&corpus("attention.axon"));
    assert_eq!(signature(&r, "softmax"), "t [m,n] -> t [m,n]");
    assert_eq!(signature(&r, "attention"), "(t [a,b], t [c,b], t [c,d]) -> t [a,d]");
}

fn tensor_shape(t: &Type) -> &Shape {
    match t {
        Type::Tensor(_, s) => s,
        other => panic!("not a tensor: {other}"),
    }
}

fn outer_dim(s: &Shape) -> DimExpr {
    match simp(&ShapeTerm::S(s.clone())).unwrap() {
        ShapeTerm::S(Shape::Append(parts)) => match &parts[0] {
            Shape::Concrete(dims) => dims[0].clone(),
            other => panic!("{other}"),
        },
        ShapeTerm::S(Shape::Concrete(dims)) => dims[0].clone(),
        other => panic!("{other}"),
    }
}

#[test]
fn bidirectional_output_doubles_outer_dimension() {
    let r = check(&corpus("bidir_rnn.axon"));
    for name in ["bidir", "model"] {
        let scheme = r.binding(name).unwrap().scheme.clone().unwrap();
        let Type::Fn(params, ret) = &scheme.body else { panic!() };
        let d = outer_dim(tensor_shape(&params[4]));
        let out = outer_dim(tensor_shape(ret));
        let doubled = simp_dim(&DimExpr::op(DimOp::Add, d.clone(), d.clone())).unwrap();
        assert_eq!(out, doubled, "{name}");
        assert_eq!(doubled, DimExpr::op(DimOp::Mul, d, DimExpr::Const(2)));
    }
}

#[test]
fn residual_rnn_preserves_input_shape() {
    let r = check(&corpus("residual_rnn.axon"));
    assert_eq!(signature(&r, "residual"), "('a, ('a, t a) -> ('a, t a), t [b] @ a) -> t [b] @ a");
    let scheme = r.binding("stack").unwrap().scheme.clone().unwrap();
    let Type::Fn(params, ret) = &scheme.body else { panic!() };
    assert_eq!(tensor_shape(&params[3]), tensor_shape(ret));
}

#[test]
fn lstm_loop_output_follows_cell_state() {
    let r = check(&corpus("lstm.axon"));
    let scheme = r.binding("lstm").unwrap().scheme.clone().unwrap();
    let Type::Fn(params, ret) = &scheme.body else { panic!() };
    let Type::Tuple(out) = ret.as_ref() else { panic!() };
    // The final state has the shapes of the initial state.
    assert_eq!(out[0], Type::Tuple(vec![params[0].clone(), params[1].clone()]));
    // Each output slice has the shape of the cell state it emits.
    let x = tensor_shape(&params[2]);
    let y = tensor_shape(&out[1]);
    assert_eq!(outer_dim(x), outer_dim(y));
    let Shape::Append(parts) = y else { panic!("{y}") };
    assert_eq!(&parts[1], tensor_shape(&params[1]));
}

#[test]
fn subgraph_instances_are_independent() {
    let r = check("g = fn (a, b) { a + b };\nf = fn (x : f32 [2], y : f32 [3,4]) { g(x, x), g(y, y) }");
    assert_eq!(signature(&r, "f"), "(f32 [2], f32 [3,4]) -> (f32 [2], f32 [3,4])");
    let r = check(&corpus("subgraph.axon"));
    assert_eq!(signature(&r, "g"), "(t a, t a) -> t a");
    assert_eq!(signature(&r, "f"), "(t a, t a) -> t a");
    let r = check(&corpus("pointwise.axon"));
    assert_eq!(signature(&r, "f"), "(t a, t a) -> (t a, t a)");
}

#[test]
fn concat_adds_outer_dimensions() {
    let r = check("c = fn (x : f32 [3] @ s, y : f32 [5] @ s) { concat(x, y) }");
    assert_eq!(signature(&r, "c"), "(f32 [3] @ s, f32 [5] @ s) -> f32 [8] @ s");
}

#[test]
fn float_literals_take_the_element_type_of_their_context() {
    let r = check("k = fn (x : f64 [n]) { x + 0f }");
    assert_eq!(signature(&r, "k"), "f64 [n] -> f64 [n]");
    let r = check("k = fn (x : f64 [n]) { x + 1 }");
    assert!(matches!(error(&r, "k"), TypeError::NoOverload { .. }));
}

#[test]
fn registered_builtins_are_used() {
    let table = register(default_table(), "relu", vec![scheme("(t s) -> t s")], false).unwrap();
    let r = check_with("act = fn (x) { relu(x) }", &table);
    assert_eq!(signature(&r, "act"), "t a -> t a");
}

#[test]
fn replacing_conv_changes_the_inferred_input() {
    // With one element of padding on each side: out = in + 2 - filter + 1.
    let solve = |out: u64| (1..4096u64).find(|i| i + 2 + 1 == out + 8).unwrap();
    let (h, w) = (solve(1024), solve(256));
    assert_eq!((h, w), (1029, 261));
    let padded = scheme("(t [n, c, h, w], t [k, c, r, s]) -> t [n, c, (+ 3 (- h r)), (+ 3 (- w s))]");
    let table = register(default_table(), "conv", vec![padded], true).unwrap();
    let r = check_with(&corpus("conv_reverse.axon"), &table);
    let g = r.binding("g").unwrap();
    assert_eq!(g.substitution.get("i").unwrap().to_string(), format!("[4,8,{h},{w}]"));
}

#[test]
fn matmul_dimension_mismatch_names_matmul() {
    let r = check(&corpus("errors/matmul_mismatch.axon"));
    let b = r.binding("bad").unwrap();
    assert_eq!(b.status, Status::Failed);
    let TypeError::Shape { failure } = b.error.clone().unwrap() else { panic!() };
    assert_eq!(failure.rule, RuleGroup::Basic);
    assert_eq!(failure.offender.to_string(), "3 = 4");
    assert!(matches!(&failure.offender.origin, Origin::Call { callee, .. } if callee == "matmul"));
}

#[test]
fn type_errors() {
    let r = check(&corpus("errors/elem_mismatch.axon"));
    let TypeError::NoOverload { last, tried, .. } = error(&r, "mixed") else { panic!() };
    assert_eq!(tried.len(), 3);
    assert!(matches!(*last, TypeError::ElemMismatch { .. }));

    let r = check(&corpus("errors/unbound.axon"));
    assert!(matches!(error(&r, "model"), TypeError::Unbound { ref name, .. } if name == "relu"));
    assert_eq!(r.binding("user").unwrap().status, Status::Unchecked);

    let r = check("f = fn (x) { f(x) }");
    assert!(matches!(error(&r, "f"), TypeError::Recursive { .. }));

    let r = check("g = fn (x) { exp(x, x) }");
    assert!(matches!(error(&r, "g"), TypeError::Arity { expected: 1, found: 2, .. }));

    let r = check("g = fn (x : f32 [2]) { a, b = x; a }");
    assert!(matches!(error(&r, "g"), TypeError::Mismatch { .. }));

    let r = check("g = fn (x) { y = x; x(y) }");
    assert!(matches!(error(&r, "g"), TypeError::Occurs { .. }));
}

#[test]
fn errors_carry_spans_inside_the_source() {
    let text = corpus("errors/matmul_mismatch.axon");
    let r = check(&text);
    let span = r.binding("bad").unwrap().error.as_ref().unwrap().span().unwrap();
    assert_eq!(&text[span.start..span.end], "matmul(x, y)");
}

#[test]
fn unify_emits_shape_constraints() {
    let mut st = InferState::new();
    let f32 = || Elem::Named("f32".into());
    st.unify(
        &Type::Tensor(f32(), Shape::var("s1")),
        &Type::Tensor(f32(), parse_shape("[2]").unwrap()),
        &Origin::Unknown,
    )
    .unwrap();
    let cs: Vec<String> = st.constraints().iter().map(|c| c.to_string()).collect();
    assert_eq!(cs, vec!["s1 = [2]"]);

    let mut st = InferState::new();
    st.unify(&Type::Var("a".into()), &Type::Var("a".into()), &Origin::Unknown).unwrap();
    assert!(st.constraints().is_empty());
    assert_eq!(st.resolve(&Type::Var("a".into())), Type::Var("a".into()));

    let a = Type::Var("a".into());
    let err = st.unify(&a, &Type::Fn(vec![a.clone()], Box::new(a.clone())), &Origin::Unknown);
    assert!(matches!(err, Err(TypeError::Occurs { .. })));

    let err = st.unify(
        &Type::Tensor(f32(), Shape::scalar()),
        &Type::Tensor(Elem::Named("i32".into()), Shape::scalar()),
        &Origin::Unknown,
    );
    assert!(matches!(err, Err(TypeError::ElemMismatch { .. })));
    let err = st.unify(&Type::Tuple(vec![a.clone(), a.clone()]), &Type::Tensor(f32(), Shape::scalar()), &Origin::Unknown);
    assert!(matches!(err, Err(TypeError::Mismatch { .. })));
}

fn var_names(t: &Type) -> BTreeSet<String> {
    t.free_vars().into_iter().map(|(n, _)| n).collect()
}

#[test]
fn instantiation_is_fresh() {
    let table = default_table();
    let matmul = &table.get("matmul").unwrap()[0];
    let mut st = InferState::new();
    let a = st.instantiate(matmul, &Origin::Unknown);
    let b = st.instantiate(matmul, &Origin::Unknown);
    assert_eq!(var_names(&a).len(), 5);
    assert!(var_names(&a).is_disjoint(&var_names(&b)));
    let mono = TypeScheme::mono(Type::Var("q".into()));
    assert_eq!(st.instantiate(&mono, &Origin::Unknown), Type::Var("q".into()));
}

#[test]
fn generalization() {
    let scalar = check("sq = fn (a : f32) { a * a }");
    let scheme = scalar.binding("sq").unwrap().scheme.clone().unwrap();
    assert!(scheme.vars.iter().all(|(_, k)| !matches!(k, VarKind::Shape | VarKind::Dim)));

    let residual = axon_core::solver::parse_constraint_file("(+ a b) = 7").unwrap();
    let ty = Type::Tensor(Elem::Var("t".into()), parse_shape("[a, b, c]").unwrap());
    let env: BTreeSet<String> = ["a".to_string()].into();
    let scheme = generalize(&env, &ty, &residual);
    let names: Vec<&str> = scheme.vars.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, vec!["t", "c"]);
    assert!(scheme.constraints.is_empty());
    let scheme = generalize(&BTreeSet::new(), &ty, &residual);
    assert_eq!(scheme.vars.len(), 4);
    assert_eq!(scheme.constraints.len(), 1);
}

#[test]
fn residual_constraints_make_a_binding_partial() {
    let r = check("p = fn (x : f32 [(+ a b)], y : f32 [7]) { x + y }");
    let b = r.binding("p").unwrap();
    assert_eq!(b.status, Status::PartiallySolved);
    assert_eq!(b.residual, vec!["(+ a b) = 7"]);
    assert_eq!(b.signature.as_deref(), Some("(f32 [(+ a b)], f32 [7]) -> f32 [7]"));
    // Its scheme carries the residual into every use site.
    let r = check("p = fn (x : f32 [(+ a b)], y : f32 [7]) { x + y };\nq = fn (z : f32 [(+ a b)]) { p(z, z) }");
    assert_eq!(r.binding("q").unwrap().status, Status::PartiallySolved);
}

fn corpus_programs() -> Vec<String> {
    [
        "pointwise.axon",
        "subgraph.axon",
        "matmul_square.axon",
        "conv_reverse.axon",
        "scalar_max.axon",
        "softmax.axon",
        "attention.axon",
        "lstm.axon",
        "bidir_rnn.axon",
        "residual_rnn.axon",
    ]
    .iter()
    .map(|n| corpus(n))
    .collect()
}

#[test]
fn final_substitution_discharges_generated_constraints() {
    for text in corpus_programs() {
        let r = check(&text);
        for b in &r.bindings {
            assert!(b.error.is_none(), "{}: {:?}", b.name, b.error);
            let residual: Vec<(ShapeTerm, ShapeTerm)> = b
                .scheme
                .as_ref()
                .unwrap()
                .constraints
                .iter()
                .map(|c| (substitute(&c.lhs, &b.substitution).unwrap(), substitute(&c.rhs, &b.substitution).unwrap()))
                .collect();
            for c in &b.generated {
                let l = substitute(&c.lhs, &b.substitution).unwrap();
                let r = substitute(&c.rhs, &b.substitution).unwrap();
                assert!(l == r || residual.contains(&(l.clone(), r.clone())), "{}: {c} became {l} = {r}", b.name);
            }
        }
    }
}

#[test]
fn inference_is_deterministic() {
    for text in corpus_programs() {
        let p = parse_program(&text).unwrap();
        let a = infer_program_traced(&p, &default_table());
        let b = infer_program_traced(&p, &default_table());
        assert_eq!(a.trace, b.trace);
        let sigs = |r: &ProgramResult| r.bindings.iter().map(|b| b.signature.clone()).collect::<Vec<_>>();
        assert_eq!(sigs(&a), sigs(&b));
    }
}

#[test]
fn display_renaming_is_a_bijection() {
    for text in corpus_programs() {
        let r = check(&text);
        for b in &r.bindings {
            let raw = &b.scheme.as_ref().unwrap().body;
            let shown = Renaming::new(raw, &[]).apply(raw);
            let count = |t: &Type| {
                let mut seen = BTreeSet::new();
                t.visit_vars(&mut |v, k| {
                    seen.insert((v.to_string(), k == VarKind::Type, k == VarKind::Elem));
                });
                seen.len()
            };
            assert_eq!(count(raw), count(&shown), "{}", b.name);
        }
    }
}

fn arb_shape() -> impl Strategy<Value = String> {
    prop::collection::vec(prop_oneof![(1u64..9).prop_map(|n| n.to_string()), "[mn]".prop_map(String::from)], 0..4)
        .prop_map(|dims| format!("[{}]", dims.join(", ")))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn same_shape_operands_commit_the_first_candidate(shape in arb_shape(), op in prop::sample::select(vec!["+", "-", "*", "/"])) {
        let text = format!("k = fn (x : f32 {shape}, y : f32 {shape}) {{ x {op} y }}");
        let r = infer_program_traced(&parse_program(&text).unwrap(), &default_table());
        let rejected = r.trace.iter().any(|e| matches!(e, TraceEvent::Note(n) if n.contains("rejected")));
        prop_assert!(!rejected);
        let shown = parse_shape(&shape).unwrap().to_string();
        prop_assert_eq!(signature(&r, "k"), format!("(f32 {shown}, f32 {shown}) -> f32 {shown}"));
    }
}
