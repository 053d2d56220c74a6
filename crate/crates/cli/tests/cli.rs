use std::path::PathBuf;
use std::process::Command;

use axon_cli::{check_file, cmd_check, cmd_solve, EXIT_FAILURE, EXIT_IO, EXIT_OK, EXIT_PARSE};
use serde_json::Value;

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn axon(args: &[&str]) -> (String, String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_axon"))
        .current_dir(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../.."))
        .args(args)
        .output()
        .unwrap();
    (
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
        out.status.code().unwrap(),
    )
}

#[test]
fn check_prints_signature() {
    let (stdout, _, code) = axon(&["check", "corpus/matmul_square.axon"]);
    assert_eq!(code, 0);
    assert_eq!(stdout, "f : (f32 [n,n], f32 [n,n]) -> f32 [n,n]\n");
}

#[test]
fn mismatch_names_matmul() {
    let (stdout, stderr, code) = axon(&["check", "corpus/errors/matmul_mismatch.axon"]);
    assert_eq!(code, 1);
    assert!(stdout.contains("bad : failed"));
    assert!(stderr.contains("call to `matmul`") && stderr.contains("[basic]"), "{stderr}");
}

#[test]
fn exit_codes_partition_outcomes() {
    assert_eq!(cmd_check(&[corpus("softmax.axon")], false, false).code, EXIT_OK);
    assert_eq!(cmd_check(&[corpus("errors/elem_mismatch.axon")], false, false).code, EXIT_FAILURE);
    assert_eq!(cmd_check(&[corpus("errors/ellipsis.axon")], false, false).code, EXIT_PARSE);
    assert_eq!(cmd_check(&[corpus("missing.axon")], false, false).code, EXIT_IO);
    assert_eq!(cmd_solve(&corpus("matmul.cons"), false).code, EXIT_OK);
    assert_eq!(cmd_solve(&corpus("errors/occurs.cons"), false).code, EXIT_FAILURE);
    assert_eq!(cmd_solve(&corpus("softmax.axon"), false).code, EXIT_PARSE);
    assert_eq!(cmd_solve(&corpus("missing.cons"), false).code, EXIT_IO);
    // The worst outcome across several files wins.
    let both = cmd_check(&[corpus("softmax.axon"), corpus("errors/ellipsis.axon"), corpus("errors/unbound.axon")], false, false);
    assert_eq!(both.code, EXIT_PARSE);
}

#[test]
fn multiple_files_keep_input_order() {
    let files = [corpus("softmax.axon"), corpus("matmul_square.axon"), corpus("attention.axon")];
    let out = cmd_check(&files, false, false);
    let headers: Vec<&str> = out.stdout.lines().filter(|l| l.starts_with("# ")).collect();
    assert_eq!(headers.len(), 3);
    for (h, f) in headers.iter().zip(&files) {
        assert_eq!(h[2..], f.display().to_string());
    }
}

#[test]
fn solve_prints_substitutions() {
    let out = cmd_solve(&corpus("matmul.cons"), false);
    assert_eq!(out.stdout, "d1 = n\nd2 = n\nd3 = n\nr = [n,n]\ns = []\n");
    let out = cmd_solve(&corpus("errors/append_dim.cons"), false);
    assert!(out.stderr.contains(":1: error:") && out.stderr.contains("[append-dimensionality]"), "{}", out.stderr);
}

#[test]
fn json_report_follows_schema() {
    let (stdout, _, code) = axon(&["check", "--json", "corpus/softmax.axon", "corpus/errors/unbound.axon"]);
    assert_eq!(code, 1);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["schema"], 1);
    for b in v["bindings"].as_array().unwrap() {
        let keys: Vec<&str> = b.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys.len(), 5);
        for k in ["file", "name", "signature", "status", "residual"] {
            assert!(keys.contains(&k));
        }
        assert!(["solved", "partially-solved", "failed", "unchecked"].contains(&b["status"].as_str().unwrap()));
    }
    for d in v["diagnostics"].as_array().unwrap() {
        for k in ["severity", "file", "line", "col", "message"] {
            assert!(d.get(k).is_some(), "{k} missing");
        }
    }
    assert_eq!(v["bindings"][0]["signature"], "f32 [a] @ b -> f32 [a] @ b");
}

#[test]
fn every_failed_binding_has_a_diagnostic() {
    for name in ["errors/matmul_mismatch.axon", "errors/elem_mismatch.axon", "errors/unbound.axon", "lstm.axon"] {
        let r = check_file(&corpus(name), false);
        for b in r.bindings.iter().filter(|b| b.status == "failed" || b.status == "unchecked") {
            assert!(r.diagnostics.iter().any(|d| d.message.contains(&format!("`{}`", b.name))), "{name}: {}", b.name);
        }
    }
}

#[test]
fn partial_bindings_list_residuals() {
    let dir = std::env::temp_dir().join(format!("axon-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("partial.axon");
    std::fs::write(&path, "p = fn (x : f32 [(+ a b)], y : f32 [7]) { x + y }\n").unwrap();
    let out = cmd_check(&[path.clone()], false, false);
    assert_eq!(out.code, 0);
    assert_eq!(out.stdout, "p : (f32 [(+ a b)], f32 [7]) -> f32 [7]\n  where (+ a b) = 7\n");
    let r = check_file(&path, false);
    assert_eq!(r.bindings[0].status, "partially-solved");
    assert_eq!(r.bindings[0].residual, vec!["(+ a b) = 7"]);
    std::fs::remove_dir_all(dir).unwrap();
}

fn first(trace: &str, rule: &str) -> usize {
    trace
        .lines()
        .position(|l| l.starts_with(&format!("{rule} (")))
        .unwrap_or_else(|| panic!("no {rule} firing in\n{trace}"))
}

#[test]
fn traces_follow_the_worked_order() {
    let (_, trace, _) = axon(&["solve", "--trace", "corpus/matmul.cons"]);
    assert!(first(&trace, "empty-shapes") < first(&trace, "unpacking"));
    let (_, trace, _) = axon(&["solve", "--trace", "corpus/conv.cons"]);
    assert!(first(&trace, "unpacking") < first(&trace, "arithmetic-simplification"));

    let (stdout, trace, code) = axon(&["check", "--trace", "corpus/matmul_square.axon"]);
    assert_eq!(code, 0);
    assert_eq!(stdout, "f : (f32 [n,n], f32 [n,n]) -> f32 [n,n]\n");
    assert!(trace.contains("== f"));
    assert!(first(&trace, "empty-shapes") < first(&trace, "unpacking"));
    let (_, trace, _) = axon(&["check", "--trace", "corpus/conv_reverse.axon"]);
    assert!(first(&trace, "unpacking") < first(&trace, "arithmetic-simplification"));
}

#[test]
fn trace_stays_off_stdout_in_json_mode() {
    let (stdout, stderr, _) = axon(&["check", "--json", "--trace", "corpus/matmul_square.axon"]);
    assert!(serde_json::from_str::<Value>(&stdout).is_ok());
    assert!(stderr.contains("unpacking"));
}
