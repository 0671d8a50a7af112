use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use patternforge::dsl::{parse_annotation, parse_model};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn cmd() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_patternforge"));
    c.current_dir(root()).env_remove("PATTERNFORGE_CATALOG");
    c
}

fn run(args: &[&str]) -> Output {
    cmd().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn check_exit_codes() {
    let pos = run(&["check", "fixtures/composite/positive.model", "--pattern", "Composite"]);
    assert_eq!(pos.status.code(), Some(0));
    assert!(stdout(&pos).starts_with("Composite: satisfied"));
    let neg = run(&["check", "fixtures/composite/negative.model", "--pattern", "Composite"]);
    assert_eq!(neg.status.code(), Some(1));
    assert!(stderr(&neg).is_empty());
}

#[test]
fn lint_reports_feasible_equations() {
    let o = run(&["lint", "catalog/singleton.pat"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "catalog/singleton.pat: valid, equations feasible\n");
}

#[test]
fn usage_errors_exit_2_on_stderr() {
    for args in [&["frobnicate"][..], &["check", "--no-such-flag"], &["check", "fixtures/composite/positive.model"], &["--bound", "0", "catalog", "list"]] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(o.stdout.is_empty(), "{args:?}");
        assert!(stderr(&o).contains("Usage") || stderr(&o).contains("error"), "{args:?}");
    }
    let o = run(&["check", "fixtures/composite/positive.model", "--pattern", "Nonexistent"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown pattern `Nonexistent`"));
}

#[test]
fn json_goes_to_stdout_only() {
    let o = run(&["check", "fixtures/singleton/negative.model", "-p", "Singleton", "--format", "json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let r = &v["results"][0];
    assert_eq!(r["verdict"], "not_satisfied");
    assert_eq!(r["violations"].as_array().unwrap().len(), 1);
    assert_eq!(r["violations"][0]["kind"], "forbidden");
    assert!(o.stderr.is_empty());
}

#[test]
fn bound_overrun_is_flagged() {
    let o = run(&["find", "fixtures/composite/three_leaves.model", "-p", "Composite", "--maximal", "--bound", "2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["beyond_bound"], true);
    let table = run(&["find", "fixtures/composite/three_leaves.model", "-p", "Composite", "--maximal", "--bound", "2"]);
    assert!(stdout(&table).contains("inconclusive beyond bound 2"));
}

#[test]
fn expand_writes_model_and_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("composite.model");
    let o = run(&["expand", "-p", "Composite", "--counts", "leaves=3,operations=1", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc = parse_model(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let leaves = doc.graph.edges().filter(|e| e.ty == "inherits").count();
    assert_eq!(leaves, 4);
    let prov: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("composite.prov.json")).unwrap()).unwrap();
    let prov = prov.as_array().unwrap();
    assert_eq!(prov.len(), doc.graph.node_count() + doc.graph.edge_count());
    let leaf_replicas = prov.iter().filter(|p| p["part"] == "leaves" && p["kind"] == "node").count();
    assert_eq!(leaf_replicas, 3);

    let bad = run(&["expand", "-p", "Composite", "--counts", "leaves=0,operations=1"]);
    assert_eq!(bad.status.code(), Some(2));
    let missing = run(&["expand", "-p", "Composite", "--counts", "leaves=2"]);
    assert!(stderr(&missing).contains("no count for operations"));
}

#[test]
fn annotate_writes_annotation_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.ann.json");
    let o = run(&["annotate", "fixtures/observer/positive.model", "--patterns", "all", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let ann = parse_annotation(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(ann.occurrences.iter().any(|o| o.pattern == "Observer"));
    let roles = ann.roles_by_element();
    assert!(roles["ClockTimer"].contains(&("Observer", "ConcreteSubject")));
    assert!(stdout(&o).contains("Observer"));
}

#[test]
fn catalog_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(root().join("catalog/singleton.pat"), dir.path().join("singleton.pat")).unwrap();
    let o = cmd().args(["catalog", "list"]).env("PATTERNFORGE_CATALOG", dir.path()).output().unwrap();
    assert_eq!(stdout(&o).lines().count(), 1);
    assert!(stdout(&o).starts_with("Singleton"));
    let flag = run(&["catalog", "list", "--catalog", dir.path().to_str().unwrap()]);
    assert_eq!(stdout(&flag), stdout(&o));
    let builtin = run(&["catalog", "list"]);
    assert_eq!(stdout(&builtin).lines().count(), 24);

    std::fs::write(dir.path().join("broken.pat"), "pattern B {\n  root { class }\n}\n").unwrap();
    let o = cmd().args(["catalog", "list"]).env("PATTERNFORGE_CATALOG", dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("broken.pat:2:"), "{}", stderr(&o));
}

#[test]
fn pattern_file_instead_of_catalog_name() {
    let o = run(&["check", "fixtures/singleton/positive.model", "--pattern", "catalog/singleton.pat"]);
    assert_eq!(o.status.code(), Some(0));
    let s = run(&["solve", "-p", "catalog/composite.pat", "--minimal", "--bound", "2"]);
    assert_eq!(stdout(&s), "Composite: Composite>=0, operations>0, leaves>0\n1 minimal solutions within bound 2\n  operations=1, leaves=1\n");
}
