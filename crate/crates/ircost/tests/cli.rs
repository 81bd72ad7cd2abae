use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ircost::load_module;
use ircost::report::{analyze_module, to_json};
use ircost_core::energy::{EnergyModel, GroupModel};
use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corpus(name: &str) -> PathBuf {
    root().join("corpus").join(name)
}

fn ircost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ircost")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = ircost(args);
    assert_eq!(out.status.code(), Some(0), "{:?}: {}", args, String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn scratch(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ircost-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_prints_formulas() {
    let out = ok(&["analyze", s(&corpus("mac.mir"))]);
    assert_eq!(out, "@mac: E(a, b, P) = 12P + 6\n");
    let out = ok(&["analyze", s(&corpus("proc.mir"))]);
    assert!(out.starts_with("@proc: E(v, l) = 18l + 5\n"), "{}", out);
    assert!(out.contains("depends on data"), "{}", out);
}

#[test]
fn analyze_json_matches_the_library() {
    let path = corpus("levenshtein.mir");
    let module = load_module(&path).unwrap();
    let (report, _, _) = analyze_module(&module, &EnergyModel::Group(GroupModel::unit())).unwrap();
    let out = ok(&["analyze", s(&path), "--format", "json"]);
    assert_eq!(out, to_json(&report));
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["schema"], "ircost.analysis/1");
    assert_eq!(v["functions"][0]["name"], "levenshtein");
}

#[test]
fn every_bundled_model_analyses_the_corpus() {
    for model in ["unit.json", "arm_group.json", "xs1.json", "tiwari.json"] {
        let m = root().join("models").join(model);
        ok(&["analyze", s(&corpus("sortbysimilarity.mir")), "--model", s(&m)]);
    }
    let map = root().join("models/mappings/insertion_sort.json");
    ok(&["analyze", s(&corpus("insertion_sort.mir")), "--mapping", s(&map)]);
    let wrong = root().join("models/mappings/mac.json");
    let out = ircost(&["analyze", s(&corpus("insertion_sort.mir")), "--mapping", s(&wrong)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn input_errors_exit_one() {
    let out = ircost(&["analyze", s(&corpus("mac.mir")), "--model", "/nonexistent/model.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let bad = scratch("bad.mir", "define @f() {\nentry:\n  %x = frob 1\n  ret\n}\n");
    let out = ircost(&["analyze", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("3:") && err.contains("frob"), "{}", err);

    assert_eq!(ircost(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(ircost(&["analyze"]).status.code(), Some(1));
    assert_eq!(ircost(&["--help"]).status.code(), Some(0));
}

#[test]
fn unsolvable_relations_exit_two() {
    let fib = scratch(
        "fib.mir",
        "define @fib(%n) {\nentry:\n  %c = icmp slt %n, 2\n  br %c, label %base, label %rec\nbase:\n  ret 1\n\
         rec:\n  %a = sub %n, 1\n  %b = sub %n, 2\n  %x = call @fib(%a)\n  %y = call @fib(%b)\n  %s = add %x, %y\n  ret %s\n}\n",
    );
    let out = ircost(&["analyze", s(&fib)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("no closed form"));
}

#[test]
fn emitted_relations_solve_to_the_same_formula() {
    let dir = std::env::temp_dir().join(format!("ircost-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let crs = dir.join("proc.json");
    let out = ok(&["analyze", s(&corpus("proc.mir")), "--emit-crs", s(&crs), "--format", "json"]);
    let analysis: Value = serde_json::from_str(&out).unwrap();
    let solved = ok(&["solve", s(&crs), "--format", "json", "--relation", "proc::entry", "--args", "1000,4"]);
    let solved: Value = serde_json::from_str(&solved).unwrap();
    assert_eq!(solved["schema"], "ircost.solve/1");
    let want = &analysis["functions"][0]["formula"]["text"];
    let forms = solved["forms"].as_object().unwrap();
    assert_eq!(&forms["proc::entry"]["text"], want);
    // 18l + 5 at l = 4.
    assert_eq!(solved["numeric"]["value"], "77");
}

#[test]
fn text_relations_are_accepted() {
    let sys = scratch(
        "loop.crs",
        "C_f(n) = 1 + C_l(n, 0)\nC_l(n, i) = 2 if i >= n\nC_l(n, i) = 3 + C_l(n, i + 1) if i < n\n",
    );
    let out = ok(&["solve", s(&sys), "--relation", "f", "--args", "5"]);
    assert!(out.contains("C_f(n) = 3 + 3*max(0, n)\n"), "{}", out);
    assert!(out.contains("C_f(5) = 18 "), "{}", out);
}

#[test]
fn simulate_reports_value_and_energy() {
    let out = ok(&["simulate", s(&corpus("gcd.mir")), "--fn", "gcd", "--args", "12,18", "--format", "json"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["schema"], "ircost.simulate/1");
    assert_eq!(v["return_value"], "6");
    let plain = ok(&["simulate", s(&corpus("gcd.mir")), "--fn", "gcd", "--args", "12,18"]);
    let extracted = ok(&["simulate", s(&corpus("gcd.mir")), "--fn", "gcd", "--args", "12,18", "--extracted"]);
    assert_eq!(plain.lines().find(|l| l.contains("energy")), extracted.lines().find(|l| l.contains("energy")));

    let mem = scratch("mem.json", r#"{"memory": {"100": 3, "101": 1, "102": 2}}"#);
    let out = ok(&[
        "simulate",
        s(&corpus("insertion_sort.mir")),
        "--fn",
        "sort",
        "--args",
        "100,3",
        "--memory",
        s(&mem),
        "--format",
        "json",
    ]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["memory"]["100"], "1");
    assert_eq!(v["memory"]["102"], "3");
}

#[test]
fn compare_on_deterministic_program_has_no_gap() {
    let out = ok(&["compare", s(&corpus("matmul.mir")), "--harness", "matmul", "--sweep", "P=1..4", "--format", "json"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["schema"], "ircost.compare/1");
    assert_eq!(v["summary"]["points"], 4);
    assert_eq!(v["summary"]["mean_rel_gap"], 0.0);
    assert_eq!(v["upper_bound_holds"], true);

    let out = ok(&["compare", s(&corpus("insertion_sort.mir")), "--harness", "sort", "--sweep", "P=2..5", "--random", "3"]);
    assert!(out.contains("worst"), "{}", out);
    let out = ircost(&["compare", s(&corpus("mac.mir")), "--harness", "mac", "--sweep", "Q=1..3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn dump_cfg_formats() {
    let dot = ok(&["dump-cfg", s(&corpus("insertion_sort.mir"))]);
    assert!(dot.starts_with("digraph"), "{}", dot);
    let json = ok(&["dump-cfg", s(&corpus("insertion_sort.mir")), "--extracted", "--format", "json"]);
    let v: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["schema"], "ircost.cfg/1");
    let out = ircost(&["dump-cfg", s(&corpus("mac.mir")), "--fn", "nosuch"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn dump_args_lists_block_inputs() {
    let out = ok(&["analyze", s(&corpus("proc.mir")), "--dump-args"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["schema"], "ircost.args/1");
    assert_eq!(v["functions"]["proc"]["for"], serde_json::json!(["l", "i"]));
}
