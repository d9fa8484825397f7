//! End-to-end runs of the `qdes` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use qdes::automata::Automaton;
use qdes::blm::compile_mm_to_rblm;
use qdes::{fixtures, io};

fn qdes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdes"))
        .args(args)
        .env_remove("QDES_TOL")
        .output()
        .expect("binary runs")
}

/// Exit code and parsed stdout; also checks stdout is already canonical.
fn run(args: &[&str]) -> (i32, Value) {
    let out = qdes(args);
    let code = out.status.code().expect("exit code");
    let text = String::from_utf8(out.stdout).unwrap();
    if code == 2 {
        return (code, io::parse_json(&String::from_utf8(out.stderr).unwrap()).unwrap());
    }
    let v = io::parse_json(&text).unwrap();
    assert_eq!(io::canonical(&v), text, "output of {args:?} is not canonical");
    (code, v)
}

fn path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn example(dir: &Path, which: &str, n: &str, target: bool) -> PathBuf {
    let file = path(dir, &format!("{which}{n}{}.json", if target { "t" } else { "" }));
    let mut args = vec!["example", which, "--N", n, "-o", s(&file)];
    if target {
        args.push("--target");
    }
    let (code, doc) = run(&args);
    assert_eq!(code, 0, "{doc}");
    file
}

#[test]
fn prob_reports_the_bounded_zeros_value() {
    let dir = tempfile::tempdir().unwrap();
    let f = example(dir.path(), "eg2", "2", false);
    let (code, doc) = run(&["prob", s(&f), "00"]);
    assert_eq!(code, 0);
    let r = fixtures::eg2_r(2, 0.5);
    let v = doc["value"].as_f64().unwrap();
    assert!((v - (1.0 - r).powi(2)).abs() < 1e-12);
    assert!((v - 0.563_105_643_3).abs() < 1e-9);
}

#[test]
fn model_check_compares_every_form() {
    let dir = tempfile::tempdir().unwrap();
    let f = example(dir.path(), "eg2", "3", false);
    let (code, doc) = run(&["prob", s(&f), "0110", "--model-check"]);
    assert_eq!(code, 0);
    assert_eq!(doc["agree"], Value::Bool(true));
    for form in ["running", "prefixwise", "bilinear"] {
        assert!(doc["forms"][form].is_number(), "{form}");
    }
}

#[test]
fn a_machine_is_equivalent_to_itself() {
    let dir = tempfile::tempdir().unwrap();
    let f = path(dir.path(), "a.rblm");
    let b = compile_mm_to_rblm(&fixtures::build_eg2(2, 0.5).unwrap()).unwrap();
    io::save(&Automaton::Rblm(b), &f).unwrap();
    let (code, doc) = run(&["equiv", s(&f), s(&f), "--brute-k", "4"]);
    assert_eq!(code, 0);
    assert_eq!(doc["equivalent"], Value::Bool(true));
    assert_eq!(doc["brute_force"]["equivalent"], Value::Bool(true));
}

#[test]
fn inequivalent_automata_give_a_counterexample_and_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let a = example(dir.path(), "eg2", "2", false);
    let b = example(dir.path(), "eg2", "2", true);
    let (code, doc) = run(&["equiv", s(&a), s(&b)]);
    assert_eq!(code, 1);
    assert_eq!(doc["equivalent"], Value::Bool(false));
    assert_eq!(doc["counterexample"], Value::String("1".into()));
}

#[test]
fn binary_sum_target_is_controllable() {
    let dir = tempfile::tempdir().unwrap();
    let plant = example(dir.path(), "eg1", "2", false);
    let target = example(dir.path(), "eg1", "2", true);
    let (code, doc) = run(&[
        "decide-controllability",
        s(&plant),
        s(&target),
        "--uncontrollable",
        "0,1",
        "--oracle-horizon",
        "4",
    ]);
    assert_eq!(code, 0, "{doc}");
    assert_eq!(doc["holds"], Value::Bool(true));
    assert_eq!(doc["oracle"]["agrees"], Value::Bool(true));

    let (code, doc) = run(&["decide-controllability", s(&plant), s(&target), "--uncontrollable", "2"]);
    assert_eq!(code, 1);
    assert_eq!(doc["counterexample"]["sigma"], Value::String("2".into()));
    assert_eq!(doc["counterexample"]["word"], Value::String(String::new()));
}

#[test]
fn simulate_loop_steps_through_the_word() {
    let dir = tempfile::tempdir().unwrap();
    let plant = example(dir.path(), "eg1", "2", false);
    let target = example(dir.path(), "eg1", "2", true);
    let (code, doc) = run(&["simulate-loop", s(&plant), s(&target), "--uncontrollable", "0,1", "--word", "012"]);
    assert_eq!(code, 0);
    assert_eq!(doc["steps"].as_array().unwrap().len(), 3);
    let prefixes = doc["prefixes"].as_array().unwrap();
    assert_eq!(prefixes.len(), 4);
    // Symbol 2 is disabled by the target, so the loop value drops to 0.
    assert_eq!(prefixes[3]["closed_loop"].as_f64(), Some(0.0));
    assert_eq!(doc["steps"][2]["enable"].as_f64(), Some(0.0));
}

#[test]
fn marking_holds_for_the_balanced_zeros_instance() {
    let dir = tempfile::tempdir().unwrap();
    let plant = example(dir.path(), "egadd", "4", false);
    let target = example(dir.path(), "egadd", "4", true);
    let (code, doc) = run(&[
        "check-marking",
        s(&plant),
        s(&target),
        "--lambda",
        "0.5",
        "--rho",
        "0.25",
        "--horizon",
        "4",
        "--uncontrollable",
        "0,1",
    ]);
    assert_eq!(code, 0, "{doc}");
    assert_eq!(doc["nonblocking"], Value::Bool(true));
    assert_eq!(doc["marking_conditions_hold"], Value::Bool(true));
}

#[test]
fn compose_multiplies_and_minimize_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = example(dir.path(), "af-modp", "5", false);
    let out = path(dir.path(), "aa.json");
    let (code, doc) = run(&["compose", s(&a), s(&a), "-o", s(&out)]);
    assert_eq!(code, 0);
    assert_eq!(doc["kind"], Value::String("mo-qfa".into()));
    let (_, single) = run(&["prob", s(&a), "000"]);
    let (_, double) = run(&["prob", s(&out), "000"]);
    let p = single["value"].as_f64().unwrap();
    assert!((double["value"].as_f64().unwrap() - p * p).abs() < 1e-10);

    let d = path(dir.path(), "d.json");
    io::save(&Automaton::Dfa(fixtures::dfa_bounded_zeros(3)), &d).unwrap();
    let (code, doc) = run(&["minimize-dfa", s(&d)]);
    assert_eq!(code, 0);
    assert_eq!(doc["minimal_states"].as_u64(), Some(5));
    let (code, doc) = run(&["compose", "--classical", s(&d), s(&d)]);
    assert_eq!(code, 0);
    assert_eq!(doc["kind"], Value::String("dfa".into()));
}

#[test]
fn bad_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let broken = path(dir.path(), "broken.json");
    std::fs::write(&broken, "{\n  \"kind\": \"mo-qfa\",\n  oops\n}\n").unwrap();
    let (code, doc) = run(&["prob", s(&broken), "0"]);
    assert_eq!(code, 2);
    assert_eq!(doc["line"].as_u64(), Some(3));

    let missing = path(dir.path(), "missing.json");
    assert_eq!(run(&["validate", s(&missing)]).0, 2);

    let f = example(dir.path(), "eg2", "2", false);
    assert_eq!(run(&["prob", s(&f), "0x"]).0, 2);
    assert_eq!(qdes(&["prob"]).status.code(), Some(2));
}

#[test]
fn validate_lists_violations() {
    let dir = tempfile::tempdir().unwrap();
    let f = example(dir.path(), "eg2", "2", false);
    let (code, doc) = run(&["validate", s(&f)]);
    assert_eq!((code, doc["valid"].clone()), (0, Value::Bool(true)));

    let mut v = io::parse_json(&std::fs::read_to_string(&f).unwrap()).unwrap();
    v["unitaries"]["0"][0][0] = serde_json::json!([5.0, 0.0]);
    let bad = path(dir.path(), "bad.json");
    std::fs::write(&bad, io::canonical(&v)).unwrap();
    let (code, doc) = run(&["validate", s(&bad)]);
    assert_eq!(code, 1);
    let comps: Vec<&str> = doc["violations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["component"].as_str().unwrap())
        .collect();
    assert!(comps.contains(&"U(0)"), "{comps:?}");
}

#[test]
fn tolerance_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let f = example(dir.path(), "eg2", "2", false);
    let out = Command::new(env!("CARGO_BIN_EXE_qdes"))
        .args(["equiv", s(&f), s(&f)])
        .env("QDES_TOL", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_qdes"))
        .args(["equiv", s(&f), s(&f)])
        .env("QDES_TOL", "1e-9")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn fixture_output_is_reproducible_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = path(dir.path(), "a.json");
    let b = path(dir.path(), "b.json");
    for f in [&a, &b] {
        assert_eq!(run(&["example", "egadd", "--N", "4", "--seed", "7", "-o", s(f)]).0, 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}
