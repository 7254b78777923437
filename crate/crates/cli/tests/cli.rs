use serde_json::Value;
use std::io::Write;
use std::process::{Command, Output, Stdio};

fn mixsess(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixsess")).args(args).output().unwrap()
}

fn with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_mixsess"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn parse_reports_canonical_form() {
    let o = with_stdin(&["parse", "-", "--calculus", "pi"], "a!<b> | 0 | (nu k) k?(z)");
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["calculus"], "pi");
    assert_eq!(v["free_names"], serde_json::json!(["a", "b"]));
}

#[test]
fn input_errors_exit_2() {
    assert_eq!(mixsess(&["parse", "/no/such/file"]).status.code(), Some(2));
    assert_eq!(with_stdin(&["parse", "-", "--calculus", "cmv+"], "lin x(").status.code(), Some(2));
    assert_eq!(mixsess(&["typecheck", "@star"]).status.code(), Some(2));
    assert_eq!(mixsess(&["parse", "@nothing"]).status.code(), Some(2));
}

#[test]
fn ill_typed_term_exits_1() {
    let src = "(new x y : lin +{l!bool.end}) (lin x(l!true) | lin x(l!true) | lin y(l?(z)))";
    let o = with_stdin(&["typecheck", "-", "--calculus", "cmv+"], src);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["well_typed"], false);
}

#[test]
fn truncated_exploration_exits_3() {
    let o = with_stdin(&["explore", "-", "--calculus", "pi", "--depth", "2"], "!tau.a!<a>");
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(json(&o)["complete"], false);
}

#[test]
fn bisim_verdicts_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.picl");
    let b = dir.path().join("b.picl");
    std::fs::write(&a, "#calculus pi\ntau.o!<o>").unwrap();
    std::fs::write(&b, "#calculus pi\no!<o>").unwrap();
    let (a, b) = (a.to_str().unwrap(), b.to_str().unwrap());
    assert_eq!(mixsess(&["bisim", a, b]).status.code(), Some(0));
    assert_eq!(mixsess(&["coupledsim", a, b]).status.code(), Some(0));
    assert_eq!(mixsess(&["bisim", a, "@star"]).status.code(), Some(1));
}

#[test]
fn encode_and_certify_the_worked_example() {
    let o = mixsess(&["encode", "@translation"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["target_typechecks"], true);
    let o = mixsess(&["oc-check", "--worked-example"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["ok"], true);
}

#[test]
fn patterns_and_election() {
    let o = mixsess(&["pattern", "star", "@star"]);
    assert_eq!(json(&o)["found"], true);
    let o = mixsess(&["pattern", "m", "@mixed-m"]);
    assert_eq!(json(&o)["found"], true);
    let o = mixsess(&["election"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["report"]["executions"], 10);
}

#[test]
fn export_writes_dot_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.dot");
    let o = mixsess(&["export", "--dot", "@mixed-m", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(out).unwrap().starts_with("digraph"));
}

#[test]
fn same_seed_same_report() {
    let a = mixsess(&["confluence", "--count", "30", "--seed", "1"]);
    let b = mixsess(&["confluence", "--count", "30", "--seed", "1"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.status.code(), Some(0));
}
