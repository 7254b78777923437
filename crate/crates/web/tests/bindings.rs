use mixsess_web::{encode_json, explore_json, parse_json};
use serde_json::Value;

const MIX: &str = "#calculus cmv+\n(new x y) (lin x(l!true + m?(z)) | lin y(l?(w) + m!false))";
const ELECTION: &str = "#calculus pi\n(nu a b c d e v w x y z) (\n  e! + a?.(x! + v?.1!) | a! + b?.(y! + w?.2!) | b! + c?.(z! + x?.3!)\n| c! + d?.(v! + y?.4!) | d! + e?.(w! + z?.5!))";
const CMV: &str = "#calculus cmv\n#free o : un !unit.end\n(new x y : lin !bool.end) (x!true | lin y?z.if z then o!unit else 0)";

fn v(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn page_examples_parse_and_type() {
    let r = v(parse_json(MIX, ""));
    assert_eq!(r["typing"]["well_typed"], true, "{r}");
    let r = v(parse_json(ELECTION, ""));
    assert!(r["typing"].is_null());
    let r = v(parse_json(CMV, ""));
    assert_eq!(r["calculus"], "cmv");
}

#[test]
fn explore_is_clamped() {
    let r = v(explore_json(ELECTION, "", 99, 1_000_000));
    assert_eq!(r["lts"]["bounds"]["max_depth"], 16);
    assert_eq!(r["complete"], true);
    assert_eq!(r["deadlocks"].as_array().unwrap().len(), 5);
    assert!(r["dot"].as_str().unwrap().starts_with("digraph"));
    let edge = &r["lts"]["edges"][0];
    assert!(edge["label"]["kind"].is_string() && edge["label"]["channel"].is_array());
}

#[test]
fn encode_reports_cases_and_typing() {
    let r = v(encode_json(MIX));
    assert_eq!(r["target_typechecks"], true);
    assert!(!r["cases"].as_array().unwrap().is_empty());
}

#[test]
fn errors_are_json() {
    assert!(v(parse_json("lin x(", "cmv+"))["error"].is_string());
    assert!(v(parse_json("0", "lambda"))["error"].is_string());
    assert!(v(encode_json("#calculus pi\n0"))["error"].is_string());
}
