//! Browser bindings. Every entry point takes source text and returns a JSON
//! string; failures come back as `{"error": …}` so the page has one code path.

use mixsess_core::canon::canonicalize;
use mixsess_core::encode::encode;
use mixsess_core::lts::{explore, Bounds, Lts};
use mixsess_core::parse::{parse_file, SourceFile};
use mixsess_core::reduce::Process;
use mixsess_core::syntax::{Calculus, Term};
use mixsess_core::types::{check_cmv, check_mix};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Hard caps so a stray input cannot freeze the tab.
const MAX_DEPTH: usize = 16;
const MAX_STATES: usize = 2_000;

fn load(src: &str, calculus: &str) -> Result<SourceFile, String> {
    let default: Option<Calculus> = if calculus.is_empty() { None } else { Some(calculus.parse()?) };
    parse_file(src, default).map_err(|e| e.to_string())
}

fn reply(r: Result<Value, String>) -> String {
    r.unwrap_or_else(|e| json!({ "error": e })).to_string()
}

/// Pretty-print, canonicalise and, for session calculi, typecheck.
pub fn parse_json(src: &str, calculus: &str) -> String {
    reply((|| {
        let f = load(src, calculus)?;
        let (canon, typing) = match &f.term {
            Term::Pi(p) => (canonicalize(p).to_string(), None),
            Term::Mix(p) => (canonicalize(p).to_string(), Some(check_mix(&f.free, p).map(|d| d.skeleton()))),
            Term::Cmv(p) => (canonicalize(p).to_string(), Some(check_cmv(&f.free, p).map(|d| d.skeleton()))),
        };
        let typing = typing.map(|t| match t {
            Ok(s) => json!({ "well_typed": true, "skeleton": s }),
            Err(e) => json!({ "well_typed": false, "error": e.to_string() }),
        });
        Ok(json!({
            "calculus": f.calculus,
            "term": f.term.to_string(),
            "canonical": canon,
            "typing": typing,
        }))
    })())
}

fn lts_view<P: Process>(lts: &Lts<P>) -> Value {
    json!({
        "states": lts.len(),
        "complete": lts.complete,
        "deadlocks": lts.deadlocks(),
        "lts": lts.to_json(),
        "dot": lts.to_dot(),
    })
}

/// Explore the state space, clamped to the page's limits.
pub fn explore_json(src: &str, calculus: &str, depth: usize, max_states: usize) -> String {
    reply(load(src, calculus).map(|f| {
        let b = Bounds::new(depth.min(MAX_DEPTH), max_states.min(MAX_STATES));
        match &f.term {
            Term::Pi(p) => lts_view(&explore(p, b)),
            Term::Mix(p) => lts_view(&explore(p, b)),
            Term::Cmv(p) => lts_view(&explore(p, b)),
        }
    }))
}

/// Translate a mixed-session term and typecheck the result.
pub fn encode_json(src: &str) -> String {
    reply((|| {
        let f = load(src, "cmv+")?;
        let Term::Mix(p) = &f.term else { return Err(format!("expected a cmv+ term, got {}", f.calculus)) };
        let e = encode(&f.free, p).map_err(|e| e.to_string())?;
        let typed = check_cmv(&e.ctx, &e.term);
        Ok(json!({
            "target": e.term.to_string(),
            "canonical": canonicalize(&e.term).to_string(),
            "ctx": e.ctx.to_string(),
            "cases": e.provenance.iter().map(|p| p.case.to_string()).collect::<Vec<_>>(),
            "target_typechecks": typed.is_ok(),
        }))
    })())
}

#[wasm_bindgen(js_name = parseTerm)]
pub fn parse_term(src: &str, calculus: &str) -> String {
    parse_json(src, calculus)
}

#[wasm_bindgen(js_name = exploreTerm)]
pub fn explore_term(src: &str, calculus: &str, depth: usize, max_states: usize) -> String {
    explore_json(src, calculus, depth, max_states)
}

#[wasm_bindgen(js_name = encodeTerm)]
pub fn encode_term(src: &str) -> String {
    encode_json(src)
}
