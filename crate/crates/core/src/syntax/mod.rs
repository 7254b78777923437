//! Abstract syntax shared by the three calculi.

pub mod cmv;
pub mod mix;
pub mod pi;

use crate::name::Name;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Value {
    Name(Name),
    True,
    False,
    Unit,
}

impl Value {
    pub fn name(&self) -> Option<&Name> {
        match self {
            Value::Name(n) => Some(n),
            _ => None,
        }
    }

    pub fn subst(&self, sigma: &Subst) -> Value {
        match self {
            Value::Name(n) => sigma.get(n).cloned().unwrap_or_else(|| self.clone()),
            v => v.clone(),
        }
    }

    pub fn rename(&self, map: &dyn Fn(&Name) -> Option<Name>) -> Value {
        match self {
            Value::Name(n) => Value::Name(map(n).unwrap_or_else(|| n.clone())),
            v => v.clone(),
        }
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Value {
        if b {
            Value::True
        } else {
            Value::False
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Expr {
    Val(Value),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("expression is open: free name `{0}`")]
    Open(Name),
    #[error("expression applies a boolean operator to unit")]
    IllTyped,
}

impl Expr {
    pub fn val(v: Value) -> Expr {
        Expr::Val(v)
    }

    pub fn free_names(&self, out: &mut BTreeSet<Name>) {
        match self {
            Expr::Val(Value::Name(n)) => {
                out.insert(n.clone());
            }
            Expr::Val(_) => {}
            Expr::Not(e) => e.free_names(out),
            Expr::And(a, b) | Expr::Or(a, b) => {
                a.free_names(out);
                b.free_names(out);
            }
        }
    }

    pub fn subst(&self, sigma: &Subst) -> Expr {
        match self {
            Expr::Val(v) => Expr::Val(v.subst(sigma)),
            Expr::Not(e) => Expr::Not(Box::new(e.subst(sigma))),
            Expr::And(a, b) => Expr::And(Box::new(a.subst(sigma)), Box::new(b.subst(sigma))),
            Expr::Or(a, b) => Expr::Or(Box::new(a.subst(sigma)), Box::new(b.subst(sigma))),
        }
    }

    pub fn rename(&self, map: &dyn Fn(&Name) -> Option<Name>) -> Expr {
        match self {
            Expr::Val(v) => Expr::Val(v.rename(map)),
            Expr::Not(e) => Expr::Not(Box::new(e.rename(map))),
            Expr::And(a, b) => Expr::And(Box::new(a.rename(map)), Box::new(b.rename(map))),
            Expr::Or(a, b) => Expr::Or(Box::new(a.rename(map)), Box::new(b.rename(map))),
        }
    }
}

/// Evaluate a closed expression.
pub fn eval(e: &Expr) -> Result<Value, EvalError> {
    fn truth(e: &Expr) -> Result<bool, EvalError> {
        match eval(e)? {
            Value::True => Ok(true),
            Value::False => Ok(false),
            _ => Err(EvalError::IllTyped),
        }
    }
    match e {
        Expr::Val(Value::Name(n)) => Err(EvalError::Open(n.clone())),
        Expr::Val(v) => Ok(v.clone()),
        Expr::Not(a) => Ok((!truth(a)?).into()),
        Expr::And(a, b) => Ok((truth(a)? && truth(b)?).into()),
        Expr::Or(a, b) => Ok((truth(a)? || truth(b)?).into()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Qual {
    Lin,
    Un,
}

/// `!` sends, `?` receives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Pol {
    Out,
    In,
}

impl Pol {
    pub fn flip(self) -> Pol {
        match self {
            Pol::Out => Pol::In,
            Pol::In => Pol::Out,
        }
    }
}

/// `+` is internal choice, `&` external.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum View {
    Int,
    Ext,
}

impl View {
    pub fn flip(self) -> View {
        match self {
            View::Int => View::Ext,
            View::Ext => View::Int,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    pub text: Arc<str>,
    pub mangle: Option<Pol>,
}

impl Label {
    pub fn new(text: &str) -> Label {
        Label { text: text.into(), mangle: None }
    }

    pub fn mangled(&self, p: Pol) -> Label {
        Label { text: self.text.clone(), mangle: Some(p) }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mangle {
            None => write!(f, "{}", self.text),
            Some(Pol::Out) => write!(f, "{}$snd", self.text),
            Some(Pol::In) => write!(f, "{}$rcv", self.text),
        }
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Display for Qual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Qual::Lin => "lin",
            Qual::Un => "un",
        })
    }
}

impl fmt::Display for Pol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pol::Out => "!",
            Pol::In => "?",
        })
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            View::Int => "+",
            View::Ext => "&",
        })
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Name(n) => write!(f, "{n}"),
            Value::True => f.write_str("true"),
            Value::False => f.write_str("false"),
            Value::Unit => f.write_str("unit"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Val(v) => write!(f, "{v}"),
            Expr::Not(e) => match **e {
                Expr::Val(_) | Expr::Not(_) => write!(f, "not {e}"),
                _ => write!(f, "not ({e})"),
            },
            Expr::And(a, b) => {
                fmt_operand(f, a, true)?;
                f.write_str(" and ")?;
                fmt_operand(f, b, false)
            }
            Expr::Or(a, b) => {
                write!(f, "{a}")?;
                f.write_str(" or ")?;
                match **b {
                    Expr::Or(..) => write!(f, "({b})"),
                    _ => write!(f, "{b}"),
                }
            }
        }
    }
}

fn fmt_operand(f: &mut fmt::Formatter<'_>, e: &Expr, left: bool) -> fmt::Result {
    match e {
        Expr::Or(..) => write!(f, "({e})"),
        Expr::And(..) if !left => write!(f, "({e})"),
        _ => write!(f, "{e}"),
    }
}

/// Simultaneous substitution of names by values.
pub type Subst = BTreeMap<Name, Value>;

pub fn subst_of(pairs: &[(&str, Value)]) -> Subst {
    pairs.iter().map(|(k, v)| (Name::parse(k), v.clone())).collect()
}

/// Names occurring in the range of `sigma` restricted to keys in `keys`.
pub(crate) fn range_names(sigma: &Subst, keys: &BTreeSet<Name>) -> BTreeSet<Name> {
    sigma
        .iter()
        .filter(|(k, _)| keys.contains(*k))
        .filter_map(|(_, v)| v.name().cloned())
        .collect()
}

/// Pick a variant of `n` (by appending primes) outside `avoid`.
pub(crate) fn prime_away(n: &Name, avoid: &BTreeSet<Name>) -> Name {
    let mut text = n.text.to_string();
    loop {
        text.push('\'');
        let cand = Name { kind: n.kind, text: text.as_str().into(), index: n.index };
        if !avoid.contains(&cand) {
            return cand;
        }
    }
}

/// Work out what happens to a binder when pushing `sigma` under it: the
/// binder is dropped from the domain, and renamed if it would capture.
pub(crate) fn under_binder(
    sigma: &Subst,
    binder: &Name,
    body_free: &BTreeSet<Name>,
    avoid_extra: &BTreeSet<Name>,
) -> (Subst, Option<Name>) {
    let mut inner = sigma.clone();
    inner.remove(binder);
    let relevant: BTreeSet<Name> = body_free.iter().filter(|n| *n != binder).cloned().collect();
    let rng = range_names(&inner, &relevant);
    if rng.contains(binder) {
        let mut avoid = rng;
        avoid.extend(body_free.iter().cloned());
        avoid.extend(avoid_extra.iter().cloned());
        let fresh = prime_away(binder, &avoid);
        inner.insert(binder.clone(), Value::Name(fresh.clone()));
        (inner, Some(fresh))
    } else {
        (inner, None)
    }
}

/// A tree address of a subterm. The empty path is the term itself.
pub type Path = Vec<u32>;

/// An occurrence returned by `subterms`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Occurrence {
    pub path: Path,
    pub guarded: bool,
    pub text: String,
}

/// Which of the three calculi a term belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Calculus {
    Pi,
    CmvPlus,
    Cmv,
}

impl std::str::FromStr for Calculus {
    type Err = String;
    fn from_str(s: &str) -> Result<Calculus, String> {
        match s {
            "pi" => Ok(Calculus::Pi),
            "cmv+" | "cmvplus" | "mixed" => Ok(Calculus::CmvPlus),
            "cmv" => Ok(Calculus::Cmv),
            _ => Err(format!("unknown calculus `{s}` (expected pi, cmv+ or cmv)")),
        }
    }
}

impl fmt::Display for Calculus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Calculus::Pi => "pi",
            Calculus::CmvPlus => "cmv+",
            Calculus::Cmv => "cmv",
        })
    }
}

impl Serialize for Calculus {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A process of any of the three calculi.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Pi(pi::Pi),
    Mix(mix::Mix),
    Cmv(cmv::Cmv),
}

impl Term {
    pub fn calculus(&self) -> Calculus {
        match self {
            Term::Pi(_) => Calculus::Pi,
            Term::Mix(_) => Calculus::CmvPlus,
            Term::Cmv(_) => Calculus::Cmv,
        }
    }

    pub fn free_names(&self) -> BTreeSet<Name> {
        match self {
            Term::Pi(p) => p.free_names(),
            Term::Mix(p) => p.free_names(),
            Term::Cmv(p) => p.free_names(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Pi(p) => write!(f, "{p}"),
            Term::Mix(p) => write!(f, "{p}"),
            Term::Cmv(p) => write!(f, "{p}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(v: bool) -> Box<Expr> {
        Box::new(Expr::Val(v.into()))
    }

    #[test]
    fn eval_truth_tables() {
        assert_eq!(eval(&Expr::Val(Value::True)), Ok(Value::True));
        assert_eq!(eval(&Expr::Not(Box::new(Expr::And(b(true), b(false))))), Ok(Value::True));
        assert_eq!(eval(&Expr::Val(Value::Unit)), Ok(Value::Unit));
        assert_eq!(eval(&Expr::Or(b(false), b(false))), Ok(Value::False));
        assert!(matches!(eval(&Expr::Val(Value::Name(Name::parse("z")))), Err(EvalError::Open(_))));
        assert_eq!(eval(&Expr::Not(Box::new(Expr::Val(Value::Unit)))), Err(EvalError::IllTyped));
    }

    #[test]
    fn labels_print_mangling() {
        let l = Label::new("l");
        assert_eq!(l.to_string(), "l");
        assert_eq!(l.mangled(Pol::Out).to_string(), "l$snd");
        assert_eq!(l.mangled(Pol::In).to_string(), "l$rcv");
    }
}
