//! Typing derivations and their rule-by-rule replay.

use super::ctx::TyCtx;
use super::ops::{dual, subtype, type_equiv};
use super::ty::{SessionType, TBranch};
use crate::name::Name;
use crate::syntax::cmv::Cmv;
use crate::syntax::mix::{Branch, Mix};
use crate::syntax::{Expr, Pol, Qual, Value, View};
use serde::Serialize;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Rule {
    #[serde(rename = "T-Unit")]
    Unit,
    #[serde(rename = "T-True")]
    True,
    #[serde(rename = "T-False")]
    False,
    #[serde(rename = "T-Var")]
    Var,
    #[serde(rename = "T-Sub")]
    Sub,
    /// Compound boolean condition; premises type each atom.
    #[serde(rename = "T-Op")]
    Op,
    #[serde(rename = "T-Out")]
    Out,
    #[serde(rename = "T-In")]
    In,
    #[serde(rename = "T-Inact")]
    Inact,
    #[serde(rename = "T-Par")]
    Par,
    #[serde(rename = "T-If")]
    If,
    #[serde(rename = "T-Res")]
    Res,
    #[serde(rename = "T-Choice")]
    Choice,
    #[serde(rename = "T-Branch")]
    Branch,
    #[serde(rename = "T-Sel")]
    Sel,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("rule serializes");
        f.write_str(s.as_str().unwrap_or("?"))
    }
}

/// What a judgement is about.
#[derive(Clone, Debug, PartialEq)]
pub enum Subject {
    Mix(Mix),
    Cmv(Cmv),
    /// A mixed-choice branch against its branch type.
    Branch(Branch, TBranch),
    Value(Value, SessionType),
    Cond(Expr),
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::Mix(p) => write!(f, "{p}"),
            Subject::Cmv(p) => write!(f, "{p}"),
            Subject::Branch(b, t) => write!(f, "{b} : {}{}{}.{}", t.label, t.pol, t.payload, t.cont),
            Subject::Value(v, t) => write!(f, "{v} : {t}"),
            Subject::Cond(e) => write!(f, "{e} : bool"),
        }
    }
}

impl Serialize for Subject {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Split {
    pub left: TyCtx,
    pub right: TyCtx,
}

/// Rule-specific data the encoder and the replay need.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Note {
    /// The endpoint of a choice, its type in the context and the type used by
    /// the rule (after unfolding and narrowing).
    Endpoint { name: Name, declared: SessionType, used: SessionType },
    Restriction { left: SessionType, right: SessionType, inferred: bool },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Derivation {
    pub rule: Rule,
    pub ctx: TyCtx,
    pub subject: Subject,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub splits: Vec<Split>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<Note>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub premises: Vec<Derivation>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{rule}: {message} (in `{subject}`)")]
pub struct TypeError {
    pub rule: String,
    pub subject: String,
    pub message: String,
}

impl TypeError {
    pub fn new(rule: Rule, subject: impl fmt::Display, message: impl Into<String>) -> TypeError {
        TypeError { rule: rule.to_string(), subject: subject.to_string(), message: message.into() }
    }
}

impl Derivation {
    pub fn leaf(rule: Rule, ctx: TyCtx, subject: Subject) -> Derivation {
        Derivation { rule, ctx, subject, splits: vec![], note: None, premises: vec![] }
    }

    /// Rule names in prefix order, with nesting shown by brackets.
    pub fn skeleton(&self) -> String {
        if self.premises.is_empty() {
            return self.rule.to_string();
        }
        let kids: Vec<String> = self.premises.iter().map(|d| d.skeleton()).collect();
        format!("{}[{}]", self.rule, kids.join(", "))
    }

    pub fn count_rule(&self, r: Rule) -> usize {
        (self.rule == r) as usize + self.premises.iter().map(|d| d.count_rule(r)).sum::<usize>()
    }

    pub fn leaves(&self) -> Vec<Rule> {
        if self.premises.is_empty() {
            return vec![self.rule];
        }
        self.premises.iter().flat_map(|d| d.leaves()).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("derivation serializes")
    }

    /// Re-validate every node against the declarative rule it names.
    pub fn replay(&self) -> Result<(), TypeError> {
        self.check_node()?;
        self.premises.iter().try_for_each(|d| d.replay())
    }

    fn fail(&self, msg: impl Into<String>) -> Result<(), TypeError> {
        Err(TypeError::new(self.rule, &self.subject, format!("replay: {}", msg.into())))
    }

    fn premise_count(&self, n: usize) -> Result<(), TypeError> {
        if self.premises.len() != n {
            return self.fail(format!("expected {n} premises, found {}", self.premises.len()));
        }
        Ok(())
    }

    fn split(&self, i: usize) -> Result<&Split, TypeError> {
        self.splits
            .get(i)
            .ok_or_else(|| TypeError::new(self.rule, &self.subject, "replay: missing split record"))
    }

    fn check_split(&self, whole: &TyCtx, i: usize) -> Result<&Split, TypeError> {
        let s = self.split(i)?;
        if !whole.is_split(&s.left, &s.right) {
            self.fail(format!("`{}` is not `{}` ∘ `{}`", whole, s.left, s.right))?;
        }
        Ok(s)
    }

    fn check_node(&self) -> Result<(), TypeError> {
        let g = &self.ctx;
        match (&self.rule, &self.subject) {
            (Rule::Unit | Rule::True | Rule::False, Subject::Value(v, t)) => {
                let want = match self.rule {
                    Rule::Unit => (Value::Unit, SessionType::Unit),
                    Rule::True => (Value::True, SessionType::Bool),
                    _ => (Value::False, SessionType::Bool),
                };
                if (v, t) != (&want.0, &want.1) {
                    return self.fail("constant does not match its rule");
                }
                if !g.is_un() {
                    return self.fail("context is not unrestricted");
                }
                self.premise_count(0)
            }
            (Rule::Var, Subject::Value(Value::Name(x), t)) => {
                match g.get(x) {
                    Some(u) if type_equiv(u, t) => {}
                    _ => return self.fail(format!("`{x}` is not assigned `{t}`")),
                }
                if !g.without(x).is_un() {
                    return self.fail("remaining context is not unrestricted");
                }
                self.premise_count(0)
            }
            (Rule::Sub, Subject::Value(v, t)) => {
                self.premise_count(1)?;
                let p = &self.premises[0];
                match &p.subject {
                    Subject::Value(w, u) if w == v && subtype(u, t) && &p.ctx == g => Ok(()),
                    _ => self.fail("premise is not a subtype judgement on the same value"),
                }
            }
            (Rule::Op, Subject::Cond(e)) => {
                if self.premises.is_empty() && !matches!(e, Expr::Val(_)) {
                    let mut names = std::collections::BTreeSet::new();
                    e.free_names(&mut names);
                    if !names.is_empty() {
                        return self.fail("open condition without atom premises");
                    }
                }
                for p in &self.premises {
                    match &p.subject {
                        Subject::Value(_, SessionType::Bool) if &p.ctx == g => {}
                        _ => return self.fail("condition atom is not typed bool"),
                    }
                }
                Ok(())
            }
            (Rule::Inact, Subject::Mix(p)) if p.is_nil() => self.un_leaf(),
            (Rule::Inact, Subject::Cmv(Cmv::Inact)) => self.un_leaf(),
            (Rule::Par, Subject::Mix(Mix::Par(ps))) => {
                self.premise_count(2)?;
                let s = self.check_split(g, 0)?;
                let rest = if ps.len() == 2 { ps[1].clone() } else { Mix::Par(ps[1..].to_vec()) };
                self.expect_premise(0, &s.left, &Subject::Mix(ps[0].clone()))?;
                self.expect_premise(1, &s.right, &Subject::Mix(rest))
            }
            (Rule::Par, Subject::Cmv(Cmv::Par(ps))) => {
                self.premise_count(2)?;
                let s = self.check_split(g, 0)?;
                let rest = if ps.len() == 2 { ps[1].clone() } else { Cmv::Par(ps[1..].to_vec()) };
                self.expect_premise(0, &s.left, &Subject::Cmv(ps[0].clone()))?;
                self.expect_premise(1, &s.right, &Subject::Cmv(rest))
            }
            (Rule::Res, Subject::Mix(Mix::Res(x, y, _, body))) => self.check_res(x, y, Subject::Mix((**body).clone())),
            (Rule::Res, Subject::Cmv(Cmv::Res(x, y, _, body))) => self.check_res(x, y, Subject::Cmv((**body).clone())),
            (Rule::If, Subject::Mix(Mix::If(e, p, q))) => {
                self.check_if(e, Subject::Mix((**p).clone()), Subject::Mix((**q).clone()))
            }
            (Rule::If, Subject::Cmv(Cmv::If(e, p, q))) => {
                self.check_if(e, Subject::Cmv((**p).clone()), Subject::Cmv((**q).clone()))
            }
            (Rule::Choice, Subject::Mix(Mix::Choice(q, x, bs))) => self.check_choice(*q, x, bs),
            (Rule::Out, Subject::Branch(b, tb)) if b.pol == Pol::Out && tb.pol == Pol::Out => {
                self.premise_count(2)?;
                let s = self.check_split(g, 0)?;
                self.expect_premise(0, &s.left, &Subject::Value(b.arg.clone(), tb.payload.clone()))?;
                self.expect_premise(1, &s.right, &Subject::Mix(b.cont.clone()))
            }
            (Rule::In, Subject::Branch(b, tb)) if b.pol == Pol::In && tb.pol == Pol::In => {
                self.premise_count(1)?;
                let z = b.bound_var().ok_or_else(|| TypeError::new(self.rule, &self.subject, "no bound variable"))?;
                let want = g.add(z, &tb.payload).map_err(|e| TypeError::new(self.rule, &self.subject, e.to_string()))?;
                self.expect_premise(0, &want, &Subject::Mix(b.cont.clone()))
            }
            (Rule::Out, Subject::Cmv(Cmv::Out(x, v, p))) => {
                self.premise_count(2)?;
                let (pay, cont) = match self.endpoint_type(0, x)? {
                    SessionType::Com(_, Pol::Out, a, c) => ((*a).clone(), (*c).clone()),
                    t => return self.fail(format!("`{t}` is not an output type")),
                };
                let s = self.split(0)?;
                let added = s.right.add(x, &cont).map_err(|e| TypeError::new(self.rule, &self.subject, e.to_string()))?;
                let s2 = self.check_split(&added, 1)?;
                self.expect_premise(0, &s2.left, &Subject::Value(v.clone(), pay))?;
                self.expect_premise(1, &s2.right, &Subject::Cmv((**p).clone()))
            }
            (Rule::In, Subject::Cmv(Cmv::In(q, x, y, p))) => {
                self.premise_count(1)?;
                if *q == Qual::Un && !g.is_un() {
                    return self.fail("unrestricted input in a linear context");
                }
                let (pay, cont) = match self.endpoint_type(0, x)? {
                    SessionType::Com(_, Pol::In, a, c) => ((*a).clone(), (*c).clone()),
                    t => return self.fail(format!("`{t}` is not an input type")),
                };
                let s = self.split(0)?;
                let want = s
                    .right
                    .add(x, &cont)
                    .and_then(|c| c.add(y, &pay))
                    .map_err(|e| TypeError::new(self.rule, &self.subject, e.to_string()))?;
                self.expect_premise(0, &want, &Subject::Cmv((**p).clone()))
            }
            (Rule::Branch, Subject::Cmv(Cmv::Branch(x, m))) => {
                let tm = match self.endpoint_type(0, x)? {
                    SessionType::Choice(_, View::Ext, tm) => tm,
                    t => return self.fail(format!("`{t}` is not a branching type")),
                };
                if !tm.keys().eq(m.keys()) {
                    return self.fail("branch labels differ from the type");
                }
                self.premise_count(m.len())?;
                let s = self.split(0)?;
                for (i, (l, p)) in m.iter().enumerate() {
                    let want = s.right.add(x, &tm[l]).map_err(|e| TypeError::new(self.rule, &self.subject, e.to_string()))?;
                    self.expect_premise(i, &want, &Subject::Cmv(p.clone()))?;
                }
                Ok(())
            }
            (Rule::Sel, Subject::Cmv(Cmv::Sel(x, l, p))) => {
                self.premise_count(1)?;
                let t = match self.endpoint_type(0, x)? {
                    SessionType::Choice(_, View::Int, tm) if tm.len() == 1 && tm.contains_key(l) => tm[l].clone(),
                    t => return self.fail(format!("`{t}` is not a singleton selection on `{l}`")),
                };
                let s = self.split(0)?;
                let want = s.right.add(x, &t).map_err(|e| TypeError::new(self.rule, &self.subject, e.to_string()))?;
                self.expect_premise(0, &want, &Subject::Cmv((**p).clone()))
            }
            _ => self.fail("rule does not apply to this subject"),
        }
    }

    fn un_leaf(&self) -> Result<(), TypeError> {
        if !self.ctx.is_un() {
            return self.fail("context is not unrestricted");
        }
        self.premise_count(0)
    }

    fn expect_premise(&self, i: usize, ctx: &TyCtx, subject: &Subject) -> Result<(), TypeError> {
        let p = &self.premises[i];
        if &p.ctx != ctx {
            return self.fail(format!("premise {i} has context `{}`, expected `{ctx}`", p.ctx));
        }
        if !subject_matches(&p.subject, subject) {
            return self.fail(format!("premise {i} is about `{}`, expected `{subject}`", p.subject));
        }
        Ok(())
    }

    /// Check `Γ1 ⊢ x : used` for split `i` and return the used type.
    fn endpoint_type(&self, i: usize, x: &Name) -> Result<SessionType, TypeError> {
        let s = self.check_split(&self.ctx, i)?;
        let (declared, used) = match &self.note {
            Some(Note::Endpoint { name, declared, used }) if name == x => (declared.clone(), used.clone()),
            _ => return Err(TypeError::new(self.rule, &self.subject, "replay: missing endpoint note")),
        };
        match s.left.get(x) {
            Some(t) if type_equiv(t, &declared) && subtype(t, &used) => {}
            _ => return Err(TypeError::new(self.rule, &self.subject, format!("replay: `{x}` cannot be typed `{used}`"))),
        }
        if !s.left.without(x).is_un() {
            return Err(TypeError::new(self.rule, &self.subject, "replay: endpoint premise context is not unrestricted"));
        }
        if s.right.contains(x) {
            return Err(TypeError::new(self.rule, &self.subject, "replay: endpoint also in the continuation context"));
        }
        Ok(used)
    }

    fn check_res(&self, x: &Name, y: &Name, body: Subject) -> Result<(), TypeError> {
        self.premise_count(1)?;
        let (t, u) = match &self.note {
            Some(Note::Restriction { left, right, .. }) => (left, right),
            _ => return self.fail("missing restriction note"),
        };
        if !dual(t, u) {
            return self.fail(format!("`{t}` and `{u}` are not dual"));
        }
        let want = self
            .ctx
            .add(x, t)
            .and_then(|c| c.add(y, u))
            .map_err(|e| TypeError::new(self.rule, &self.subject, e.to_string()))?;
        self.expect_premise(0, &want, &body)
    }

    fn check_if(&self, e: &Expr, p: Subject, q: Subject) -> Result<(), TypeError> {
        self.premise_count(3)?;
        let s = self.check_split(&self.ctx, 0)?;
        let c = &self.premises[0];
        let cond_ok = match &c.subject {
            Subject::Cond(e2) => e2 == e,
            Subject::Value(v, SessionType::Bool) => &Expr::Val(v.clone()) == e,
            _ => false,
        };
        if !cond_ok || c.ctx != s.left {
            return self.fail("condition premise does not match");
        }
        self.expect_premise(1, &s.right, &p)?;
        self.expect_premise(2, &s.right, &q)
    }

    fn check_choice(&self, q: Qual, x: &Name, bs: &[Branch]) -> Result<(), TypeError> {
        if q == Qual::Un && !self.ctx.is_un() {
            return self.fail("unrestricted choice in a linear context");
        }
        let used = self.endpoint_type(0, x)?;
        let tbs = match &used {
            SessionType::Mix(_, _, tbs) => tbs.clone(),
            t => return self.fail(format!("`{t}` is not a choice type")),
        };
        let proc_set: std::collections::BTreeSet<_> = bs.iter().map(|b| (b.label.clone(), b.pol)).collect();
        let type_set: std::collections::BTreeSet<_> = tbs.iter().map(|b| (b.label.clone(), b.pol)).collect();
        if proc_set != type_set {
            return self.fail("label-polarity pairs of process and type differ");
        }
        self.premise_count(bs.len())?;
        let s = self.split(0)?;
        for (i, b) in bs.iter().enumerate() {
            let tb = tbs.iter().find(|t| t.label == b.label && t.pol == b.pol).expect("checked above");
            let want = s.right.add(x, &tb.cont).map_err(|e| TypeError::new(self.rule, &self.subject, e.to_string()))?;
            self.expect_premise(i, &want, &Subject::Branch(b.clone(), tb.clone()))?;
        }
        Ok(())
    }
}

fn subject_matches(a: &Subject, b: &Subject) -> bool {
    match (a, b) {
        (Subject::Value(v, t), Subject::Value(w, u)) => v == w && type_equiv(t, u),
        (Subject::Branch(b1, t1), Subject::Branch(b2, t2)) => {
            b1 == b2
                && t1.label == t2.label
                && t1.pol == t2.pol
                && type_equiv(&t1.payload, &t2.payload)
                && type_equiv(&t1.cont, &t2.cont)
        }
        _ => a == b,
    }
}
