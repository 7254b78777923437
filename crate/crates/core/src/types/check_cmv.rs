//! Algorithmic checker for classic sessions.

use super::check_mix::{condition, split_by, value};
use super::ctx::TyCtx;
use super::deriv::{Derivation, Note, Rule, Split, Subject, TypeError};
use super::ops::{dual, dualize, un_pred};
use super::ty::SessionType;
use crate::name::Name;
use crate::syntax::cmv::Cmv;
use crate::syntax::{prime_away, Pol, Qual, Value, View};
use std::collections::{BTreeMap, BTreeSet};

/// `Γ ⊢ P` for a classic-session process. Restrictions must be annotated.
pub fn check_cmv(ctx: &TyCtx, p: &Cmv) -> Result<Derivation, TypeError> {
    for (n, t) in ctx.entries() {
        t.check_wf().map_err(|m| TypeError::new(Rule::Var, n, m))?;
    }
    proc(ctx, p)
}

fn err<T>(rule: Rule, subject: impl std::fmt::Display, msg: impl Into<String>) -> Result<T, TypeError> {
    Err(TypeError::new(rule, subject, msg))
}

fn node(rule: Rule, g: &TyCtx, p: &Cmv, splits: Vec<Split>, note: Option<Note>, premises: Vec<Derivation>) -> Derivation {
    Derivation { rule, ctx: g.clone(), subject: Subject::Cmv(p.clone()), splits, note, premises }
}

/// `Γ1 ⊢ x : T` with `Γ1 = x:Γ(x), un(Γ)` and `Γ2 = Γ ∖ x`.
fn endpoint(g: &TyCtx, x: &Name, rule: Rule, p: &Cmv) -> Result<(SessionType, Split), TypeError> {
    match g.get(x) {
        Some(t) => Ok((t.clone(), Split { left: g.filter(|n, t| n == x || un_pred(t)), right: g.without(x) })),
        None => err(rule, p, format!("endpoint `{x}` is not in the context")),
    }
}

fn add(g: &TyCtx, x: &Name, t: &SessionType, rule: Rule, p: &Cmv) -> Result<TyCtx, TypeError> {
    g.add(x, t).map_err(|e| TypeError::new(rule, p, e.to_string()))
}

fn proc(g: &TyCtx, p: &Cmv) -> Result<Derivation, TypeError> {
    match p {
        Cmv::Inact => {
            if !g.is_un() {
                let lin: Vec<String> = g.filter(|_, t| !un_pred(t)).names().map(|n| n.to_string()).collect();
                return err(Rule::Inact, p, format!("linear names left unused: {}", lin.join(", ")));
            }
            Ok(node(Rule::Inact, g, p, vec![], None, vec![]))
        }
        Cmv::Par(ps) if ps.is_empty() => proc(g, &Cmv::Inact),
        Cmv::Par(ps) if ps.len() == 1 => proc(g, &ps[0]),
        Cmv::Par(ps) => {
            let first = &ps[0];
            let rest = if ps.len() == 2 { ps[1].clone() } else { Cmv::Par(ps[1..].to_vec()) };
            let s = split_by(g, &first.free_names(), &rest.free_names(), Rule::Par, p)?;
            let d1 = proc(&s.left, first)?;
            let d2 = proc(&s.right, &rest)?;
            Ok(node(Rule::Par, g, p, vec![s], None, vec![d1, d2]))
        }
        Cmv::If(e, a, b) => {
            let left = g.un_part();
            let cond = condition(&left, e, p)?;
            let da = proc(g, a)?;
            let db = proc(g, b)?;
            Ok(node(Rule::If, g, p, vec![Split { left, right: g.clone() }], None, vec![cond, da, db]))
        }
        Cmv::Res(x, y, ann, body) => {
            if x == y {
                return err(Rule::Res, p, "a restriction binds two distinct endpoints");
            }
            let t = match ann {
                Some(t) => t.clone(),
                None => return err(Rule::Res, p, format!("restriction on `{x} {y}` needs a type annotation")),
            };
            t.check_wf().map_err(|m| TypeError::new(Rule::Res, p, m))?;
            let u = dualize(&t).map_err(|e| TypeError::new(Rule::Res, p, e.to_string()))?;
            if !dual(&t, &u) {
                return err(Rule::Res, p, format!("`{t}` and `{u}` are not dual"));
            }
            let (x, y, body) = fresh_binders(g, x, y, body);
            let subject = Cmv::Res(x.clone(), y.clone(), ann.clone(), Box::new(body.clone()));
            let inner = add(g, &x, &t, Rule::Res, p).and_then(|c| add(&c, &y, &u, Rule::Res, p))?;
            let d = proc(&inner, &body)?;
            Ok(node(Rule::Res, g, &subject, vec![], Some(Note::Restriction { left: t, right: u, inferred: false }), vec![d]))
        }
        Cmv::Out(x, v, k) => {
            let (declared, s) = endpoint(g, x, Rule::Out, p)?;
            let used = declared.unfold();
            let (pay, cont) = match &used {
                SessionType::Com(_, Pol::Out, a, c) => ((**a).clone(), (**c).clone()),
                t => return err(Rule::Out, p, format!("`{x}` has type `{t}`, not an output")),
            };
            let added = add(&s.right, x, &cont, Rule::Out, p)?;
            let vn: BTreeSet<Name> = v.name().into_iter().cloned().collect();
            let s2 = split_by(&added, &vn, &k.free_names(), Rule::Out, p)?;
            let dv = value(&s2.left, v, &pay, p)?;
            let dk = proc(&s2.right, k)?;
            let note = Note::Endpoint { name: x.clone(), declared, used };
            Ok(node(Rule::Out, g, p, vec![s, s2], Some(note), vec![dv, dk]))
        }
        Cmv::In(q, x, y, k) => {
            if *q == Qual::Un && !g.is_un() {
                return err(Rule::In, p, "an unrestricted input needs an unrestricted context");
            }
            let (declared, s) = endpoint(g, x, Rule::In, p)?;
            let used = declared.unfold();
            let (pay, cont) = match &used {
                SessionType::Com(_, Pol::In, a, c) => ((**a).clone(), (**c).clone()),
                t => return err(Rule::In, p, format!("`{x}` has type `{t}`, not an input")),
            };
            let base = add(&s.right, x, &cont, Rule::In, p)?;
            let (y, k, subject) = if base.contains(y) {
                let mut avoid: BTreeSet<Name> = base.names().cloned().collect();
                avoid.extend(k.free_names());
                let y2 = prime_away(y, &avoid);
                let k2 = k.subst(&[(y.clone(), Value::Name(y2.clone()))].into_iter().collect());
                let subject = Cmv::In(*q, x.clone(), y2.clone(), Box::new(k2.clone()));
                (y2, k2, subject)
            } else {
                (y.clone(), (**k).clone(), p.clone())
            };
            let inner = add(&base, &y, &pay, Rule::In, p)?;
            let dk = proc(&inner, &k)?;
            let note = Note::Endpoint { name: x.clone(), declared, used };
            Ok(node(Rule::In, g, &subject, vec![s], Some(note), vec![dk]))
        }
        Cmv::Branch(x, m) => {
            let (declared, s) = endpoint(g, x, Rule::Branch, p)?;
            let used = declared.unfold();
            let tm = match &used {
                SessionType::Choice(_, View::Ext, tm) => tm.clone(),
                t => return err(Rule::Branch, p, format!("`{x}` has type `{t}`, not a branching type")),
            };
            if !tm.keys().eq(m.keys()) {
                return err(Rule::Branch, p, "branch labels differ from the type");
            }
            let mut premises = Vec::new();
            for (l, k) in m {
                let c = add(&s.right, x, &tm[l], Rule::Branch, p)?;
                premises.push(proc(&c, k)?);
            }
            let note = Note::Endpoint { name: x.clone(), declared, used };
            Ok(node(Rule::Branch, g, p, vec![s], Some(note), premises))
        }
        Cmv::Sel(x, l, k) => {
            let (declared, s) = endpoint(g, x, Rule::Sel, p)?;
            let (q, tm) = match declared.unfold() {
                SessionType::Choice(q, View::Int, tm) => (q, tm),
                t => return err(Rule::Sel, p, format!("`{x}` has type `{t}`, not a selection type")),
            };
            let t = match tm.get(l) {
                Some(t) => t.clone(),
                None => return err(Rule::Sel, p, format!("label `{l}` is not offered by `{declared}`")),
            };
            let used = SessionType::Choice(q, View::Int, [(l.clone(), t.clone())].into_iter().collect());
            let c = add(&s.right, x, &t, Rule::Sel, p)?;
            let dk = proc(&c, k)?;
            let note = Note::Endpoint { name: x.clone(), declared, used };
            Ok(node(Rule::Sel, g, p, vec![s], Some(note), vec![dk]))
        }
    }
}

fn fresh_binders(g: &TyCtx, x: &Name, y: &Name, body: &Cmv) -> (Name, Name, Cmv) {
    let mut avoid: BTreeSet<Name> = g.names().cloned().collect();
    avoid.extend(body.free_names());
    avoid.insert(x.clone());
    avoid.insert(y.clone());
    let mut sigma = BTreeMap::new();
    let mut pick = |n: &Name| {
        if g.contains(n) {
            let m = prime_away(n, &avoid);
            avoid.insert(m.clone());
            sigma.insert(n.clone(), Value::Name(m.clone()));
            m
        } else {
            n.clone()
        }
    };
    let x2 = pick(x);
    let y2 = pick(y);
    (x2, y2, body.subst(&sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Label;

    fn n(s: &str) -> Name {
        Name::parse(s)
    }

    #[test]
    fn linear_send_receive() {
        let t = SessionType::com(Qual::Lin, Pol::Out, SessionType::Bool, SessionType::End);
        let p = Cmv::res(
            &n("x"),
            &n("y"),
            Some(t),
            Cmv::Par(vec![Cmv::out(&n("x"), Value::True, Cmv::Inact), Cmv::inp(Qual::Lin, &n("y"), &n("z"), Cmv::Inact)]),
        );
        let d = check_cmv(&TyCtx::new(), &p).unwrap();
        d.replay().unwrap();
    }

    #[test]
    fn selection_uses_subsumption() {
        let t = SessionType::Choice(
            Qual::Un,
            View::Int,
            [(Label::new("a"), SessionType::End), (Label::new("b"), SessionType::End)].into_iter().collect(),
        );
        let sel = |l: &str| Cmv::sel(&n("t"), Label::new(l), Cmv::Inact);
        let branch = Cmv::Branch(n("s"), [(Label::new("a"), Cmv::Inact), (Label::new("b"), Cmv::Inact)].into_iter().collect());
        let p = Cmv::res(&n("s"), &n("t"), Some(dualize(&t).unwrap()), Cmv::Par(vec![branch, sel("a"), sel("b")]));
        let d = check_cmv(&TyCtx::new(), &p).unwrap();
        d.replay().unwrap();
    }

    #[test]
    fn unannotated_restriction_is_rejected() {
        let p = Cmv::res(&n("x"), &n("y"), None, Cmv::Inact);
        assert!(check_cmv(&TyCtx::new(), &p).is_err());
    }
}
