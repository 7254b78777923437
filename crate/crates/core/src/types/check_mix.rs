//! Algorithmic checker for mixed sessions. Splits are decided by free-name
//! usage instead of search, and every split is recorded in the derivation.

use super::ctx::TyCtx;
use super::deriv::{Derivation, Note, Rule, Split, Subject, TypeError};
use super::ops::{dual, dualize, subtype, type_equiv, un_pred};
use super::ty::{SessionType, TBranch};
use crate::name::Name;
use crate::syntax::mix::{Branch, Mix};
use crate::syntax::{prime_away, Expr, Pol, Qual, Value, View};
use std::collections::{BTreeMap, BTreeSet};

/// `Γ ⊢ P` for a mixed-session process.
pub fn check_mix(ctx: &TyCtx, p: &Mix) -> Result<Derivation, TypeError> {
    for (n, t) in ctx.entries() {
        t.check_wf().map_err(|m| TypeError::new(Rule::Var, n, m))?;
    }
    proc(ctx, p)
}

fn err<T>(rule: Rule, subject: impl std::fmt::Display, msg: impl Into<String>) -> Result<T, TypeError> {
    Err(TypeError::new(rule, subject, msg))
}

/// Split `g` so that linear names free in `left_uses` go left and all other
/// linear names go right; unrestricted entries go to both sides.
pub(crate) fn split_by(
    g: &TyCtx,
    left_uses: &BTreeSet<Name>,
    right_uses: &BTreeSet<Name>,
    rule: Rule,
    subject: &dyn std::fmt::Display,
) -> Result<Split, TypeError> {
    for (n, t) in g.entries() {
        if !un_pred(t) && left_uses.contains(n) && right_uses.contains(n) {
            return err(rule, subject, format!("linear name `{n}` is used on both sides"));
        }
    }
    let left = g.filter(|n, t| un_pred(t) || left_uses.contains(n));
    let right = g.filter(|n, t| un_pred(t) || !left_uses.contains(n));
    Ok(Split { left, right })
}

fn proc(g: &TyCtx, p: &Mix) -> Result<Derivation, TypeError> {
    match p {
        _ if p.is_nil() => {
            if !g.is_un() {
                let lin: Vec<String> = g.filter(|_, t| !un_pred(t)).names().map(|n| n.to_string()).collect();
                return err(Rule::Inact, p, format!("linear names left unused: {}", lin.join(", ")));
            }
            Ok(Derivation::leaf(Rule::Inact, g.clone(), Subject::Mix(p.clone())))
        }
        Mix::Par(ps) if ps.len() == 1 => proc(g, &ps[0]),
        Mix::Par(ps) => {
            let first = &ps[0];
            let rest = if ps.len() == 2 { ps[1].clone() } else { Mix::Par(ps[1..].to_vec()) };
            let s = split_by(g, &first.free_names(), &rest.free_names(), Rule::Par, p)?;
            let d1 = proc(&s.left, first)?;
            let d2 = proc(&s.right, &rest)?;
            Ok(Derivation {
                rule: Rule::Par,
                ctx: g.clone(),
                subject: Subject::Mix(p.clone()),
                splits: vec![s],
                note: None,
                premises: vec![d1, d2],
            })
        }
        Mix::Res(x, y, ann, body) => res(g, p, x, y, ann.as_ref(), body),
        Mix::If(e, a, b) => {
            let left = g.un_part();
            let cond = condition(&left, e, p)?;
            let da = proc(g, a)?;
            let db = proc(g, b)?;
            Ok(Derivation {
                rule: Rule::If,
                ctx: g.clone(),
                subject: Subject::Mix(p.clone()),
                splits: vec![Split { left, right: g.clone() }],
                note: None,
                premises: vec![cond, da, db],
            })
        }
        Mix::Choice(q, x, bs) => choice(g, p, *q, x, bs),
        Mix::Inact => unreachable!("handled by is_nil"),
    }
}

/// Type a condition under an unrestricted context.
pub(crate) fn condition(g: &TyCtx, e: &Expr, whole: &dyn std::fmt::Display) -> Result<Derivation, TypeError> {
    match e {
        Expr::Val(v) => value(g, v, &SessionType::Bool, whole),
        _ => {
            let mut atoms = Vec::new();
            collect_atoms(e, &mut atoms);
            let mut premises = Vec::new();
            for v in atoms {
                premises.push(value(g, &v, &SessionType::Bool, whole)?);
            }
            Ok(Derivation {
                rule: Rule::Op,
                ctx: g.clone(),
                subject: Subject::Cond(e.clone()),
                splits: vec![],
                note: None,
                premises,
            })
        }
    }
}

fn collect_atoms(e: &Expr, out: &mut Vec<Value>) {
    match e {
        Expr::Val(v) => out.push(v.clone()),
        Expr::Not(a) => collect_atoms(a, out),
        Expr::And(a, b) | Expr::Or(a, b) => {
            collect_atoms(a, out);
            collect_atoms(b, out);
        }
    }
}

/// `Γ ⊢ v : T`, with subsumption at the leaf when needed.
pub(crate) fn value(g: &TyCtx, v: &Value, want: &SessionType, whole: &dyn std::fmt::Display) -> Result<Derivation, TypeError> {
    let (rule, actual) = match v {
        Value::True => (Rule::True, SessionType::Bool),
        Value::False => (Rule::False, SessionType::Bool),
        Value::Unit => (Rule::Unit, SessionType::Unit),
        Value::Name(x) => match g.get(x) {
            Some(t) => (Rule::Var, t.clone()),
            None => return err(Rule::Var, whole, format!("name `{x}` is not in the context")),
        },
    };
    let rest_un = match v {
        Value::Name(x) => g.without(x).is_un(),
        _ => g.is_un(),
    };
    if !rest_un {
        return err(rule, whole, format!("context of value `{v}` is not unrestricted"));
    }
    let leaf = Derivation::leaf(rule, g.clone(), Subject::Value(v.clone(), actual.clone()));
    if type_equiv(&actual, want) {
        return Ok(leaf);
    }
    if subtype(&actual, want) {
        return Ok(Derivation {
            rule: Rule::Sub,
            ctx: g.clone(),
            subject: Subject::Value(v.clone(), want.clone()),
            splits: vec![],
            note: None,
            premises: vec![leaf],
        });
    }
    err(rule, whole, format!("value `{v}` has type `{actual}`, expected `{want}`"))
}

fn res(g: &TyCtx, p: &Mix, x: &Name, y: &Name, ann: Option<&SessionType>, body: &Mix) -> Result<Derivation, TypeError> {
    if x == y {
        return err(Rule::Res, p, "a restriction binds two distinct endpoints");
    }
    // Rename binders that clash with the context.
    let (x, y, body) = fresh_binders(g, x, y, body);
    let subject_p = match p {
        Mix::Res(_, _, t, _) => Mix::Res(x.clone(), y.clone(), t.clone(), Box::new(body.clone())),
        _ => unreachable!(),
    };
    let candidates: Vec<(SessionType, SessionType, bool)> = match ann {
        Some(t) => {
            t.check_wf().map_err(|m| TypeError::new(Rule::Res, p, m))?;
            let u = dualize(t).map_err(|e| TypeError::new(Rule::Res, p, e.to_string()))?;
            vec![(t.clone(), u, false)]
        }
        None => infer_pair(g, &x, &y, &body)
            .into_iter()
            .map(|(t, u)| (t, u, true))
            .collect(),
    };
    if candidates.is_empty() {
        return err(Rule::Res, p, format!("cannot infer a type for `{x}`; add an annotation `(new {x} {y} : T)`"));
    }
    let mut last = None;
    for (t, u, inferred) in candidates {
        if !dual(&t, &u) {
            last = Some(TypeError::new(Rule::Res, p, format!("`{t}` and `{u}` are not dual")));
            continue;
        }
        let inner = g
            .add(&x, &t)
            .and_then(|c| c.add(&y, &u))
            .map_err(|e| TypeError::new(Rule::Res, p, e.to_string()))?;
        match proc(&inner, &body) {
            Ok(d) => {
                return Ok(Derivation {
                    rule: Rule::Res,
                    ctx: g.clone(),
                    subject: Subject::Mix(subject_p),
                    splits: vec![],
                    note: Some(Note::Restriction { left: t, right: u, inferred }),
                    premises: vec![d],
                })
            }
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one candidate"))
}

fn fresh_binders(g: &TyCtx, x: &Name, y: &Name, body: &Mix) -> (Name, Name, Mix) {
    let mut avoid: BTreeSet<Name> = g.names().cloned().collect();
    avoid.extend(body.free_names());
    let mut sigma = BTreeMap::new();
    let mut pick = |n: &Name, avoid: &mut BTreeSet<Name>| {
        if g.contains(n) {
            let m = prime_away(n, avoid);
            avoid.insert(m.clone());
            sigma.insert(n.clone(), Value::Name(m.clone()));
            m
        } else {
            n.clone()
        }
    };
    let x2 = pick(x, &mut avoid);
    avoid.insert(x2.clone());
    let y2 = pick(y, &mut avoid);
    (x2, y2, body.subst(&sigma))
}

/// Candidate endpoint types for an unannotated restriction, built from the
/// choices on either endpoint.
fn infer_pair(g: &TyCtx, x: &Name, y: &Name, body: &Mix) -> Vec<(SessionType, SessionType)> {
    let mut shape: BTreeMap<(crate::syntax::Label, Pol), Option<SessionType>> = BTreeMap::new();
    let mut un = false;
    let mut count = [0usize; 2];
    let mut reused = false;
    let mut stack = vec![body];
    while let Some(p) = stack.pop() {
        match p {
            Mix::Choice(q, z, bs) => {
                let side = if z == x {
                    Some(0)
                } else if z == y {
                    Some(1)
                } else {
                    None
                };
                if let Some(side) = side {
                    count[side] += 1;
                    un |= *q == Qual::Un;
                    for b in bs {
                        if b.cont.free_names().contains(z) {
                            reused = true;
                        }
                        let pol = if side == 0 { b.pol } else { b.pol.flip() };
                        let payload = match (&b.pol, &b.arg) {
                            (Pol::Out, Value::True | Value::False) => Some(SessionType::Bool),
                            (Pol::Out, Value::Unit) => Some(SessionType::Unit),
                            (Pol::Out, Value::Name(n)) => g.get(n).filter(|t| un_pred(t)).cloned(),
                            (Pol::In, _) => None,
                        };
                        let slot = shape.entry((b.label.clone(), pol)).or_insert(None);
                        if slot.is_none() {
                            *slot = payload;
                        }
                    }
                }
                stack.extend(bs.iter().map(|b| &b.cont));
            }
            Mix::Par(ps) => stack.extend(ps.iter()),
            Mix::Res(a, b, _, q) if a != x && a != y && b != x && b != y => stack.push(q),
            Mix::Res(..) => {}
            Mix::If(_, a, b) => {
                stack.push(a);
                stack.push(b);
            }
            Mix::Inact => {}
        }
    }
    if shape.is_empty() || shape.values().any(|t| t.is_none()) {
        return vec![];
    }
    let un = un || reused || count[0] > 1 || count[1] > 1;
    let q = if un { Qual::Un } else { Qual::Lin };
    let cont = if reused { SessionType::var("t") } else { SessionType::End };
    let branches: Vec<TBranch> = shape
        .into_iter()
        .map(|((label, pol), payload)| TBranch { label, pol, payload: payload.expect("checked"), cont: cont.clone() })
        .collect();
    let mut out = vec![];
    for view in [View::Int, View::Ext] {
        let body_t = SessionType::Mix(q, view, branches.clone());
        let t = if reused { SessionType::Rec("t".into(), Box::new(body_t)) } else { body_t };
        if let Ok(u) = dualize(&t) {
            out.push((t, u));
        }
    }
    out
}

fn choice(g: &TyCtx, p: &Mix, q: Qual, x: &Name, bs: &[Branch]) -> Result<Derivation, TypeError> {
    if q == Qual::Un && !g.is_un() {
        return err(Rule::Choice, p, "an unrestricted choice needs an unrestricted context");
    }
    let declared = match g.get(x) {
        Some(t) => t.clone(),
        None => return err(Rule::Choice, p, format!("endpoint `{x}` is not in the context")),
    };
    let unfolded = declared.unfold();
    let (tq, view, tbs) = match &unfolded {
        SessionType::Mix(tq, v, tbs) => (*tq, *v, tbs.clone()),
        t => return err(Rule::Choice, p, format!("endpoint `{x}` has non-choice type `{t}`")),
    };
    let proc_set: BTreeSet<_> = bs.iter().map(|b| (b.label.clone(), b.pol)).collect();
    let type_set: BTreeSet<_> = tbs.iter().map(|b| (b.label.clone(), b.pol)).collect();
    let used_bs: Vec<TBranch> = match view {
        View::Int => {
            if let Some((l, pol)) = proc_set.difference(&type_set).next() {
                return err(Rule::Choice, p, format!("branch `{l}{pol}` is not offered by `{declared}`"));
            }
            tbs.iter().filter(|b| proc_set.contains(&(b.label.clone(), b.pol))).cloned().collect()
        }
        View::Ext => {
            if proc_set != type_set {
                let missing: Vec<String> =
                    type_set.symmetric_difference(&proc_set).map(|(l, pol)| format!("{l}{pol}")).collect();
                return err(Rule::Choice, p, format!("external choice must cover exactly the type's branches; mismatch on {}", missing.join(", ")));
            }
            tbs.clone()
        }
    };
    let used = SessionType::Mix(tq, view, used_bs.clone());
    let bs: Vec<Branch> = bs.iter().map(|b| rename_clashing_binder(g, b)).collect();
    let p = &Mix::Choice(q, x.clone(), bs.clone());
    let left = g.filter(|n, t| n == x || un_pred(t));
    let right = g.without(x);
    let mut premises = Vec::new();
    for b in &bs {
        let tb = used_bs.iter().find(|t| t.label == b.label && t.pol == b.pol).expect("label checked");
        let bctx = right.add(x, &tb.cont).map_err(|e| TypeError::new(Rule::Choice, p, e.to_string()))?;
        premises.push(branch(&bctx, b, tb)?);
    }
    Ok(Derivation {
        rule: Rule::Choice,
        ctx: g.clone(),
        subject: Subject::Mix(p.clone()),
        splits: vec![Split { left, right }],
        note: Some(Note::Endpoint { name: x.clone(), declared, used }),
        premises,
    })
}

/// Receive binders that shadow a context name are renamed apart.
fn rename_clashing_binder(g: &TyCtx, b: &Branch) -> Branch {
    match b.bound_var() {
        Some(z) if g.contains(z) => {
            let mut avoid: BTreeSet<Name> = g.names().cloned().collect();
            avoid.extend(b.cont.free_names());
            let z2 = prime_away(z, &avoid);
            let sigma = [(z.clone(), Value::Name(z2.clone()))].into_iter().collect();
            Branch { label: b.label.clone(), pol: Pol::In, arg: Value::Name(z2), cont: b.cont.subst(&sigma) }
        }
        _ => b.clone(),
    }
}

fn branch(g: &TyCtx, b: &Branch, tb: &TBranch) -> Result<Derivation, TypeError> {
    match b.pol {
        Pol::Out => {
            let mut vnames = BTreeSet::new();
            if let Value::Name(n) = &b.arg {
                vnames.insert(n.clone());
            }
            let s = split_by(g, &vnames, &b.cont.free_names(), Rule::Out, b)?;
            let dv = value(&s.left, &b.arg, &tb.payload, b)?;
            let dp = proc(&s.right, &b.cont)?;
            Ok(Derivation {
                rule: Rule::Out,
                ctx: g.clone(),
                subject: Subject::Branch(b.clone(), tb.clone()),
                splits: vec![s],
                note: None,
                premises: vec![dv, dp],
            })
        }
        Pol::In => {
            let z = match b.bound_var() {
                Some(z) => z.clone(),
                None => return err(Rule::In, b, "receive branch without a variable"),
            };
            let inner = g.add(&z, &tb.payload).map_err(|e| TypeError::new(Rule::In, b, e.to_string()))?;
            let dp = proc(&inner, &b.cont)?;
            Ok(Derivation {
                rule: Rule::In,
                ctx: g.clone(),
                subject: Subject::Branch(b.clone(), tb.clone()),
                splits: vec![],
                note: None,
                premises: vec![dp],
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Qual::*;

    fn t1() -> SessionType {
        SessionType::mix(Un, View::Int, vec![("l", Pol::Out, SessionType::Bool, SessionType::End), ("l", Pol::In, SessionType::Bool, SessionType::End)])
    }

    fn pm() -> Mix {
        let c = |x: &str, v: Value, out_first: bool| {
            let o = Branch::send("l", v, Mix::Inact);
            let i = Branch::recv("l", "z", Mix::Inact);
            Mix::lin(x, if out_first { vec![o, i] } else { vec![i, o] })
        };
        Mix::res(
            "x",
            "y",
            Some(t1()),
            Mix::Par(vec![c("x", Value::True, true), c("x", Value::False, true), c("y", Value::True, false), c("y", Value::False, false)]),
        )
    }

    #[test]
    fn pm_typechecks_with_expected_skeleton() {
        let d = check_mix(&TyCtx::new(), &pm()).unwrap();
        d.replay().unwrap();
        assert_eq!(d.rule, Rule::Res);
        assert_eq!(d.count_rule(Rule::Par), 3);
        assert_eq!(d.count_rule(Rule::Choice), 4);
        assert!(d.leaves().iter().all(|r| matches!(r, Rule::True | Rule::False | Rule::Inact)));
    }

    #[test]
    fn unannotated_pm_is_inferred() {
        let p = match pm() {
            Mix::Res(x, y, _, b) => Mix::Res(x, y, None, b),
            _ => unreachable!(),
        };
        let d = check_mix(&TyCtx::new(), &p).unwrap();
        d.replay().unwrap();
    }

    #[test]
    fn linear_endpoint_used_twice_is_rejected() {
        let lt = SessionType::mix(Lin, View::Int, vec![("l", Pol::Out, SessionType::Bool, SessionType::End)]);
        let p = Mix::res(
            "x",
            "y",
            Some(lt),
            Mix::Par(vec![
                Mix::lin("x", vec![Branch::send("l", Value::True, Mix::Inact)]),
                Mix::lin("x", vec![Branch::send("l", Value::True, Mix::Inact)]),
                Mix::lin("y", vec![Branch::recv("l", "z", Mix::Inact)]),
            ]),
        );
        assert!(check_mix(&TyCtx::new(), &p).is_err());
    }

    #[test]
    fn inaction_needs_unrestricted_context() {
        let lt = SessionType::mix(Lin, View::Int, vec![("l", Pol::Out, SessionType::Bool, SessionType::End)]);
        let g = TyCtx::new().add(&Name::parse("a"), &lt).unwrap();
        assert!(check_mix(&g, &Mix::Inact).is_err());
        assert!(check_mix(&TyCtx::new(), &Mix::Inact).is_ok());
    }
}
