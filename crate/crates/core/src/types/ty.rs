//! Session types for both session calculi.

use crate::syntax::{Label, Pol, Qual, View};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TBranch {
    pub label: Label,
    pub pol: Pol,
    pub payload: SessionType,
    pub cont: SessionType,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SessionType {
    End,
    Unit,
    Bool,
    Var(Arc<str>),
    Rec(Arc<str>, Box<SessionType>),
    /// Mixed choice type of the mixed-session calculus.
    Mix(Qual, View, Vec<TBranch>),
    /// `q !T.U` / `q ?T.U` of the classic calculus.
    Com(Qual, Pol, Box<SessionType>, Box<SessionType>),
    /// Plain labelled choice of the classic calculus.
    Choice(Qual, View, BTreeMap<Label, SessionType>),
}

use SessionType as T;

impl SessionType {
    pub fn var(t: &str) -> T {
        T::Var(t.into())
    }

    pub fn rec(t: &str, body: T) -> T {
        T::Rec(t.into(), Box::new(body))
    }

    pub fn mix(q: Qual, v: View, bs: Vec<(&str, Pol, T, T)>) -> T {
        T::Mix(
            q,
            v,
            bs.into_iter()
                .map(|(l, pol, payload, cont)| TBranch { label: Label::new(l), pol, payload, cont })
                .collect(),
        )
    }

    pub fn com(q: Qual, p: Pol, payload: T, cont: T) -> T {
        T::Com(q, p, Box::new(payload), Box::new(cont))
    }

    pub fn is_session(&self) -> bool {
        !matches!(self, T::Unit | T::Bool)
    }

    /// Substitute `r` for free occurrences of type variable `t`.
    pub fn subst_var(&self, t: &str, r: &T) -> T {
        match self {
            T::Var(s) if &**s == t => r.clone(),
            T::End | T::Unit | T::Bool | T::Var(_) => self.clone(),
            T::Rec(s, _) if &**s == t => self.clone(),
            T::Rec(s, b) => T::Rec(s.clone(), Box::new(b.subst_var(t, r))),
            T::Mix(q, v, bs) => T::Mix(
                *q,
                *v,
                bs.iter()
                    .map(|b| TBranch {
                        label: b.label.clone(),
                        pol: b.pol,
                        payload: b.payload.subst_var(t, r),
                        cont: b.cont.subst_var(t, r),
                    })
                    .collect(),
            ),
            T::Com(q, p, a, b) => T::Com(*q, *p, Box::new(a.subst_var(t, r)), Box::new(b.subst_var(t, r))),
            T::Choice(q, v, m) => T::Choice(*q, *v, m.iter().map(|(l, x)| (l.clone(), x.subst_var(t, r))).collect()),
        }
    }

    /// Unfold leading recursions until the head is not `rec`.
    pub fn unfold(&self) -> T {
        let mut cur = self.clone();
        let mut guard = 0;
        while let T::Rec(t, b) = &cur {
            let next = b.subst_var(t, &cur);
            cur = next;
            guard += 1;
            if guard > 64 {
                break;
            }
        }
        cur
    }

    pub fn free_vars(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut Vec::new(), &mut out);
        out
    }

    fn collect_vars(&self, bound: &mut Vec<Arc<str>>, out: &mut BTreeSet<Arc<str>>) {
        match self {
            T::Var(t) => {
                if !bound.contains(t) {
                    out.insert(t.clone());
                }
            }
            T::End | T::Unit | T::Bool => {}
            T::Rec(t, b) => {
                bound.push(t.clone());
                b.collect_vars(bound, out);
                bound.pop();
            }
            T::Mix(_, _, bs) => bs.iter().for_each(|b| {
                b.payload.collect_vars(bound, out);
                b.cont.collect_vars(bound, out);
            }),
            T::Com(_, _, a, b) => {
                a.collect_vars(bound, out);
                b.collect_vars(bound, out);
            }
            T::Choice(_, _, m) => m.values().for_each(|x| x.collect_vars(bound, out)),
        }
    }

    /// No `rec t1. ... rec tn. t1` chains.
    pub fn is_contractive(&self) -> bool {
        fn go(t: &T, head: &mut Vec<Arc<str>>) -> bool {
            match t {
                T::Var(v) => !head.contains(v),
                T::Rec(v, b) => {
                    head.push(v.clone());
                    let ok = go(b, head);
                    head.pop();
                    ok
                }
                T::End | T::Unit | T::Bool => true,
                T::Mix(_, _, bs) => bs.iter().all(|b| go(&b.payload, &mut Vec::new()) && go(&b.cont, &mut Vec::new())),
                T::Com(_, _, a, b) => go(a, &mut Vec::new()) && go(b, &mut Vec::new()),
                T::Choice(_, _, m) => m.values().all(|x| go(x, &mut Vec::new())),
            }
        }
        go(self, &mut Vec::new())
    }

    /// Structural well-formedness: non-empty choices, distinct label-polarity
    /// pairs, contractive recursion, closed.
    pub fn check_wf(&self) -> Result<(), String> {
        if !self.is_contractive() {
            return Err(format!("recursive type `{self}` is not contractive"));
        }
        if let Some(v) = self.free_vars().into_iter().next() {
            return Err(format!("type variable `{v}` is unbound"));
        }
        self.check_branches()
    }

    fn check_branches(&self) -> Result<(), String> {
        match self {
            T::Mix(_, _, bs) => {
                if bs.is_empty() {
                    return Err("choice type with empty index set".into());
                }
                let mut seen = BTreeSet::new();
                for b in bs {
                    if !seen.insert((b.label.clone(), b.pol)) {
                        return Err(format!("duplicate branch {}{} in choice type", b.label, b.pol));
                    }
                    b.payload.check_branches()?;
                    b.cont.check_branches()?;
                }
                Ok(())
            }
            T::Choice(_, _, m) => {
                if m.is_empty() {
                    return Err("choice type with empty index set".into());
                }
                m.values().try_for_each(|x| x.check_branches())
            }
            T::Com(_, _, a, b) => {
                a.check_branches()?;
                b.check_branches()
            }
            T::Rec(_, b) => b.check_branches(),
            _ => Ok(()),
        }
    }

    fn is_atomic(&self) -> bool {
        matches!(self, T::End | T::Unit | T::Bool | T::Var(_))
    }
}

fn fmt_payload(f: &mut fmt::Formatter<'_>, t: &T) -> fmt::Result {
    if t.is_atomic() {
        write!(f, "{t}")
    } else {
        write!(f, "({t})")
    }
}

impl fmt::Display for SessionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            T::End => f.write_str("end"),
            T::Unit => f.write_str("unit"),
            T::Bool => f.write_str("bool"),
            T::Var(t) => f.write_str(t),
            T::Rec(t, b) => write!(f, "rec {t}. {b}"),
            T::Mix(q, v, bs) => {
                write!(f, "{q} {v}{{")?;
                for (i, b) in bs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}{}", b.label, b.pol)?;
                    fmt_payload(f, &b.payload)?;
                    write!(f, ".{}", b.cont)?;
                }
                f.write_str("}")
            }
            T::Com(q, p, a, b) => {
                write!(f, "{q} {p}")?;
                fmt_payload(f, a)?;
                write!(f, ".{b}")
            }
            T::Choice(q, v, m) => {
                write!(f, "{q} {v}{{")?;
                for (i, (l, x)) in m.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{l}: {x}")?;
                }
                f.write_str("}")
            }
        }
    }
}

impl Serialize for SessionType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contractivity() {
        assert!(T::rec("t", T::mix(Qual::Un, View::Int, vec![("l", Pol::Out, T::Bool, T::var("t"))])).is_contractive());
        assert!(!T::rec("t", T::var("t")).is_contractive());
        assert!(!T::rec("t", T::rec("s", T::var("t"))).is_contractive());
    }

    #[test]
    fn display_forms() {
        let t = T::mix(Qual::Lin, View::Int, vec![("l", Pol::Out, T::Bool, T::End), ("l", Pol::In, T::Bool, T::End)]);
        assert_eq!(t.to_string(), "lin +{l!bool.end, l?bool.end}");
        let c = T::com(Qual::Un, Pol::Out, t.clone(), T::var("t"));
        assert_eq!(c.to_string(), "un !(lin +{l!bool.end, l?bool.end}).t");
    }

    #[test]
    fn wf_rejects_duplicates() {
        let t = T::mix(Qual::Lin, View::Int, vec![("l", Pol::Out, T::Bool, T::End), ("l", Pol::Out, T::Unit, T::End)]);
        assert!(t.check_wf().is_err());
    }
}
