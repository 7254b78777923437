//! Mixed sessions: choices that mix sends and receives on one endpoint.

use super::{under_binder, Expr, Label, Occurrence, Path, Pol, Qual, Subst, Value};
use crate::name::Name;
use crate::types::SessionType;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Branch {
    pub label: Label,
    pub pol: Pol,
    /// The sent value, or the bound variable of a receive.
    pub arg: Value,
    pub cont: Mix,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Mix {
    Choice(Qual, Name, Vec<Branch>),
    Par(Vec<Mix>),
    /// Binds two endpoints of one channel; the optional type is the type of
    /// the first endpoint.
    Res(Name, Name, Option<SessionType>, Box<Mix>),
    If(Expr, Box<Mix>, Box<Mix>),
    Inact,
}

impl Branch {
    pub fn send(l: &str, v: Value, cont: Mix) -> Branch {
        Branch { label: Label::new(l), pol: Pol::Out, arg: v, cont }
    }

    pub fn recv(l: &str, x: &str, cont: Mix) -> Branch {
        Branch { label: Label::new(l), pol: Pol::In, arg: Value::Name(Name::parse(x)), cont }
    }

    pub fn bound_var(&self) -> Option<&Name> {
        match (self.pol, &self.arg) {
            (Pol::In, Value::Name(x)) => Some(x),
            _ => None,
        }
    }

    fn collect_free(&self, out: &mut BTreeSet<Name>) {
        match self.pol {
            Pol::Out => {
                if let Value::Name(n) = &self.arg {
                    out.insert(n.clone());
                }
                out.extend(self.cont.free_names());
            }
            Pol::In => {
                let mut inner = self.cont.free_names();
                if let Some(x) = self.bound_var() {
                    inner.remove(x);
                }
                out.extend(inner);
            }
        }
    }

    pub fn subst(&self, sigma: &Subst) -> Branch {
        match self.pol {
            Pol::Out => Branch {
                label: self.label.clone(),
                pol: Pol::Out,
                arg: self.arg.subst(sigma),
                cont: self.cont.subst(sigma),
            },
            Pol::In => {
                let x = self.bound_var().expect("receive branch binds a name").clone();
                let (inner, renamed) = under_binder(sigma, &x, &self.cont.free_names(), &BTreeSet::new());
                Branch {
                    label: self.label.clone(),
                    pol: Pol::In,
                    arg: Value::Name(renamed.unwrap_or(x)),
                    cont: self.cont.subst(&inner),
                }
            }
        }
    }
}

impl Mix {
    pub fn lin(x: &str, bs: Vec<Branch>) -> Mix {
        Mix::Choice(Qual::Lin, Name::parse(x), bs)
    }

    pub fn un(x: &str, bs: Vec<Branch>) -> Mix {
        Mix::Choice(Qual::Un, Name::parse(x), bs)
    }

    pub fn res(x: &str, y: &str, t: Option<SessionType>, p: Mix) -> Mix {
        Mix::Res(Name::parse(x), Name::parse(y), t, Box::new(p))
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Mix::Inact) || matches!(self, Mix::Choice(_, _, bs) if bs.is_empty())
    }

    pub fn free_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<Name>) {
        match self {
            Mix::Choice(_, x, bs) => {
                if !bs.is_empty() {
                    out.insert(x.clone());
                }
                bs.iter().for_each(|b| b.collect_free(out));
            }
            Mix::Par(ps) => ps.iter().for_each(|p| p.collect_free(out)),
            Mix::Res(x, y, _, p) => {
                let mut inner = p.free_names();
                inner.remove(x);
                inner.remove(y);
                out.extend(inner);
            }
            Mix::If(e, p, q) => {
                e.free_names(out);
                p.collect_free(out);
                q.collect_free(out);
            }
            Mix::Inact => {}
        }
    }

    /// Capture-avoiding substitution.
    pub fn subst(&self, sigma: &Subst) -> Mix {
        if sigma.is_empty() {
            return self.clone();
        }
        match self {
            Mix::Choice(q, x, bs) => {
                let x2 = match sigma.get(x) {
                    Some(Value::Name(n)) => n.clone(),
                    _ => x.clone(),
                };
                Mix::Choice(*q, x2, bs.iter().map(|b| b.subst(sigma)).collect())
            }
            Mix::Par(ps) => Mix::Par(ps.iter().map(|p| p.subst(sigma)).collect()),
            Mix::Res(x, y, t, p) => {
                let body_free = p.free_names();
                let (s1, rx) = under_binder(sigma, x, &body_free, &[y.clone()].into());
                let x2 = rx.unwrap_or_else(|| x.clone());
                let (s2, ry) = under_binder(&s1, y, &body_free, &[x2.clone()].into());
                let y2 = ry.unwrap_or_else(|| y.clone());
                Mix::Res(x2, y2, t.clone(), Box::new(p.subst(&s2)))
            }
            Mix::If(e, p, q) => Mix::If(e.subst(sigma), Box::new(p.subst(sigma)), Box::new(q.subst(sigma))),
            Mix::Inact => Mix::Inact,
        }
    }

    pub fn subterms(&self) -> Vec<Occurrence> {
        let mut out = Vec::new();
        self.walk(&mut Vec::new(), false, &mut out);
        out
    }

    fn walk(&self, path: &mut Path, guarded: bool, out: &mut Vec<Occurrence>) {
        out.push(Occurrence { path: path.clone(), guarded, text: self.to_string() });
        let kids: Vec<(&Mix, bool)> = match self {
            Mix::Choice(_, _, bs) => bs.iter().map(|b| (&b.cont, true)).collect(),
            Mix::Par(ps) => ps.iter().map(|p| (p, guarded)).collect(),
            Mix::Res(_, _, _, p) => vec![(&**p, guarded)],
            Mix::If(_, p, q) => vec![(&**p, true), (&**q, true)],
            Mix::Inact => vec![],
        };
        for (i, (k, g)) in kids.into_iter().enumerate() {
            path.push(i as u32);
            k.walk(path, g, out);
            path.pop();
        }
    }

    /// All names bound anywhere in the term.
    pub fn bound_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        fn go(p: &Mix, out: &mut BTreeSet<Name>) {
            match p {
                Mix::Choice(_, _, bs) => bs.iter().for_each(|b| {
                    if let Some(x) = b.bound_var() {
                        out.insert(x.clone());
                    }
                    go(&b.cont, out)
                }),
                Mix::Par(ps) => ps.iter().for_each(|p| go(p, out)),
                Mix::Res(x, y, _, p) => {
                    out.insert(x.clone());
                    out.insert(y.clone());
                    go(p, out)
                }
                Mix::If(_, p, q) => {
                    go(p, out);
                    go(q, out)
                }
                Mix::Inact => {}
            }
        }
        go(self, &mut out);
        out
    }

    fn is_tight(&self) -> bool {
        matches!(self, Mix::Inact | Mix::Choice(..))
    }
}

pub(crate) fn fmt_res_head(
    f: &mut fmt::Formatter<'_>,
    x: &Name,
    y: &Name,
    t: &Option<SessionType>,
) -> fmt::Result {
    match t {
        Some(t) => write!(f, "(new {x} {y} : {t})"),
        None => write!(f, "(new {x} {y})"),
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pol {
            Pol::Out => write!(f, "{}!{}", self.label, self.arg)?,
            Pol::In => write!(f, "{}?({})", self.label, self.arg)?,
        }
        if !self.cont.is_nil() {
            if self.cont.is_tight() {
                write!(f, ".{}", self.cont)?;
            } else {
                write!(f, ".({})", self.cont)?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Mix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mix::Inact => f.write_str("0"),
            Mix::Choice(_, _, bs) if bs.is_empty() => f.write_str("0"),
            Mix::Choice(q, x, bs) => {
                write!(f, "{q} {x}(")?;
                for (i, b) in bs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    write!(f, "{b}")?;
                }
                f.write_str(")")
            }
            Mix::Par(ps) if ps.is_empty() => f.write_str("0"),
            Mix::Par(ps) => {
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    match p {
                        Mix::Res(..) | Mix::If(..) | Mix::Par(..) => write!(f, "({p})")?,
                        _ => write!(f, "{p}")?,
                    }
                }
                Ok(())
            }
            Mix::Res(x, y, t, p) => {
                fmt_res_head(f, x, y, t)?;
                write!(f, " {p}")
            }
            Mix::If(e, p, q) => write!(f, "if {e} then {p} else {q}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::subst_of;

    #[test]
    fn free_names_respect_binders() {
        let p = Mix::res(
            "x",
            "y",
            None,
            Mix::Par(vec![
                Mix::lin("x", vec![Branch::send("l", Value::Name("a".into()), Mix::Inact)]),
                Mix::lin("y", vec![Branch::recv("l", "z", Mix::lin("z", vec![]))]),
                Mix::lin("o", vec![Branch::send("done", Value::Unit, Mix::Inact)]),
            ]),
        );
        let fv: Vec<String> = p.free_names().iter().map(|n| n.to_string()).collect();
        assert_eq!(fv, vec!["a", "o"]);
    }

    #[test]
    fn receive_substitution_in_continuation() {
        let q = Mix::If(Expr::Val(Value::Name("x".into())), Box::new(Mix::Inact), Box::new(Mix::Inact));
        let r = q.subst(&subst_of(&[("x", Value::True)]));
        assert_eq!(r.to_string(), "if true then 0 else 0");
    }

    #[test]
    fn printing() {
        let p = Mix::lin("x", vec![Branch::send("l", Value::True, Mix::Inact), Branch::recv("l", "z", Mix::Inact)]);
        assert_eq!(p.to_string(), "lin x(l!true + l?(z))");
    }
}
