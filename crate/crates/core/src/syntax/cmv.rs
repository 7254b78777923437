//! Classic sessions: separate send, receive, select and branch.

use super::mix::fmt_res_head;
use super::{under_binder, Expr, Label, Occurrence, Path, Qual, Subst, Value};
use crate::name::Name;
use crate::types::SessionType;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Cmv {
    Out(Name, Value, Box<Cmv>),
    /// `q x?y.P` binds `y`.
    In(Qual, Name, Name, Box<Cmv>),
    Sel(Name, Label, Box<Cmv>),
    Branch(Name, BTreeMap<Label, Cmv>),
    Par(Vec<Cmv>),
    Res(Name, Name, Option<SessionType>, Box<Cmv>),
    If(Expr, Box<Cmv>, Box<Cmv>),
    Inact,
}

fn sub_name(sigma: &Subst, n: &Name) -> Name {
    match sigma.get(n) {
        Some(Value::Name(m)) => m.clone(),
        _ => n.clone(),
    }
}

impl Cmv {
    pub fn out(x: &Name, v: Value, p: Cmv) -> Cmv {
        Cmv::Out(x.clone(), v, Box::new(p))
    }

    pub fn inp(q: Qual, x: &Name, y: &Name, p: Cmv) -> Cmv {
        Cmv::In(q, x.clone(), y.clone(), Box::new(p))
    }

    pub fn sel(x: &Name, l: Label, p: Cmv) -> Cmv {
        Cmv::Sel(x.clone(), l, Box::new(p))
    }

    pub fn res(x: &Name, y: &Name, t: Option<SessionType>, p: Cmv) -> Cmv {
        Cmv::Res(x.clone(), y.clone(), t, Box::new(p))
    }

    pub fn par(mut ps: Vec<Cmv>) -> Cmv {
        ps.retain(|p| !matches!(p, Cmv::Inact));
        match ps.len() {
            0 => Cmv::Inact,
            1 => ps.pop().unwrap(),
            _ => Cmv::Par(ps),
        }
    }

    pub fn free_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<Name>) {
        match self {
            Cmv::Out(x, v, p) => {
                out.insert(x.clone());
                if let Value::Name(n) = v {
                    out.insert(n.clone());
                }
                p.collect_free(out);
            }
            Cmv::In(_, x, y, p) => {
                out.insert(x.clone());
                let mut inner = p.free_names();
                inner.remove(y);
                out.extend(inner);
            }
            Cmv::Sel(x, _, p) => {
                out.insert(x.clone());
                p.collect_free(out);
            }
            Cmv::Branch(x, m) => {
                out.insert(x.clone());
                m.values().for_each(|p| p.collect_free(out));
            }
            Cmv::Par(ps) => ps.iter().for_each(|p| p.collect_free(out)),
            Cmv::Res(x, y, _, p) => {
                let mut inner = p.free_names();
                inner.remove(x);
                inner.remove(y);
                out.extend(inner);
            }
            Cmv::If(e, p, q) => {
                e.free_names(out);
                p.collect_free(out);
                q.collect_free(out);
            }
            Cmv::Inact => {}
        }
    }

    pub fn subst(&self, sigma: &Subst) -> Cmv {
        if sigma.is_empty() {
            return self.clone();
        }
        match self {
            Cmv::Out(x, v, p) => Cmv::Out(sub_name(sigma, x), v.subst(sigma), Box::new(p.subst(sigma))),
            Cmv::In(q, x, y, p) => {
                let (inner, r) = under_binder(sigma, y, &p.free_names(), &BTreeSet::new());
                Cmv::In(*q, sub_name(sigma, x), r.unwrap_or_else(|| y.clone()), Box::new(p.subst(&inner)))
            }
            Cmv::Sel(x, l, p) => Cmv::Sel(sub_name(sigma, x), l.clone(), Box::new(p.subst(sigma))),
            Cmv::Branch(x, m) => {
                Cmv::Branch(sub_name(sigma, x), m.iter().map(|(l, p)| (l.clone(), p.subst(sigma))).collect())
            }
            Cmv::Par(ps) => Cmv::Par(ps.iter().map(|p| p.subst(sigma)).collect()),
            Cmv::Res(x, y, t, p) => {
                let body_free = p.free_names();
                let (s1, rx) = under_binder(sigma, x, &body_free, &[y.clone()].into());
                let x2 = rx.unwrap_or_else(|| x.clone());
                let (s2, ry) = under_binder(&s1, y, &body_free, &[x2.clone()].into());
                Cmv::Res(x2, ry.unwrap_or_else(|| y.clone()), t.clone(), Box::new(p.subst(&s2)))
            }
            Cmv::If(e, p, q) => Cmv::If(e.subst(sigma), Box::new(p.subst(sigma)), Box::new(q.subst(sigma))),
            Cmv::Inact => Cmv::Inact,
        }
    }

    pub fn subterms(&self) -> Vec<Occurrence> {
        let mut out = Vec::new();
        self.walk(&mut Vec::new(), false, &mut out);
        out
    }

    fn walk(&self, path: &mut Path, guarded: bool, out: &mut Vec<Occurrence>) {
        out.push(Occurrence { path: path.clone(), guarded, text: self.to_string() });
        let kids: Vec<(&Cmv, bool)> = match self {
            Cmv::Out(_, _, p) | Cmv::In(_, _, _, p) | Cmv::Sel(_, _, p) => vec![(&**p, true)],
            Cmv::Branch(_, m) => m.values().map(|p| (p, true)).collect(),
            Cmv::Par(ps) => ps.iter().map(|p| (p, guarded)).collect(),
            Cmv::Res(_, _, _, p) => vec![(&**p, guarded)],
            Cmv::If(_, p, q) => vec![(&**p, true), (&**q, true)],
            Cmv::Inact => vec![],
        };
        for (i, (k, g)) in kids.into_iter().enumerate() {
            path.push(i as u32);
            k.walk(path, g, out);
            path.pop();
        }
    }

    /// Number of AST nodes, used for reporting.
    pub fn size(&self) -> usize {
        1 + match self {
            Cmv::Out(_, _, p) | Cmv::In(_, _, _, p) | Cmv::Sel(_, _, p) | Cmv::Res(_, _, _, p) => p.size(),
            Cmv::Branch(_, m) => m.values().map(|p| p.size()).sum(),
            Cmv::Par(ps) => ps.iter().map(|p| p.size()).sum(),
            Cmv::If(_, p, q) => p.size() + q.size(),
            Cmv::Inact => 0,
        }
    }

    fn is_tight(&self) -> bool {
        matches!(self, Cmv::Inact | Cmv::Out(..) | Cmv::In(..) | Cmv::Sel(..) | Cmv::Branch(..))
    }

    fn fmt_cont(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if matches!(self, Cmv::Inact) {
            Ok(())
        } else if self.is_tight() {
            write!(f, ".{self}")
        } else {
            write!(f, ".({self})")
        }
    }
}

impl fmt::Display for Cmv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cmv::Inact => f.write_str("0"),
            Cmv::Out(x, v, p) => {
                write!(f, "{x}!{v}")?;
                p.fmt_cont(f)
            }
            Cmv::In(q, x, y, p) => {
                write!(f, "{q} {x}?{y}")?;
                p.fmt_cont(f)
            }
            Cmv::Sel(x, l, p) => {
                write!(f, "{x}<+{l}")?;
                p.fmt_cont(f)
            }
            Cmv::Branch(x, m) => {
                write!(f, "{x}>>{{")?;
                for (i, (l, p)) in m.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{l}: {p}")?;
                }
                f.write_str("}")
            }
            Cmv::Par(ps) if ps.is_empty() => f.write_str("0"),
            Cmv::Par(ps) => {
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    match p {
                        Cmv::Res(..) | Cmv::If(..) | Cmv::Par(..) => write!(f, "({p})")?,
                        _ => write!(f, "{p}")?,
                    }
                }
                Ok(())
            }
            Cmv::Res(x, y, t, p) => {
                fmt_res_head(f, x, y, t)?;
                write!(f, " {p}")
            }
            Cmv::If(e, p, q) => write!(f, "if {e} then {p} else {q}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn print_and_free_names() {
        let x = Name::parse("x");
        let y = Name::parse("y");
        let z = Name::parse("z");
        let p = Cmv::res(
            &x,
            &y,
            None,
            Cmv::par(vec![
                Cmv::out(&x, Value::True, Cmv::Inact),
                Cmv::inp(Qual::Lin, &y, &z, Cmv::out(&z, Value::Unit, Cmv::Inact)),
            ]),
        );
        assert_eq!(p.to_string(), "(new x y) x!true | lin y?z.z!unit");
        assert!(p.free_names().is_empty());
    }
}
