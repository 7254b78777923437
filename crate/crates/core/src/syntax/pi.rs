//! Pi-calculus with mixed guarded choice and replication.

use super::{under_binder, Occurrence, Path, Subst, Value};
use crate::name::Name;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Prefix {
    /// `y!<z>`
    Out(Name, Name),
    /// `y?(x)` binds `x`
    In(Name, Name),
    Tau,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Pi {
    /// Guarded choice; the empty sum is `0`.
    Sum(Vec<(Prefix, Pi)>),
    Res(Name, Box<Pi>),
    Par(Vec<Pi>),
    Bang(Box<Pi>),
}

impl Pi {
    pub fn nil() -> Pi {
        Pi::Sum(Vec::new())
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Pi::Sum(v) if v.is_empty())
    }

    pub fn out(y: &str, z: &str, p: Pi) -> Pi {
        Pi::Sum(vec![(Prefix::Out(Name::parse(y), Name::parse(z)), p)])
    }

    pub fn inp(y: &str, x: &str, p: Pi) -> Pi {
        Pi::Sum(vec![(Prefix::In(Name::parse(y), Name::parse(x)), p)])
    }

    pub fn par(ps: Vec<Pi>) -> Pi {
        Pi::Par(ps)
    }

    pub fn res(names: &[&str], p: Pi) -> Pi {
        names.iter().rev().fold(p, |acc, n| Pi::Res(Name::parse(n), Box::new(acc)))
    }

    pub fn free_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<Name>) {
        match self {
            Pi::Sum(bs) => {
                for (pre, p) in bs {
                    match pre {
                        Prefix::Out(y, z) => {
                            out.insert(y.clone());
                            out.insert(z.clone());
                            p.collect_free(out);
                        }
                        Prefix::In(y, x) => {
                            out.insert(y.clone());
                            let mut inner = p.free_names();
                            inner.remove(x);
                            out.extend(inner);
                        }
                        Prefix::Tau => p.collect_free(out),
                    }
                }
            }
            Pi::Res(x, p) => {
                let mut inner = p.free_names();
                inner.remove(x);
                out.extend(inner);
            }
            Pi::Par(ps) => ps.iter().for_each(|p| p.collect_free(out)),
            Pi::Bang(p) => p.collect_free(out),
        }
    }

    /// Capture-avoiding substitution of names for names.
    pub fn subst(&self, sigma: &Subst) -> Pi {
        if sigma.is_empty() {
            return self.clone();
        }
        let sub_name = |n: &Name| match sigma.get(n) {
            Some(Value::Name(m)) => m.clone(),
            Some(_) => panic!("pi substitution must map names to names"),
            None => n.clone(),
        };
        match self {
            Pi::Sum(bs) => Pi::Sum(
                bs.iter()
                    .map(|(pre, p)| match pre {
                        Prefix::Out(y, z) => (Prefix::Out(sub_name(y), sub_name(z)), p.subst(sigma)),
                        Prefix::Tau => (Prefix::Tau, p.subst(sigma)),
                        Prefix::In(y, x) => {
                            let (inner, renamed) = under_binder(sigma, x, &p.free_names(), &BTreeSet::new());
                            let x2 = renamed.unwrap_or_else(|| x.clone());
                            (Prefix::In(sub_name(y), x2), p.subst(&inner))
                        }
                    })
                    .collect(),
            ),
            Pi::Res(x, p) => {
                let (inner, renamed) = under_binder(sigma, x, &p.free_names(), &BTreeSet::new());
                Pi::Res(renamed.unwrap_or_else(|| x.clone()), Box::new(p.subst(&inner)))
            }
            Pi::Par(ps) => Pi::Par(ps.iter().map(|p| p.subst(sigma)).collect()),
            Pi::Bang(p) => Pi::Bang(Box::new(p.subst(sigma))),
        }
    }

    /// All subterm occurrences addressed by tree paths.
    pub fn subterms(&self) -> Vec<Occurrence> {
        let mut out = Vec::new();
        self.walk(&mut Vec::new(), false, &mut out);
        out
    }

    fn walk(&self, path: &mut Path, guarded: bool, out: &mut Vec<Occurrence>) {
        out.push(Occurrence { path: path.clone(), guarded, text: self.to_string() });
        match self {
            Pi::Sum(bs) => {
                for (i, (_, p)) in bs.iter().enumerate() {
                    path.push(i as u32);
                    p.walk(path, true, out);
                    path.pop();
                }
            }
            Pi::Res(_, p) | Pi::Bang(p) => {
                path.push(0);
                p.walk(path, guarded, out);
                path.pop();
            }
            Pi::Par(ps) => {
                for (i, p) in ps.iter().enumerate() {
                    path.push(i as u32);
                    p.walk(path, guarded, out);
                    path.pop();
                }
            }
        }
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prefix::Out(y, z) => write!(f, "{y}!<{z}>"),
            Prefix::In(y, x) => write!(f, "{y}?({x})"),
            Prefix::Tau => f.write_str("tau"),
        }
    }
}

impl Pi {
    /// Terms that can follow a prefix dot or a bang without parentheses.
    fn is_tight(&self) -> bool {
        match self {
            Pi::Sum(bs) => bs.len() <= 1,
            Pi::Bang(p) => p.is_tight(),
            _ => false,
        }
    }

    fn fmt_tight(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_tight() {
            write!(f, "{self}")
        } else {
            write!(f, "({self})")
        }
    }
}

impl fmt::Display for Pi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pi::Sum(bs) if bs.is_empty() => f.write_str("0"),
            Pi::Sum(bs) => {
                for (i, (pre, p)) in bs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    write!(f, "{pre}")?;
                    if !p.is_nil() {
                        f.write_str(".")?;
                        p.fmt_tight(f)?;
                    }
                }
                Ok(())
            }
            Pi::Res(x, p) => write!(f, "(nu {x}) {p}"),
            Pi::Par(ps) if ps.is_empty() => f.write_str("0"),
            Pi::Par(ps) => {
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    match p {
                        Pi::Res(..) | Pi::Par(..) => write!(f, "({p})")?,
                        _ => write!(f, "{p}")?,
                    }
                }
                Ok(())
            }
            Pi::Bang(p) => {
                f.write_str("!")?;
                p.fmt_tight(f)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::subst_of;

    fn names(v: &[&str]) -> BTreeSet<Name> {
        v.iter().map(|s| Name::parse(s)).collect()
    }

    #[test]
    fn free_names_of_nil_and_sum() {
        assert!(Pi::nil().free_names().is_empty());
        let p = Pi::Sum(vec![
            (Prefix::Out("a".into(), "z".into()), Pi::nil()),
            (Prefix::In("b".into(), "x".into()), Pi::out("x", "x", Pi::nil())),
        ]);
        assert_eq!(p.free_names(), names(&["a", "z", "b"]));
    }

    #[test]
    fn substitution_total_and_capture_avoiding() {
        let p = Pi::out("x", "x", Pi::nil());
        let q = p.subst(&subst_of(&[("x", Value::Name("y".into()))]));
        assert_eq!(q.to_string(), "y!<y>");
        let p = Pi::inp("a", "x", Pi::out("x", "z", Pi::nil()));
        let q = p.subst(&subst_of(&[("z", Value::Name("x".into()))]));
        assert_eq!(q.to_string(), "a?(x').x'!<x>");
    }

    #[test]
    fn subterms_flag_guarded_positions() {
        let p = Pi::Sum(vec![
            (Prefix::Tau, Pi::nil()),
            (Prefix::Out("b".into(), "b".into()), Pi::nil()),
        ]);
        let occ = p.subterms();
        assert_eq!(occ.len(), 3);
        assert!(!occ[0].guarded);
        assert!(occ[1].guarded && occ[2].guarded);
        assert_eq!(Pi::nil().subterms().len(), 1);
    }
}
