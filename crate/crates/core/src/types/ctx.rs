//! Typing contexts with the split (`∘`) and add (`+`) operations.

use super::ops::{type_equiv, un_pred};
use super::ty::SessionType;
use crate::name::Name;
use serde::ser::SerializeSeq;
use serde::Serialize;
use std::fmt;

/// An ordered list of assignments on pairwise distinct names.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct TyCtx {
    entries: Vec<(Name, SessionType)>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("cannot add `{name}: {ty}` to the context: {reason}")]
pub struct AddError {
    pub name: Name,
    pub ty: SessionType,
    pub reason: &'static str,
}

impl TyCtx {
    pub fn new() -> TyCtx {
        TyCtx::default()
    }

    /// Build from a list; later duplicates go through `add`.
    pub fn from_entries(es: impl IntoIterator<Item = (Name, SessionType)>) -> Result<TyCtx, AddError> {
        let mut c = TyCtx::new();
        for (n, t) in es {
            c = c.add(&n, &t)?;
        }
        Ok(c)
    }

    pub fn entries(&self) -> &[(Name, SessionType)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, n: &Name) -> Option<&SessionType> {
        self.entries.iter().find(|(m, _)| m == n).map(|(_, t)| t)
    }

    pub fn contains(&self, n: &Name) -> bool {
        self.get(n).is_some()
    }

    pub fn names(&self) -> impl Iterator<Item = &Name> {
        self.entries.iter().map(|(n, _)| n)
    }

    pub fn is_un(&self) -> bool {
        self.entries.iter().all(|(_, t)| un_pred(t))
    }

    pub fn without(&self, n: &Name) -> TyCtx {
        TyCtx { entries: self.entries.iter().filter(|(m, _)| m != n).cloned().collect() }
    }

    pub fn filter(&self, mut keep: impl FnMut(&Name, &SessionType) -> bool) -> TyCtx {
        TyCtx { entries: self.entries.iter().filter(|(n, t)| keep(n, t)).cloned().collect() }
    }

    /// Unrestricted part of the context.
    pub fn un_part(&self) -> TyCtx {
        self.filter(|_, t| un_pred(t))
    }

    /// `Γ + x:T`: defined when `x` is new, or when it is already present with
    /// the same unrestricted type.
    pub fn add(&self, x: &Name, t: &SessionType) -> Result<TyCtx, AddError> {
        match self.get(x) {
            None => {
                let mut entries = self.entries.clone();
                entries.push((x.clone(), t.clone()));
                Ok(TyCtx { entries })
            }
            Some(old) if un_pred(t) && type_equiv(old, t) => Ok(self.clone()),
            Some(_) => Err(AddError {
                name: x.clone(),
                ty: t.clone(),
                reason: "name already present with a linear or different type",
            }),
        }
    }

    /// Every `(Γ1, Γ2)` with `Γ = Γ1 ∘ Γ2`, following the declarative rules:
    /// unrestricted entries go to both sides, linear ones to exactly one.
    pub fn splits(&self) -> Vec<(TyCtx, TyCtx)> {
        let mut out = vec![(TyCtx::new(), TyCtx::new())];
        for (n, t) in &self.entries {
            let mut next = Vec::with_capacity(out.len() * 2);
            for (l, r) in out {
                let e = (n.clone(), t.clone());
                if un_pred(t) {
                    let (mut l, mut r) = (l, r);
                    l.entries.push(e.clone());
                    r.entries.push(e);
                    next.push((l, r));
                } else {
                    let mut l1 = l.clone();
                    l1.entries.push(e.clone());
                    next.push((l1, r.clone()));
                    let mut r2 = r;
                    r2.entries.push(e);
                    next.push((l, r2));
                }
            }
            out = next;
        }
        out
    }

    /// Whether `left ∘ right` recombines to this context. Unrestricted entries
    /// may sit on one side or both.
    pub fn is_split(&self, left: &TyCtx, right: &TyCtx) -> bool {
        let same = |a: Option<&SessionType>, b: &SessionType| a.is_none_or(|a| type_equiv(a, b));
        for (n, t) in &self.entries {
            let (l, r) = (left.get(n), right.get(n));
            if !same(l, t) || !same(r, t) {
                return false;
            }
            let ok = if un_pred(t) { l.is_some() || r.is_some() } else { l.is_some() != r.is_some() };
            if !ok {
                return false;
            }
        }
        left.names().chain(right.names()).all(|n| self.contains(n))
    }
}

impl fmt::Display for TyCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return f.write_str("·");
        }
        for (i, (n, t)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{n}: {t}")?;
        }
        Ok(())
    }
}

impl Serialize for TyCtx {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.entries.len()))?;
        for (n, t) in &self.entries {
            seq.serialize_element(&format!("{n}: {t}"))?;
        }
        seq.end()
    }
}

pub fn un_ctx(g: &TyCtx) -> bool {
    g.is_un()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{Pol, Qual, View};

    fn lin_t() -> SessionType {
        SessionType::mix(Qual::Lin, View::Int, vec![("l", Pol::Out, SessionType::Bool, SessionType::End)])
    }

    #[test]
    fn empty_context_has_one_split() {
        assert_eq!(TyCtx::new().splits().len(), 1);
    }

    #[test]
    fn linear_entry_has_two_splits() {
        let g = TyCtx::from_entries([(Name::parse("x"), lin_t())]).unwrap();
        assert_eq!(g.splits().len(), 2);
        let with_un = g.add(&Name::parse("b"), &SessionType::Bool).unwrap();
        assert_eq!(with_un.splits().len(), 2);
        for (l, r) in with_un.splits() {
            assert!(with_un.is_split(&l, &r));
        }
    }

    #[test]
    fn add_rules() {
        let x = Name::parse("x");
        let g = TyCtx::new().add(&x, &SessionType::End).unwrap();
        assert_eq!(g.add(&x, &SessionType::End).unwrap(), g);
        assert!(g.add(&x, &SessionType::Bool).is_err());
        let h = TyCtx::new().add(&x, &lin_t()).unwrap();
        assert!(h.add(&x, &lin_t()).is_err());
    }

    #[test]
    fn un_context() {
        let g = TyCtx::from_entries([(Name::parse("x"), SessionType::Bool), (Name::parse("y"), SessionType::End)]).unwrap();
        assert!(un_ctx(&g));
        assert!(!un_ctx(&g.add(&Name::parse("z"), &lin_t()).unwrap()));
    }
}
