//! Coinductive equivalence, duality and subtyping, plus the `un` predicate.

use super::ty::{SessionType as T, TBranch};
use crate::syntax::{Pol, Qual, View};
use std::collections::{BTreeMap, HashSet};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TypeOpError {
    #[error("`{0}` is not a session type")]
    NotSession(String),
    #[error("recursion variable `{0}` occurs in a payload position")]
    VarInPayload(String),
}

fn unfold_once(t: &T) -> T {
    match t {
        T::Rec(v, b) => b.subst_var(v, t),
        _ => t.clone(),
    }
}

fn branch_map(bs: &[TBranch]) -> BTreeMap<(crate::syntax::Label, Pol), &TBranch> {
    bs.iter().map(|b| ((b.label.clone(), b.pol), b)).collect()
}

struct Co {
    seen: HashSet<(T, T)>,
}

impl Co {
    fn new() -> Co {
        Co { seen: HashSet::new() }
    }

    fn assume(&mut self, a: &T, b: &T) -> bool {
        !self.seen.insert((a.clone(), b.clone()))
    }

    fn equiv(&mut self, a: &T, b: &T) -> bool {
        if self.assume(a, b) {
            return true;
        }
        match (a, b) {
            (T::Rec(..), _) => self.equiv(&unfold_once(a), b),
            (_, T::Rec(..)) => self.equiv(a, &unfold_once(b)),
            (T::End, T::End) | (T::Unit, T::Unit) | (T::Bool, T::Bool) => true,
            (T::Var(x), T::Var(y)) => x == y,
            (T::Mix(q1, v1, b1), T::Mix(q2, v2, b2)) => {
                let (m1, m2) = (branch_map(b1), branch_map(b2));
                q1 == q2
                    && v1 == v2
                    && m1.len() == b1.len()
                    && m1.keys().eq(m2.keys())
                    && m1.iter().all(|(k, x)| {
                        let y = m2[k];
                        self.equiv(&x.payload, &y.payload) && self.equiv(&x.cont, &y.cont)
                    })
            }
            (T::Com(q1, p1, a1, c1), T::Com(q2, p2, a2, c2)) => {
                q1 == q2 && p1 == p2 && self.equiv(a1, a2) && self.equiv(c1, c2)
            }
            (T::Choice(q1, v1, m1), T::Choice(q2, v2, m2)) => {
                q1 == q2
                    && v1 == v2
                    && m1.keys().eq(m2.keys())
                    && m1.iter().all(|(l, x)| self.equiv(x, &m2[l]))
            }
            _ => false,
        }
    }

    fn dual(&mut self, a: &T, b: &T) -> bool {
        if self.assume(a, b) {
            return true;
        }
        match (a, b) {
            (T::Rec(..), _) => self.dual(&unfold_once(a), b),
            (_, T::Rec(..)) => self.dual(a, &unfold_once(b)),
            (T::End, T::End) => true,
            (T::Var(x), T::Var(y)) => x == y,
            (T::Mix(q1, v1, b1), T::Mix(q2, v2, b2)) => {
                let m1 = branch_map(b1);
                let m2 = branch_map(b2);
                q1 == q2
                    && *v2 == v1.flip()
                    && m1.len() == m2.len()
                    && m1.iter().all(|((l, p), x)| match m2.get(&(l.clone(), p.flip())) {
                        Some(y) => Co::new().equiv(&x.payload, &y.payload) && self.dual(&x.cont, &y.cont),
                        None => false,
                    })
            }
            (T::Com(q1, p1, a1, c1), T::Com(q2, p2, a2, c2)) => {
                q1 == q2 && *p2 == p1.flip() && Co::new().equiv(a1, a2) && self.dual(c1, c2)
            }
            (T::Choice(q1, v1, m1), T::Choice(q2, v2, m2)) => {
                q1 == q2
                    && *v2 == v1.flip()
                    && m1.keys().eq(m2.keys())
                    && m1.iter().all(|(l, x)| self.dual(x, &m2[l]))
            }
            _ => false,
        }
    }

    fn sub(&mut self, a: &T, b: &T) -> bool {
        if self.assume(a, b) {
            return true;
        }
        match (a, b) {
            (T::Rec(..), _) => self.sub(&unfold_once(a), b),
            (_, T::Rec(..)) => self.sub(a, &unfold_once(b)),
            (T::End, T::End) | (T::Unit, T::Unit) | (T::Bool, T::Bool) => true,
            (T::Var(x), T::Var(y)) => x == y,
            (T::Mix(q1, v1, b1), T::Mix(q2, v2, b2)) if q1 == q2 && v1 == v2 => {
                let m1 = branch_map(b1);
                let m2 = branch_map(b2);
                let (small, big) = match v1 {
                    View::Int => (&m2, &m1),
                    View::Ext => (&m1, &m2),
                };
                small.keys().all(|k| big.contains_key(k))
                    && small.keys().all(|k| {
                        let (x, y) = (m1[k], m2[k]);
                        let payload_ok = match k.1 {
                            Pol::Out => self.sub(&y.payload, &x.payload),
                            Pol::In => self.sub(&x.payload, &y.payload),
                        };
                        payload_ok && self.sub(&x.cont, &y.cont)
                    })
            }
            (T::Com(q1, p1, a1, c1), T::Com(q2, p2, a2, c2)) if q1 == q2 && p1 == p2 => {
                let payload_ok = match p1 {
                    Pol::Out => self.sub(a2, a1),
                    Pol::In => self.sub(a1, a2),
                };
                payload_ok && self.sub(c1, c2)
            }
            (T::Choice(q1, v1, m1), T::Choice(q2, v2, m2)) if q1 == q2 && v1 == v2 => {
                let (small, big) = match v1 {
                    View::Int => (m2, m1),
                    View::Ext => (m1, m2),
                };
                small.keys().all(|k| big.contains_key(k)) && small.keys().all(|k| self.sub(&m1[k], &m2[k]))
            }
            _ => false,
        }
    }
}

pub fn type_equiv(a: &T, b: &T) -> bool {
    Co::new().equiv(a, b)
}

pub fn dual(a: &T, b: &T) -> bool {
    Co::new().dual(a, b)
}

pub fn subtype(a: &T, b: &T) -> bool {
    Co::new().sub(a, b)
}

/// Syntactic dual of a session type. Payloads are kept; recursion variables
/// must not occur in payloads.
pub fn dualize(t: &T) -> Result<T, TypeOpError> {
    fn go(t: &T, bound: &mut Vec<std::sync::Arc<str>>) -> Result<T, TypeOpError> {
        Ok(match t {
            T::End => T::End,
            T::Unit | T::Bool => return Err(TypeOpError::NotSession(t.to_string())),
            T::Var(v) => T::Var(v.clone()),
            T::Rec(v, b) => {
                bound.push(v.clone());
                let r = go(b, bound);
                bound.pop();
                T::Rec(v.clone(), Box::new(r?))
            }
            T::Mix(q, v, bs) => {
                let mut out = Vec::new();
                for b in bs {
                    check_payload(&b.payload, bound)?;
                    out.push(TBranch {
                        label: b.label.clone(),
                        pol: b.pol.flip(),
                        payload: b.payload.clone(),
                        cont: go(&b.cont, bound)?,
                    });
                }
                T::Mix(*q, v.flip(), out)
            }
            T::Com(q, p, a, c) => {
                check_payload(a, bound)?;
                T::Com(*q, p.flip(), a.clone(), Box::new(go(c, bound)?))
            }
            T::Choice(q, v, m) => {
                let mut out = BTreeMap::new();
                for (l, x) in m {
                    out.insert(l.clone(), go(x, bound)?);
                }
                T::Choice(*q, v.flip(), out)
            }
        })
    }
    fn check_payload(p: &T, bound: &[std::sync::Arc<str>]) -> Result<(), TypeOpError> {
        match p.free_vars().into_iter().find(|v| bound.contains(v)) {
            Some(v) => Err(TypeOpError::VarInPayload(v.to_string())),
            None => Ok(()),
        }
    }
    go(t, &mut Vec::new())
}

pub fn un_pred(t: &T) -> bool {
    match t {
        T::End | T::Unit | T::Bool => true,
        T::Mix(q, _, _) | T::Com(q, _, _, _) | T::Choice(q, _, _) => *q == Qual::Un,
        T::Rec(_, b) => un_pred(b),
        T::Var(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Qual::*;
    use crate::syntax::View::*;

    fn t1() -> T {
        T::mix(Un, Int, vec![("l", Pol::Out, T::Bool, T::End), ("l", Pol::In, T::Bool, T::End)])
    }

    fn t2() -> T {
        T::mix(Un, Ext, vec![("l", Pol::In, T::Bool, T::End), ("l", Pol::Out, T::Bool, T::End)])
    }

    #[test]
    fn equivalence_examples() {
        assert!(type_equiv(&T::End, &T::End));
        assert!(!type_equiv(&T::Bool, &T::Unit));
        let r = T::rec("t", T::mix(Un, Int, vec![("l", Pol::Out, T::Bool, T::var("t"))]));
        let once = T::mix(Un, Int, vec![("l", Pol::Out, T::Bool, r.clone())]);
        assert!(type_equiv(&r, &once));
        assert!(type_equiv(&once, &r));
    }

    #[test]
    fn duality_examples() {
        assert!(dual(&t1(), &t2()));
        assert!(dual(&t2(), &t1()));
        assert!(dual(&T::End, &T::End));
        assert!(type_equiv(&dualize(&dualize(&t1()).unwrap()).unwrap(), &t1()));
        assert!(!dual(&t1(), &t1()));
        assert!(dualize(&T::Bool).is_err());
    }

    #[test]
    fn subtyping_examples() {
        let wide = T::mix(Lin, Int, vec![("l", Pol::Out, T::Bool, T::End), ("m", Pol::Out, T::Bool, T::End)]);
        let narrow = T::mix(Lin, Int, vec![("l", Pol::Out, T::Bool, T::End)]);
        assert!(subtype(&wide, &narrow));
        assert!(!subtype(&narrow, &wide));
        let e1 = T::mix(Lin, Ext, vec![("l", Pol::In, T::Bool, T::End)]);
        let e2 = T::mix(Lin, Ext, vec![("l", Pol::In, T::Bool, T::End), ("m", Pol::In, T::Bool, T::End)]);
        assert!(subtype(&e1, &e2));
        assert!(!subtype(&e2, &e1));
    }

    #[test]
    fn un_examples() {
        assert!(un_pred(&t1()));
        assert!(!un_pred(&T::mix(Lin, Int, vec![("l", Pol::Out, T::Bool, T::End)])));
        assert!(un_pred(&T::rec("t", T::mix(Un, Int, vec![("l", Pol::Out, T::Bool, T::var("t"))]))));
    }
}
