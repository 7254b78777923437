use super::mix::partners;
use super::{finish, Barb, Side, Step, StepKind, StepLabel};
use crate::canon::{canonicalize, Group};
use crate::name::Name;
use crate::syntax::cmv::Cmv;
use crate::syntax::{eval, Calculus, Label, Pol, Qual, Value};
use crate::types::SessionType;
use std::collections::BTreeSet;

pub(crate) fn split_top(p: &Cmv, groups: &mut Vec<Group<SessionType>>, atoms: &mut Vec<Cmv>) {
    match p {
        Cmv::Inact => {}
        Cmv::Par(ps) => ps.iter().for_each(|q| split_top(q, groups, atoms)),
        Cmv::Res(x, y, t, q) => {
            groups.push(Group { names: vec![x.clone(), y.clone()], ann: t.clone() });
            split_top(q, groups, atoms);
        }
        atom => atoms.push(atom.clone()),
    }
}

fn subject(p: &Cmv) -> Option<&Name> {
    match p {
        Cmv::Out(x, ..) | Cmv::In(_, x, ..) | Cmv::Sel(x, ..) | Cmv::Branch(x, _) => Some(x),
        _ => None,
    }
}

/// Reductions of a classic-session process: output meets input, selection
/// meets branching, and conditionals. Unrestricted inputs stay in place.
pub fn steps_cmv(p: &Cmv) -> Vec<Step<Cmv>> {
    let c = canonicalize(p);
    let mut groups = Vec::new();
    let mut atoms = Vec::new();
    split_top(&c, &mut groups, &mut atoms);
    let partner = partners(&groups);

    let rebuild = |drop: &[usize], conts: Vec<Cmv>| {
        let mut out: Vec<Cmv> =
            atoms.iter().enumerate().filter(|(i, _)| !drop.contains(i)).map(|(_, a)| a.clone()).collect();
        out.extend(conts);
        (groups.clone(), out)
    };
    let side = |i: usize, x: &Name, pol: Option<Pol>, qual: Option<Qual>| Side {
        subject: Some(x.clone()),
        pol,
        qual,
        ..Side::at(vec![i as u32])
    };

    let mut raw = Vec::new();
    for (i, a) in atoms.iter().enumerate() {
        if let Cmv::If(e, t, f) = a {
            let (k, next) = match eval(e) {
                Ok(Value::True) => (StepKind::IfTrue, t),
                Ok(Value::False) => (StepKind::IfFalse, f),
                _ => continue,
            };
            let (g, at) = rebuild(&[i], vec![(**next).clone()]);
            raw.push((StepLabel::new(Calculus::Cmv, k, vec![Side::at(vec![i as u32])], vec![]), g, at));
        }
    }

    for (i, ai) in atoms.iter().enumerate() {
        let Some(x) = subject(ai) else { continue };
        let Some(other) = partner.get(x) else { continue };
        for (j, aj) in atoms.iter().enumerate() {
            if i == j || subject(aj) != Some(other) {
                continue;
            }
            match (ai, aj) {
                (Cmv::Out(_, v, k1), Cmv::In(q, y, z, k2)) => {
                    let received = k2.subst(&[(z.clone(), v.clone())].into_iter().collect());
                    let drop = if *q == Qual::Lin { vec![i, j] } else { vec![i] };
                    let (mut g, at) = rebuild(&drop, vec![(**k1).clone(), received]);
                    advance(&mut g, x, None);
                    let kind = if *q == Qual::Lin { StepKind::LinCom } else { StepKind::UnCom };
                    let sides = vec![side(i, x, Some(Pol::Out), None), side(j, y, Some(Pol::In), Some(*q))];
                    raw.push((StepLabel::new(Calculus::Cmv, kind, sides, vec![]), g, at));
                }
                (Cmv::Sel(_, l, k1), Cmv::Branch(y, m)) => {
                    let Some(k2) = m.get(l) else { continue };
                    let (mut g, at) = rebuild(&[i, j], vec![(**k1).clone(), k2.clone()]);
                    advance(&mut g, x, Some(l));
                    let mut s1 = side(i, x, None, None);
                    s1.label = Some(l.clone());
                    let mut s2 = side(j, y, None, None);
                    s2.label = Some(l.clone());
                    s2.branch = m.keys().position(|k| k == l).map(|n| n as u32);
                    raw.push((StepLabel::new(Calculus::Cmv, StepKind::Case, vec![s1, s2], vec![]), g, at));
                }
                _ => {}
            }
        }
    }
    finish(raw)
}

/// After a step on a linear channel its annotation becomes the continuation
/// (of the selected label, for choices). Unrestricted types are kept.
fn advance(groups: &mut [Group<SessionType>], x: &Name, label: Option<&Label>) {
    let Some(g) = groups.iter_mut().find(|g| g.names.contains(x)) else { return };
    let Some(t) = &g.ann else { return };
    let next = match (t.unfold(), label) {
        (SessionType::Com(Qual::Lin, _, _, k), None) => Some(*k),
        (SessionType::Choice(Qual::Lin, _, m), Some(l)) => m.get(l).cloned(),
        _ => None,
    };
    if next.is_some() {
        g.ann = next;
    }
}

/// Endpoint barbs: an unguarded output, input, selection or branching on a
/// free endpoint.
pub fn barbs_cmv(p: &Cmv) -> BTreeSet<Barb> {
    let free = p.free_names();
    let mut out = BTreeSet::new();
    collect(p, &free, &mut out);
    out
}

fn collect(p: &Cmv, free: &BTreeSet<Name>, out: &mut BTreeSet<Barb>) {
    match p {
        Cmv::Par(ps) => ps.iter().for_each(|q| collect(q, free, out)),
        Cmv::Res(x, y, _, q) => {
            let mut inner = free.clone();
            inner.remove(x);
            inner.remove(y);
            collect(q, &inner, out);
        }
        Cmv::If(..) | Cmv::Inact => {}
        other => {
            let x = subject(other).unwrap();
            if free.contains(x) {
                out.insert(Barb::End(x.clone()));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_cmv;

    fn steps(src: &str) -> Vec<Step<Cmv>> {
        steps_cmv(&parse_cmv(src).unwrap())
    }

    #[test]
    fn linear_communication() {
        let s = steps("(new x y) (x!true.o!unit | lin y?z.p!z | r!unit)");
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].label.kind, StepKind::LinCom);
        assert_eq!(s[0].target, canonicalize(&parse_cmv("o!unit | p!true | r!unit").unwrap()));
    }

    #[test]
    fn unrestricted_input_is_kept() {
        let s = steps("(new x y) (x!true | un y?z.p!z)");
        assert_eq!(s[0].label.kind, StepKind::UnCom);
        assert_eq!(s[0].target, canonicalize(&parse_cmv("(new x y) un y?z.p!z | p!true").unwrap()));
    }

    #[test]
    fn case_needs_the_label() {
        let s = steps("(new x y) (x<+b.o!unit | y>>{a: p!unit, b: q!unit})");
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].label.kind, StepKind::Case);
        assert_eq!(s[0].target, canonicalize(&parse_cmv("o!unit | q!unit").unwrap()));
        assert!(steps("(new x y) (x<+c | y>>{a: 0, b: 0})").is_empty());
    }

    #[test]
    fn junk_is_stuck_and_silent() {
        let junk = parse_cmv("(new s t) (t<+opt2 | t<+opt3)").unwrap();
        assert!(steps_cmv(&junk).is_empty());
        assert!(barbs_cmv(&junk).is_empty());
    }

    #[test]
    fn every_prefix_is_a_barb() {
        let p = parse_cmv("x!true | lin y?z | w<+l | v>>{l: 0}").unwrap();
        assert_eq!(barbs_cmv(&p).len(), 4);
    }
}
