use super::{finish, Barb, Side, Step, StepKind, StepLabel};
use crate::canon::{canonicalize, Group};
use crate::name::Name;
use crate::syntax::mix::Mix;
use crate::syntax::{eval, Calculus, Label, Pol, Qual, Value};
use crate::types::SessionType;
use std::collections::{BTreeSet, HashMap};

pub(super) fn split_top(p: &Mix, groups: &mut Vec<Group<SessionType>>, atoms: &mut Vec<Mix>) {
    match p {
        Mix::Inact => {}
        Mix::Choice(_, _, bs) if bs.is_empty() => {}
        Mix::Par(ps) => ps.iter().for_each(|q| split_top(q, groups, atoms)),
        Mix::Res(x, y, t, q) => {
            groups.push(Group { names: vec![x.clone(), y.clone()], ann: t.clone() });
            split_top(q, groups, atoms);
        }
        atom => atoms.push(atom.clone()),
    }
}

pub(super) fn partners<A>(groups: &[Group<A>]) -> HashMap<Name, Name> {
    let mut m = HashMap::new();
    for g in groups {
        if let [x, y] = g.names.as_slice() {
            m.insert(x.clone(), y.clone());
            m.insert(y.clone(), x.clone());
        }
    }
    m
}

fn kind(out: Qual, inp: Qual) -> StepKind {
    match (out, inp) {
        (Qual::Lin, Qual::Lin) => StepKind::LinLin,
        (Qual::Lin, Qual::Un) => StepKind::LinUn,
        (Qual::Un, Qual::Lin) => StepKind::UnLin,
        (Qual::Un, Qual::Un) => StepKind::UnUn,
    }
}

/// Reductions of a mixed-session process: communication between choices on
/// the two endpoints of one restricted channel, with matching labels and
/// opposite polarities. Unrestricted choices stay in place.
pub fn steps_mix(p: &Mix) -> Vec<Step<Mix>> {
    let c = canonicalize(p);
    let mut groups = Vec::new();
    let mut atoms = Vec::new();
    split_top(&c, &mut groups, &mut atoms);
    let partner = partners(&groups);

    let rebuild = |drop: &[usize], conts: Vec<Mix>| {
        let mut out: Vec<Mix> =
            atoms.iter().enumerate().filter(|(i, _)| !drop.contains(i)).map(|(_, a)| a.clone()).collect();
        out.extend(conts);
        (groups.clone(), out)
    };

    let mut raw = Vec::new();
    for (i, a) in atoms.iter().enumerate() {
        if let Mix::If(e, t, f) = a {
            let (k, next) = match eval(e) {
                Ok(Value::True) => (StepKind::IfTrue, t),
                Ok(Value::False) => (StepKind::IfFalse, f),
                _ => continue,
            };
            let (g, at) = rebuild(&[i], vec![(**next).clone()]);
            raw.push((StepLabel::new(Calculus::CmvPlus, k, vec![Side::at(vec![i as u32])], vec![]), g, at));
        }
    }

    for (i, ai) in atoms.iter().enumerate() {
        let Mix::Choice(qo, xo, bo) = ai else { continue };
        let Some(other) = partner.get(xo) else { continue };
        for (j, aj) in atoms.iter().enumerate() {
            let Mix::Choice(qi, xi, bi) = aj else { continue };
            if i == j || xi != other {
                continue;
            }
            for (ko, b_out) in bo.iter().enumerate() {
                if b_out.pol != Pol::Out {
                    continue;
                }
                for (ki, b_in) in bi.iter().enumerate() {
                    if b_in.pol != Pol::In || b_in.label != b_out.label {
                        continue;
                    }
                    let x = b_in.bound_var().expect("receive binds a variable");
                    let received = b_in.cont.subst(&[(x.clone(), b_out.arg.clone())].into_iter().collect());
                    let mut drop = Vec::new();
                    if *qo == Qual::Lin {
                        drop.push(i);
                    }
                    if *qi == Qual::Lin {
                        drop.push(j);
                    }
                    let (mut g, at) = rebuild(&drop, vec![b_out.cont.clone(), received]);
                    advance(&mut g, xo, &b_out.label);
                    let side = |path: usize, n: &Name, pol, q, k: usize| Side {
                        subject: Some(n.clone()),
                        label: Some(b_out.label.clone()),
                        pol: Some(pol),
                        qual: Some(q),
                        branch: Some(k as u32),
                        ..Side::at(vec![path as u32])
                    };
                    let sides = vec![side(i, xo, Pol::Out, *qo, ko), side(j, xi, Pol::In, *qi, ki)];
                    raw.push((StepLabel::new(Calculus::CmvPlus, kind(*qo, *qi), sides, vec![]), g, at));
                }
            }
        }
    }
    finish(raw)
}

/// Keep restriction annotations in step with the protocol: after a
/// communication on a linear channel the annotation becomes the
/// continuation of the branch taken. Unrestricted types stay as they are.
fn advance(groups: &mut [Group<SessionType>], sender: &Name, label: &Label) {
    let Some(g) = groups.iter_mut().find(|g| g.names.contains(sender)) else { return };
    let Some(t) = &g.ann else { return };
    let pol = if &g.names[0] == sender { Pol::Out } else { Pol::In };
    if let SessionType::Mix(Qual::Lin, _, bs) = t.unfold() {
        if let Some(b) = bs.iter().find(|b| &b.label == label && b.pol == pol) {
            g.ann = Some(b.cont.clone());
        }
    }
}

/// Endpoint barbs: an unguarded choice on a free endpoint.
pub fn barbs_mix(p: &Mix) -> BTreeSet<Barb> {
    let free = p.free_names();
    let mut out = BTreeSet::new();
    collect(p, &free, &mut out);
    out
}

fn collect(p: &Mix, free: &BTreeSet<Name>, out: &mut BTreeSet<Barb>) {
    match p {
        Mix::Choice(_, x, bs) if !bs.is_empty() && free.contains(x) => {
            out.insert(Barb::End(x.clone()));
        }
        Mix::Par(ps) => ps.iter().for_each(|q| collect(q, free, out)),
        Mix::Res(x, y, _, q) => {
            let mut inner = free.clone();
            inner.remove(x);
            inner.remove(y);
            collect(q, &inner, out);
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_mix;

    fn steps(src: &str) -> Vec<Step<Mix>> {
        steps_mix(&parse_mix(src).unwrap())
    }

    #[test]
    fn lin_lin_consumes_both() {
        let s = steps("(new y z) (lin y(l!true.lin o1(a!unit) + m!false) | lin z(l?(x).lin o2(a!x)) | lin r(k!unit))");
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].label.kind, StepKind::LinLin);
        let want = parse_mix("lin o1(a!unit) | lin o2(a!true) | lin r(k!unit)").unwrap();
        assert_eq!(s[0].target, canonicalize(&want));
    }

    #[test]
    fn un_choices_persist() {
        let s = steps("(new y z) (un y(l!true) | un z(l?(x)))");
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].label.kind, StepKind::UnUn);
        assert_eq!(s[0].target, canonicalize(&parse_mix("(new y z) (un y(l!true) | un z(l?(x)))").unwrap()));
    }

    #[test]
    fn linear_annotations_advance() {
        let p = parse_mix("(new x y : lin +{l!bool.lin &{m?unit.end}}) (lin x(l!true.lin x(m?(w))) | lin y(l?(z).lin y(m!unit)))").unwrap();
        let s = steps_mix(&p);
        let want = parse_mix("(new x y : lin &{m?unit.end}) (lin x(m?(w)) | lin y(m!unit))").unwrap();
        assert_eq!(s[0].target, canonicalize(&want));
        assert!(crate::types::check_mix(&crate::types::TyCtx::new(), &s[0].target).is_ok());
    }

    #[test]
    fn free_endpoints_do_not_talk() {
        assert!(steps("lin y(l!true) | lin z(l?(x))").is_empty());
        assert!(steps("(new y z) (lin y(l!true) | lin y(l?(x)))").is_empty());
    }

    #[test]
    fn conditionals() {
        let s = steps("if true and not false then lin a(l!unit) else 0");
        assert_eq!(s[0].label.kind, StepKind::IfTrue);
        assert_eq!(s[0].target.to_string(), "lin a(l!unit)");
        assert!(steps("if z then 0 else 0").is_empty());
    }

    #[test]
    fn barbs() {
        let shown = |src: &str| -> Vec<String> {
            barbs_mix(&parse_mix(src).unwrap()).iter().map(|b| b.to_string()).collect()
        };
        assert_eq!(shown("lin y(l!true)"), vec!["y"]);
        assert!(shown("(new y z) (lin y(l!true) | lin z(l?(x)))").is_empty());
    }
}
