use super::{finish, Barb, Side, Step, StepKind, StepLabel};
use crate::canon::{canonicalize, Canon, Group};
use crate::name::{Fresh, Name};
use crate::syntax::pi::{Pi, Prefix};
use crate::syntax::{Calculus, Path, Value};
use std::collections::BTreeSet;

/// Strip top-level restrictions and parallels of a canonical term. Binders
/// there are already distinct, so no renaming is needed.
pub(super) fn split_top(p: &Pi, groups: &mut Vec<Group<()>>, atoms: &mut Vec<Pi>) {
    match p {
        Pi::Sum(bs) if bs.is_empty() => {}
        Pi::Par(ps) => ps.iter().for_each(|q| split_top(q, groups, atoms)),
        Pi::Res(x, q) => {
            groups.push(Group { names: vec![x.clone()], ann: None });
            split_top(q, groups, atoms);
        }
        atom => atoms.push(atom.clone()),
    }
}

struct Copy {
    groups: Vec<Group<()>>,
    atoms: Vec<Pi>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Origin {
    Top(usize),
    /// (replication index, copy, atom index inside the copy)
    Copy(usize, usize, usize),
}

struct Site<'a> {
    origin: Origin,
    summands: &'a [(Prefix, Pi)],
}

impl Origin {
    fn path(self) -> Path {
        match self {
            Origin::Top(i) => vec![i as u32],
            Origin::Copy(i, c, j) => vec![i as u32, c as u32, j as u32],
        }
    }
}

/// All reductions of `p`, on its canonical form. A replication `!R`
/// contributes the redexes of one unfolded copy, plus communications
/// between two copies.
pub fn steps_pi(p: &Pi) -> Vec<Step<Pi>> {
    let c = canonicalize(p);
    let mut groups = Vec::new();
    let mut atoms = Vec::new();
    split_top(&c, &mut groups, &mut atoms);

    let mut fresh = Fresh::new();
    let mut copies: Vec<Option<[Copy; 2]>> = Vec::new();
    for a in &atoms {
        copies.push(match a {
            Pi::Bang(body) => {
                let mut mk = || {
                    let mut g = Vec::new();
                    let mut at = Vec::new();
                    (**body).clone().flatten(&mut fresh, &mut g, &mut at);
                    Copy { groups: g, atoms: at }
                };
                Some([mk(), mk()])
            }
            _ => None,
        });
    }

    let mut sites: Vec<Site> = Vec::new();
    for (i, a) in atoms.iter().enumerate() {
        match a {
            Pi::Sum(bs) => sites.push(Site { origin: Origin::Top(i), summands: bs }),
            Pi::Bang(_) => {
                for (c, copy) in copies[i].as_ref().unwrap().iter().enumerate() {
                    for (j, inner) in copy.atoms.iter().enumerate() {
                        if let Pi::Sum(bs) = inner {
                            sites.push(Site { origin: Origin::Copy(i, c, j), summands: bs });
                        }
                    }
                }
            }
            _ => {}
        }
    }

    // Rebuild after using the given sites, which are replaced by `conts`.
    let rebuild = |used: &[Origin], conts: Vec<Pi>| -> (Vec<Group<()>>, Vec<Pi>) {
        let mut g = groups.clone();
        let mut out: Vec<Pi> = atoms
            .iter()
            .enumerate()
            .filter(|(i, _)| !used.contains(&Origin::Top(*i)))
            .map(|(_, a)| a.clone())
            .collect();
        let mut unfolded: BTreeSet<(usize, usize)> = BTreeSet::new();
        for o in used {
            if let Origin::Copy(i, c, _) = o {
                unfolded.insert((*i, *c));
            }
        }
        for (i, c) in unfolded {
            let copy = &copies[i].as_ref().unwrap()[c];
            g.extend(copy.groups.iter().cloned());
            for (j, a) in copy.atoms.iter().enumerate() {
                if !used.contains(&Origin::Copy(i, c, j)) {
                    out.push(a.clone());
                }
            }
        }
        out.extend(conts);
        (g, out)
    };

    let persistent = |os: &[Origin]| -> Vec<Path> {
        os.iter().filter(|o| matches!(o, Origin::Copy(..))).map(|o| o.path()).collect()
    };

    let mut raw = Vec::new();
    // Copy 1 only takes part in communications with copy 0 of the same
    // replication; everything else uses copy 0.
    let primary = |o: Origin| !matches!(o, Origin::Copy(_, 1, _));

    for s in &sites {
        if !primary(s.origin) {
            continue;
        }
        for (k, (pre, cont)) in s.summands.iter().enumerate() {
            if *pre == Prefix::Tau {
                let used = [s.origin];
                let (g, a) = rebuild(&used, vec![cont.clone()]);
                let side = Side { branch: Some(k as u32), ..Side::at(s.origin.path()) };
                raw.push((StepLabel::new(Calculus::Pi, StepKind::Tau, vec![side], persistent(&used)), g, a));
            }
        }
    }

    for so in &sites {
        for si in &sites {
            if so.origin == si.origin || !pair_allowed(so.origin, si.origin) {
                continue;
            }
            for (ko, (po, co)) in so.summands.iter().enumerate() {
                let Prefix::Out(y, z) = po else { continue };
                for (ki, (pi_, ci)) in si.summands.iter().enumerate() {
                    let Prefix::In(y2, x) = pi_ else { continue };
                    if y != y2 {
                        continue;
                    }
                    let received = ci.subst(&[(x.clone(), Value::Name(z.clone()))].into_iter().collect());
                    let used = [so.origin, si.origin];
                    let (g, a) = rebuild(&used, vec![co.clone(), received]);
                    let out_side = Side {
                        subject: Some(y.clone()),
                        pol: Some(crate::syntax::Pol::Out),
                        branch: Some(ko as u32),
                        ..Side::at(so.origin.path())
                    };
                    let in_side = Side {
                        subject: Some(y.clone()),
                        pol: Some(crate::syntax::Pol::In),
                        branch: Some(ki as u32),
                        ..Side::at(si.origin.path())
                    };
                    raw.push((StepLabel::new(Calculus::Pi, StepKind::Com, vec![out_side, in_side], persistent(&used)), g, a));
                }
            }
        }
    }
    finish(raw)
}

fn pair_allowed(a: Origin, b: Origin) -> bool {
    match (a, b) {
        (Origin::Copy(i, ca, _), Origin::Copy(k, cb, _)) if i == k => match (ca, cb) {
            (0, 0) => true,
            // two copies of one replication: the output comes from copy 0
            (0, 1) => true,
            _ => false,
        },
        (x, y) => !matches!(x, Origin::Copy(_, 1, _)) && !matches!(y, Origin::Copy(_, 1, _)),
    }
}

/// Output barbs `ȳ` and input barbs `y` on unguarded prefixes with `y` free.
pub fn barbs_pi(p: &Pi) -> BTreeSet<Barb> {
    let free = p.free_names();
    let mut out = BTreeSet::new();
    collect_barbs(p, &free, &mut out);
    out
}

fn collect_barbs(p: &Pi, free: &BTreeSet<Name>, out: &mut BTreeSet<Barb>) {
    match p {
        Pi::Sum(bs) => {
            for (pre, _) in bs {
                match pre {
                    Prefix::Out(y, _) if free.contains(y) => {
                        out.insert(Barb::Out(y.clone()));
                    }
                    Prefix::In(y, _) if free.contains(y) => {
                        out.insert(Barb::In(y.clone()));
                    }
                    _ => {}
                }
            }
        }
        // Binders are shadowed names; a barb on a restricted name is not free.
        Pi::Res(x, q) => {
            let mut inner = free.clone();
            inner.remove(x);
            collect_barbs(q, &inner, out);
        }
        Pi::Par(ps) => ps.iter().for_each(|q| collect_barbs(q, free, out)),
        Pi::Bang(q) => collect_barbs(q, free, out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_pi;

    fn targets(src: &str) -> Vec<String> {
        steps_pi(&parse_pi(src).unwrap()).into_iter().map(|s| s.target.to_string()).collect()
    }

    #[test]
    fn nil_has_no_steps() {
        assert!(steps_pi(&Pi::nil()).is_empty());
    }

    #[test]
    fn tau_consumes_the_whole_choice() {
        let s = steps_pi(&parse_pi("tau.a! + b?").unwrap());
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].label.kind, StepKind::Tau);
        assert_eq!(s[0].target.to_string(), "a!<a>");
    }

    #[test]
    fn com_substitutes() {
        assert_eq!(targets("a!<z>.0 | a?(x).x!<x>"), vec!["z!<z>"]);
    }

    #[test]
    fn shared_choice_conflicts() {
        let s = steps_pi(&parse_pi("a! | b! | a? + b?").unwrap());
        assert_eq!(s.len(), 2);
        assert!(s[0].label.conflicts(&s[1].label));
        let d = steps_pi(&parse_pi("a! | b! | a? | b?").unwrap());
        assert_eq!(d.len(), 2);
        assert!(!d[0].label.conflicts(&d[1].label));
    }

    #[test]
    fn replication_unfolds_lazily() {
        let t = targets("!a! | a?.b!");
        assert_eq!(t, vec!["!a!<a> | b!<b>"]);
        // two copies talk to each other
        let t2 = targets("!(a! + a?.c!)");
        assert_eq!(t2, vec!["!(a!<a> + a?(b0).c!<c>) | c!<c>"]);
    }

    #[test]
    fn barbs_only_on_free_names() {
        let p = parse_pi("(nu a) (a! | b?) | c!").unwrap();
        let shown: Vec<String> = barbs_pi(&p).iter().map(|b| b.to_string()).collect();
        assert_eq!(shown, vec!["b?", "c!"]);
    }
}
