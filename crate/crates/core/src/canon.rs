//! Canonical forms modulo structural congruence.
//!
//! A term is flattened into restriction groups and atoms (sums, choices,
//! prefixes, conditionals, replications). Atoms and groups are split into
//! connected components, each component's binders are labelled canonically
//! by colour refinement with individualisation, and binders are renamed to
//! level-indexed names. Atom internals are canonicalised recursively.

use crate::name::{Fresh, Name};
use crate::syntax::cmv::Cmv;
use crate::syntax::mix::{Branch, Mix};
use crate::syntax::pi::{Pi, Prefix};
use crate::syntax::{Subst, Value};
use crate::types::{dualize, SessionType};
use std::any::{Any, TypeId};
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

/// A restriction group: one name in pi, an endpoint pair in the session
/// calculi. The annotation, if any, types `names[0]`.
#[derive(Clone, Debug)]
pub struct Group<A> {
    pub names: Vec<Name>,
    pub ann: Option<A>,
}

pub trait Canon: Clone + std::fmt::Display + 'static {
    type Ann: Clone;

    /// Push the top-level structure of `self` into groups and atoms,
    /// renaming every hoisted binder to a fresh temporary.
    fn flatten(self, fresh: &mut Fresh, groups: &mut Vec<Group<Self::Ann>>, atoms: &mut Vec<Self>);
    fn free_names_of(&self) -> BTreeSet<Name>;
    fn rename(&self, sigma: &Subst) -> Self;
    /// Canonicalise everything below the top constructor of an atom.
    fn canon_inner(&self, cx: &Ctx, level: u32) -> Self;
    fn build(groups: Vec<Group<Self::Ann>>, atoms: Vec<Self>) -> Self;
    fn swap_ann(a: &Self::Ann) -> Self::Ann;
    fn ann_key(a: &Self::Ann) -> String;
}

/// Per-root settings: binder names are `prefix` followed by a level.
#[derive(Clone, Debug)]
pub struct Ctx {
    pub prefix: Arc<str>,
}

impl Ctx {
    pub fn for_free(free: &BTreeSet<Name>) -> Ctx {
        let mut prefix = String::from("b");
        while free.iter().any(|n| *n.text == *prefix) {
            prefix.push('\'');
        }
        Ctx { prefix: prefix.into() }
    }

    pub fn binder(&self, level: u32) -> Name {
        Name::indexed(&self.prefix, level).with_kind(crate::name::NameKind::Variable)
    }
}

pub fn canonicalize<P: Canon>(p: &P) -> P {
    let cx = Ctx::for_free(&p.free_names_of());
    canon_at(p, &cx, 0)
}

fn star() -> Name {
    Name::plain("\u{2605}")
}

fn color_name(c: u32) -> Name {
    Name::indexed("\u{a7}c", c)
}

fn local_name(i: u32) -> Name {
    Name::indexed("\u{a7}k", i)
}

struct Comp {
    groups: Vec<usize>,
    atoms: Vec<usize>,
}

type MemoKey = (TypeId, Arc<str>, u32, String);

const MEMO_CAP: usize = 1 << 18;

thread_local! {
    // Subterms recur across nesting levels and across explored states.
    static MEMO: RefCell<HashMap<MemoKey, Box<dyn Any>>> = RefCell::new(HashMap::new());
}

/// Canonicalise `p` assuming binders below start at `level`.
pub fn canon_at<P: Canon>(p: &P, cx: &Ctx, level: u32) -> P {
    let key: MemoKey = (TypeId::of::<P>(), cx.prefix.clone(), level, p.to_string());
    if let Some(hit) = MEMO.with(|m| m.borrow().get(&key).and_then(|b| b.downcast_ref::<P>()).cloned()) {
        return hit;
    }
    let out = canon_uncached(p, cx, level);
    MEMO.with(|m| {
        let mut m = m.borrow_mut();
        if m.len() >= MEMO_CAP {
            m.clear();
        }
        m.insert(key, Box::new(out.clone()));
    });
    out
}

fn canon_uncached<P: Canon>(p: &P, cx: &Ctx, level: u32) -> P {
    let mut fresh = Fresh::new();
    let mut groups = Vec::new();
    let mut atoms = Vec::new();
    p.clone().flatten(&mut fresh, &mut groups, &mut atoms);

    let atom_free: Vec<BTreeSet<Name>> = atoms.iter().map(|a| a.free_names_of()).collect();
    let used: BTreeSet<Name> = atom_free.iter().flatten().cloned().collect();
    groups.retain(|g| g.names.iter().any(|n| used.contains(n)));

    let total_names: u32 = groups.iter().map(|g| g.names.len() as u32).sum();
    let inner = level + total_names;

    // endpoint index -> (group, position)
    let mut owner: HashMap<Name, (usize, usize)> = HashMap::new();
    for (gi, g) in groups.iter().enumerate() {
        for (k, n) in g.names.iter().enumerate() {
            owner.insert(n.clone(), (gi, k));
        }
    }
    let atom_groups: Vec<Vec<usize>> = atom_free
        .iter()
        .map(|fv| {
            let mut gs: Vec<usize> = fv.iter().filter_map(|n| owner.get(n).map(|o| o.0)).collect();
            gs.sort();
            gs.dedup();
            gs
        })
        .collect();

    // union-find over groups
    let mut parent: Vec<usize> = (0..groups.len()).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut c = x;
        while p[c] != r {
            let n = p[c];
            p[c] = r;
            c = n;
        }
        r
    }
    for gs in &atom_groups {
        for w in gs.windows(2) {
            let a = find(&mut parent, w[0]);
            let b = find(&mut parent, w[1]);
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut comps: BTreeMap<usize, Comp> = BTreeMap::new();
    let mut closed: Vec<usize> = Vec::new();
    for gi in 0..groups.len() {
        let r = find(&mut parent, gi);
        comps.entry(r).or_insert_with(|| Comp { groups: vec![], atoms: vec![] }).groups.push(gi);
    }
    for (ai, gs) in atom_groups.iter().enumerate() {
        match gs.first() {
            Some(&g) => {
                let r = find(&mut parent, g);
                comps.get_mut(&r).unwrap().atoms.push(ai);
            }
            None => closed.push(ai),
        }
    }

    // Canonical labelling per component.
    let mut labelled: Vec<(String, Vec<(usize, bool)>)> = Vec::new();
    for comp in comps.values() {
        let (key, order) = label_component(&groups, &atoms, &atom_free, comp, cx, inner);
        labelled.push((key, order));
    }
    labelled.sort_by(|a, b| a.0.cmp(&b.0));

    let mut sigma = Subst::new();
    let mut final_groups = Vec::new();
    let mut next = level;
    for (_, order) in &labelled {
        for &(gi, swapped) in order {
            let g = &groups[gi];
            let mut names = g.names.clone();
            let mut ann = g.ann.clone();
            if swapped {
                names.reverse();
                ann = ann.map(|a| P::swap_ann(&a));
            }
            let mut new_names = Vec::new();
            for n in names {
                let b = cx.binder(next);
                next += 1;
                sigma.insert(n, Value::Name(b.clone()));
                new_names.push(b);
            }
            final_groups.push(Group { names: new_names, ann });
        }
    }
    let mut out_atoms: Vec<(String, P)> = atoms
        .iter()
        .map(|a| {
            let c = a.rename(&sigma).canon_inner(cx, inner);
            (c.to_string(), c)
        })
        .collect();
    let _ = closed;
    out_atoms.sort_by(|a, b| a.0.cmp(&b.0));
    P::build(final_groups, out_atoms.into_iter().map(|x| x.1).collect())
}

/// Returns the component key and the ordered (group, swapped) list.
fn label_component<P: Canon>(
    groups: &[Group<P::Ann>],
    atoms: &[P],
    atom_free: &[BTreeSet<Name>],
    comp: &Comp,
    cx: &Ctx,
    inner: u32,
) -> (String, Vec<(usize, bool)>) {
    // endpoints of this component
    let mut eps: Vec<Name> = Vec::new();
    let mut mate: Vec<Option<usize>> = Vec::new();
    let mut init: Vec<String> = Vec::new();
    let mut ep_group: Vec<(usize, usize)> = Vec::new();
    for &gi in &comp.groups {
        let g = &groups[gi];
        let base = eps.len();
        for (k, n) in g.names.iter().enumerate() {
            eps.push(n.clone());
            ep_group.push((gi, k));
            let ann = match (&g.ann, k) {
                (None, _) => String::new(),
                (Some(a), 0) => P::ann_key(a),
                (Some(a), _) => P::ann_key(&P::swap_ann(a)),
            };
            init.push(format!("{}:{}", g.names.len(), ann));
        }
        if g.names.len() == 2 {
            mate.push(Some(base + 1));
            mate.push(Some(base));
        } else {
            mate.push(None);
        }
    }
    let ep_index: HashMap<Name, usize> = eps.iter().cloned().enumerate().map(|(i, n)| (n, i)).collect();
    let atom_eps: Vec<(usize, Vec<usize>)> = comp
        .atoms
        .iter()
        .map(|&ai| (ai, atom_free[ai].iter().filter_map(|n| ep_index.get(n).copied()).collect()))
        .collect();
    let mut ep_atoms: Vec<Vec<usize>> = vec![Vec::new(); eps.len()];
    for (slot, (_, es)) in atom_eps.iter().enumerate() {
        for &e in es {
            ep_atoms[e].push(slot);
        }
    }

    let memo: RefCell<HashMap<(usize, Vec<Name>), String>> = RefCell::new(HashMap::new());
    let render = |slot: usize, assign: &dyn Fn(usize) -> Name| -> String {
        let (ai, es) = &atom_eps[slot];
        let key_names: Vec<Name> = es.iter().map(|&e| assign(e)).collect();
        let mk = (*ai, key_names.clone());
        if let Some(s) = memo.borrow().get(&mk) {
            return s.clone();
        }
        let mut sigma = Subst::new();
        for (&e, n) in es.iter().zip(key_names) {
            sigma.insert(eps[e].clone(), Value::Name(n));
        }
        let s = atoms[*ai].rename(&sigma).canon_inner(cx, inner).to_string();
        memo.borrow_mut().insert(mk, s.clone());
        s
    };

    let rank = |sigs: &[String]| -> Vec<u32> {
        let sorted: BTreeSet<&String> = sigs.iter().collect();
        let idx: HashMap<&String, u32> = sorted.into_iter().enumerate().map(|(i, s)| (s, i as u32)).collect();
        sigs.iter().map(|s| idx[s]).collect()
    };

    let refine = |colors: Vec<u32>| -> Vec<u32> {
        let mut colors = colors;
        loop {
            let distinct_before = colors.iter().collect::<BTreeSet<_>>().len();
            let sigs: Vec<String> = (0..eps.len())
                .map(|e| {
                    let mut rs: Vec<String> = ep_atoms[e]
                        .iter()
                        .map(|&slot| {
                            render(slot, &|f| if f == e { star() } else { color_name(colors[f]) })
                        })
                        .collect();
                    rs.sort();
                    let m = mate[e].map(|m| colors[m] as i64).unwrap_or(-1);
                    format!("{:08}/{}/{}", colors[e], m, rs.join("\u{1}"))
                })
                .collect();
            let next = rank(&sigs);
            let distinct_after = next.iter().collect::<BTreeSet<_>>().len();
            colors = next;
            if distinct_after == distinct_before {
                return colors;
            }
        }
    };

    let start = rank(&init);
    let stable = refine(start);

    let mut best: Option<(String, Vec<(usize, bool)>)> = None;
    let mut stack = vec![stable];
    while let Some(colors) = stack.pop() {
        let mut cells: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (e, &c) in colors.iter().enumerate() {
            cells.entry(c).or_default().push(e);
        }
        if let Some((_, cell)) = cells.iter().find(|(_, v)| v.len() > 1) {
            for &m in cell.iter().rev() {
                let ind: Vec<u32> = colors
                    .iter()
                    .enumerate()
                    .map(|(e, &c)| 2 * c + u32::from(cell.contains(&e) && e != m))
                    .collect();
                stack.push(refine(ind));
            }
            continue;
        }
        // discrete: order groups by min colour, endpoints by colour
        let mut gorder: Vec<(u32, usize, bool)> = comp
            .groups
            .iter()
            .map(|&gi| {
                let es: Vec<usize> = (0..eps.len()).filter(|&e| ep_group[e].0 == gi).collect();
                let cs: Vec<u32> = es.iter().map(|&e| colors[e]).collect();
                let swapped = cs.len() == 2 && cs[1] < cs[0];
                (*cs.iter().min().unwrap(), gi, swapped)
            })
            .collect();
        gorder.sort();
        let mut local: HashMap<usize, Name> = HashMap::new();
        let mut head = String::new();
        let mut k = 0;
        for &(_, gi, swapped) in &gorder {
            let g = &groups[gi];
            let mut es: Vec<usize> = (0..eps.len()).filter(|&e| ep_group[e].0 == gi).collect();
            if swapped {
                es.reverse();
            }
            for e in es {
                local.insert(e, local_name(k));
                k += 1;
            }
            let ann = match &g.ann {
                None => String::new(),
                Some(a) if swapped => P::ann_key(&P::swap_ann(a)),
                Some(a) => P::ann_key(a),
            };
            head.push_str(&format!("[{}:{}]", g.names.len(), ann));
        }
        let mut rs: Vec<String> = (0..atom_eps.len()).map(|slot| render(slot, &|e| local[&e].clone())).collect();
        rs.sort();
        let key = format!("{head}{}", rs.join("\u{1}"));
        let order: Vec<(usize, bool)> = gorder.iter().map(|&(_, gi, s)| (gi, s)).collect();
        if best.as_ref().is_none_or(|(b, _)| key < *b) {
            best = Some((key, order));
        }
    }
    best.expect("component has at least one labelling")
}

// ---------------------------------------------------------------------------
// pi

impl Canon for Pi {
    type Ann = ();

    fn flatten(self, fresh: &mut Fresh, groups: &mut Vec<Group<()>>, atoms: &mut Vec<Pi>) {
        match self {
            Pi::Sum(ref bs) if bs.is_empty() => {}
            Pi::Par(ps) => ps.into_iter().for_each(|p| p.flatten(fresh, groups, atoms)),
            Pi::Res(x, p) => {
                let t = fresh.temp();
                let body = p.subst(&[(x, Value::Name(t.clone()))].into());
                groups.push(Group { names: vec![t], ann: None });
                body.flatten(fresh, groups, atoms);
            }
            atom => atoms.push(atom),
        }
    }

    fn free_names_of(&self) -> BTreeSet<Name> {
        self.free_names()
    }

    fn rename(&self, sigma: &Subst) -> Pi {
        self.subst(sigma)
    }

    fn canon_inner(&self, cx: &Ctx, level: u32) -> Pi {
        match self {
            Pi::Sum(bs) => {
                let mut out: Vec<(String, (Prefix, Pi))> = bs
                    .iter()
                    .map(|(pre, p)| {
                        let item = match pre {
                            Prefix::In(y, x) => {
                                let b = cx.binder(level);
                                let body = p.subst(&[(x.clone(), Value::Name(b.clone()))].into());
                                (Prefix::In(y.clone(), b), canon_at(&body, cx, level + 1))
                            }
                            other => (other.clone(), canon_at(p, cx, level)),
                        };
                        (Pi::Sum(vec![item.clone()]).to_string(), item)
                    })
                    .collect();
                out.sort_by(|a, b| a.0.cmp(&b.0));
                out.dedup_by(|a, b| a.0 == b.0);
                Pi::Sum(out.into_iter().map(|x| x.1).collect())
            }
            Pi::Bang(p) => Pi::Bang(Box::new(canon_at(p, cx, level))),
            other => canon_at(other, cx, level),
        }
    }

    fn build(groups: Vec<Group<()>>, atoms: Vec<Pi>) -> Pi {
        let body = match atoms.len() {
            0 => Pi::nil(),
            1 => atoms.into_iter().next().unwrap(),
            _ => Pi::Par(atoms),
        };
        groups.into_iter().rev().fold(body, |acc, g| Pi::Res(g.names[0].clone(), Box::new(acc)))
    }

    fn swap_ann(_: &()) {}

    fn ann_key(_: &()) -> String {
        String::new()
    }
}

// ---------------------------------------------------------------------------
// mixed sessions

fn canon_branch(b: &Branch, cx: &Ctx, level: u32) -> Branch {
    match b.bound_var() {
        Some(x) => {
            let nb = cx.binder(level);
            let body = b.cont.subst(&[(x.clone(), Value::Name(nb.clone()))].into());
            Branch { label: b.label.clone(), pol: b.pol, arg: Value::Name(nb), cont: canon_at(&body, cx, level + 1) }
        }
        None => Branch { label: b.label.clone(), pol: b.pol, arg: b.arg.clone(), cont: canon_at(&b.cont, cx, level) },
    }
}

impl Canon for Mix {
    type Ann = SessionType;

    fn flatten(self, fresh: &mut Fresh, groups: &mut Vec<Group<SessionType>>, atoms: &mut Vec<Mix>) {
        match self {
            Mix::Inact => {}
            Mix::Choice(_, _, ref bs) if bs.is_empty() => {}
            Mix::Par(ps) => ps.into_iter().for_each(|p| p.flatten(fresh, groups, atoms)),
            Mix::Res(x, y, t, p) => {
                let tx = fresh.temp();
                let ty = fresh.temp();
                let body = p.subst(&[(x, Value::Name(tx.clone())), (y, Value::Name(ty.clone()))].into());
                groups.push(Group { names: vec![tx, ty], ann: t });
                body.flatten(fresh, groups, atoms);
            }
            atom => atoms.push(atom),
        }
    }

    fn free_names_of(&self) -> BTreeSet<Name> {
        self.free_names()
    }

    fn rename(&self, sigma: &Subst) -> Mix {
        self.subst(sigma)
    }

    fn canon_inner(&self, cx: &Ctx, level: u32) -> Mix {
        match self {
            Mix::Choice(q, x, bs) => {
                let mut out: Vec<(String, Branch)> = bs
                    .iter()
                    .map(|b| {
                        let c = canon_branch(b, cx, level);
                        (c.to_string(), c)
                    })
                    .collect();
                out.sort_by(|a, b| a.0.cmp(&b.0));
                out.dedup_by(|a, b| a.0 == b.0);
                Mix::Choice(*q, x.clone(), out.into_iter().map(|x| x.1).collect())
            }
            Mix::If(e, p, q) => Mix::If(e.clone(), Box::new(canon_at(p, cx, level)), Box::new(canon_at(q, cx, level))),
            other => canon_at(other, cx, level),
        }
    }

    fn build(groups: Vec<Group<SessionType>>, atoms: Vec<Mix>) -> Mix {
        let body = match atoms.len() {
            0 => Mix::Inact,
            1 => atoms.into_iter().next().unwrap(),
            _ => Mix::Par(atoms),
        };
        groups.into_iter().rev().fold(body, |acc, g| {
            Mix::Res(g.names[0].clone(), g.names[1].clone(), g.ann, Box::new(acc))
        })
    }

    fn swap_ann(a: &SessionType) -> SessionType {
        dualize(a).unwrap_or_else(|_| a.clone())
    }

    fn ann_key(a: &SessionType) -> String {
        a.to_string()
    }
}

// ---------------------------------------------------------------------------
// classic sessions

impl Canon for Cmv {
    type Ann = SessionType;

    fn flatten(self, fresh: &mut Fresh, groups: &mut Vec<Group<SessionType>>, atoms: &mut Vec<Cmv>) {
        match self {
            Cmv::Inact => {}
            Cmv::Par(ps) => ps.into_iter().for_each(|p| p.flatten(fresh, groups, atoms)),
            Cmv::Res(x, y, t, p) => {
                let tx = fresh.temp();
                let ty = fresh.temp();
                let body = p.subst(&[(x, Value::Name(tx.clone())), (y, Value::Name(ty.clone()))].into());
                groups.push(Group { names: vec![tx, ty], ann: t });
                body.flatten(fresh, groups, atoms);
            }
            atom => atoms.push(atom),
        }
    }

    fn free_names_of(&self) -> BTreeSet<Name> {
        self.free_names()
    }

    fn rename(&self, sigma: &Subst) -> Cmv {
        self.subst(sigma)
    }

    fn canon_inner(&self, cx: &Ctx, level: u32) -> Cmv {
        match self {
            Cmv::Out(x, v, p) => Cmv::Out(x.clone(), v.clone(), Box::new(canon_at(p, cx, level))),
            Cmv::In(q, x, y, p) => {
                let b = cx.binder(level);
                let body = p.subst(&[(y.clone(), Value::Name(b.clone()))].into());
                Cmv::In(*q, x.clone(), b, Box::new(canon_at(&body, cx, level + 1)))
            }
            Cmv::Sel(x, l, p) => Cmv::Sel(x.clone(), l.clone(), Box::new(canon_at(p, cx, level))),
            Cmv::Branch(x, m) => {
                Cmv::Branch(x.clone(), m.iter().map(|(l, p)| (l.clone(), canon_at(p, cx, level))).collect())
            }
            Cmv::If(e, p, q) => Cmv::If(e.clone(), Box::new(canon_at(p, cx, level)), Box::new(canon_at(q, cx, level))),
            other => canon_at(other, cx, level),
        }
    }

    fn build(groups: Vec<Group<SessionType>>, atoms: Vec<Cmv>) -> Cmv {
        let body = match atoms.len() {
            0 => Cmv::Inact,
            1 => atoms.into_iter().next().unwrap(),
            _ => Cmv::Par(atoms),
        };
        groups.into_iter().rev().fold(body, |acc, g| {
            Cmv::Res(g.names[0].clone(), g.names[1].clone(), g.ann, Box::new(acc))
        })
    }

    fn swap_ann(a: &SessionType) -> SessionType {
        dualize(a).unwrap_or_else(|_| a.clone())
    }

    fn ann_key(a: &SessionType) -> String {
        a.to_string()
    }
}

// ---------------------------------------------------------------------------
// alpha-equivalence by positional binder naming

/// Rename every binder to a name determined by its depth only.
pub trait AlphaNorm: Sized {
    fn alpha_norm(&self) -> Self;
}

fn depth_name(d: u32) -> Name {
    Name::indexed("\u{a7}d", d)
}

fn pi_alpha(p: &Pi, d: u32) -> Pi {
    match p {
        Pi::Sum(bs) => Pi::Sum(
            bs.iter()
                .map(|(pre, q)| match pre {
                    Prefix::In(y, x) => {
                        let b = depth_name(d);
                        (Prefix::In(y.clone(), b.clone()), pi_alpha(&q.subst(&[(x.clone(), Value::Name(b))].into()), d + 1))
                    }
                    other => (other.clone(), pi_alpha(q, d)),
                })
                .collect(),
        ),
        Pi::Res(x, q) => {
            let b = depth_name(d);
            Pi::Res(b.clone(), Box::new(pi_alpha(&q.subst(&[(x.clone(), Value::Name(b))].into()), d + 1)))
        }
        Pi::Par(ps) => Pi::Par(ps.iter().map(|q| pi_alpha(q, d)).collect()),
        Pi::Bang(q) => Pi::Bang(Box::new(pi_alpha(q, d))),
    }
}

impl AlphaNorm for Pi {
    fn alpha_norm(&self) -> Pi {
        pi_alpha(self, 0)
    }
}

fn mix_alpha(p: &Mix, d: u32) -> Mix {
    match p {
        Mix::Choice(q, x, bs) => Mix::Choice(
            *q,
            x.clone(),
            bs.iter()
                .map(|b| match b.bound_var() {
                    Some(v) => {
                        let n = depth_name(d);
                        Branch {
                            label: b.label.clone(),
                            pol: b.pol,
                            arg: Value::Name(n.clone()),
                            cont: mix_alpha(&b.cont.subst(&[(v.clone(), Value::Name(n))].into()), d + 1),
                        }
                    }
                    None => Branch { cont: mix_alpha(&b.cont, d), ..b.clone() },
                })
                .collect(),
        ),
        Mix::Par(ps) => Mix::Par(ps.iter().map(|q| mix_alpha(q, d)).collect()),
        Mix::Res(x, y, t, q) => {
            let (a, b) = (depth_name(d), depth_name(d + 1));
            let body = q.subst(&[(x.clone(), Value::Name(a.clone())), (y.clone(), Value::Name(b.clone()))].into());
            Mix::Res(a, b, t.clone(), Box::new(mix_alpha(&body, d + 2)))
        }
        Mix::If(e, a, b) => Mix::If(e.clone(), Box::new(mix_alpha(a, d)), Box::new(mix_alpha(b, d))),
        Mix::Inact => Mix::Inact,
    }
}

impl AlphaNorm for Mix {
    fn alpha_norm(&self) -> Mix {
        mix_alpha(self, 0)
    }
}

fn cmv_alpha(p: &Cmv, d: u32) -> Cmv {
    match p {
        Cmv::Out(x, v, q) => Cmv::Out(x.clone(), v.clone(), Box::new(cmv_alpha(q, d))),
        Cmv::In(qq, x, y, q) => {
            let n = depth_name(d);
            Cmv::In(*qq, x.clone(), n.clone(), Box::new(cmv_alpha(&q.subst(&[(y.clone(), Value::Name(n))].into()), d + 1)))
        }
        Cmv::Sel(x, l, q) => Cmv::Sel(x.clone(), l.clone(), Box::new(cmv_alpha(q, d))),
        Cmv::Branch(x, m) => Cmv::Branch(x.clone(), m.iter().map(|(l, q)| (l.clone(), cmv_alpha(q, d))).collect()),
        Cmv::Par(ps) => Cmv::Par(ps.iter().map(|q| cmv_alpha(q, d)).collect()),
        Cmv::Res(x, y, t, q) => {
            let (a, b) = (depth_name(d), depth_name(d + 1));
            let body = q.subst(&[(x.clone(), Value::Name(a.clone())), (y.clone(), Value::Name(b.clone()))].into());
            Cmv::Res(a, b, t.clone(), Box::new(cmv_alpha(&body, d + 2)))
        }
        Cmv::If(e, a, b) => Cmv::If(e.clone(), Box::new(cmv_alpha(a, d)), Box::new(cmv_alpha(b, d))),
        Cmv::Inact => Cmv::Inact,
    }
}

impl AlphaNorm for Cmv {
    fn alpha_norm(&self) -> Cmv {
        cmv_alpha(self, 0)
    }
}

pub fn alpha_eq<P: AlphaNorm + PartialEq>(a: &P, b: &P) -> bool {
    a.alpha_norm() == b.alpha_norm()
}

/// Structural congruence, decided through canonical forms.
pub fn struct_eq<P: Canon + PartialEq>(a: &P, b: &P) -> bool {
    canonicalize(a) == canonicalize(b)
}
