//! Translation of mixed sessions into classic sessions.
//!
//! The encoder walks a typing derivation of the source. Each mixed choice is
//! translated by one of six schemes, picked by the process qualifier and the
//! qualifier and view of the endpoint's type. Non-determinism is built from a
//! branching on a fresh channel raced by one selection per option.

use crate::canon::{canonicalize, Canon, Group};
use crate::name::{Fresh, Name};
use crate::reduce::{StepKind, StepLabel};
use crate::syntax::cmv::Cmv;
use crate::syntax::mix::{Branch, Mix};
use crate::syntax::{Label, Pol, Qual, Value, View};
use crate::types::{check_mix, Derivation, Note, Rule, SessionType, Subject, TBranch, TyCtx, TypeError};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Label stem of the option gadget that commits an internal choice.
pub const START_STEM: &str = "init";
/// Label stem of every other option gadget.
pub const OPT_STEM: &str = "opt";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Case {
    /// `lin` choice on a linear internal type.
    LinInt,
    /// `lin` choice on a linear external type.
    LinExt,
    /// `lin` choice on an unrestricted internal type.
    LinOnUnInt,
    LinOnUnExt,
    UnInt,
    UnExt,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = serde_json::to_value(self).expect("case serializes");
        f.write_str(v.as_str().unwrap_or("?"))
    }
}

/// Where a piece of the target came from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub case: Case,
    /// Source endpoint, before renaming.
    pub endpoint: Name,
    pub source: String,
    /// Fresh-name counter values used by this choice's scheme, `[from, to)`.
    pub fresh: (u32, u32),
}

#[derive(Clone, Debug)]
pub struct Encoding {
    pub source: Mix,
    pub source_ctx: TyCtx,
    pub derivation: Derivation,
    /// The renamed, translated context the target is typed under.
    pub ctx: TyCtx,
    pub term: Cmv,
    pub provenance: Vec<Provenance>,
}

#[derive(Debug, thiserror::Error)]
pub enum EncodeError {
    #[error("source does not typecheck: {0}")]
    Type(#[from] TypeError),
    #[error("cannot encode: {0}")]
    Unsupported(String),
}

/// Source names move to their own namespace so they never meet the
/// encoder's reserved names.
pub fn phi(n: &Name) -> Name {
    if n.is_wildcard() {
        return n.clone();
    }
    Name { kind: n.kind, text: format!("n_{}", n.text).into(), index: n.index }
}

fn phi_value(v: &Value) -> Value {
    match v {
        Value::Name(n) => Value::Name(phi(n)),
        other => other.clone(),
    }
}

fn mangle(view: View, b: &TBranch) -> Label {
    match view {
        View::Int => b.label.mangled(b.pol),
        View::Ext => b.label.mangled(b.pol.flip()),
    }
}

/// Translation of session types. Linear mixed choices become a labelled
/// choice followed by one message; unrestricted ones become a recursive
/// channel carrying a fresh linear channel.
pub fn encode_type(t: &SessionType) -> SessionType {
    use SessionType as T;
    match t {
        T::End | T::Unit | T::Bool | T::Var(_) | T::Com(..) | T::Choice(..) => t.clone(),
        T::Rec(x, body) => match &**body {
            T::Mix(Qual::Un, v, bs) => un_channel(x, *v, bs),
            b => T::Rec(x.clone(), Box::new(encode_type(b))),
        },
        T::Mix(Qual::Lin, v, bs) => T::Choice(
            Qual::Lin,
            *v,
            bs.iter()
                .map(|b| (mangle(*v, b), T::com(Qual::Lin, b.pol, encode_type(&b.payload), encode_type(&b.cont))))
                .collect(),
        ),
        T::Mix(Qual::Un, v, bs) => un_channel("t", *v, bs),
    }
}

/// The linear channel sent over an unrestricted choice endpoint, as the
/// receiving side sees it.
fn carrier(view: View, bs: &[TBranch]) -> SessionType {
    let m: BTreeMap<Label, SessionType> = bs
        .iter()
        .map(|b| {
            let k = if view == View::Int { b.pol } else { b.pol.flip() };
            (b.label.mangled(k), SessionType::com(Qual::Lin, k.flip(), encode_type(&b.payload), SessionType::End))
        })
        .collect();
    SessionType::Choice(Qual::Lin, View::Ext, m)
}

fn un_channel(var: &str, view: View, bs: &[TBranch]) -> SessionType {
    let pol = if view == View::Int { Pol::Out } else { Pol::In };
    SessionType::rec(var, SessionType::com(Qual::Un, pol, carrier(view, bs), SessionType::var(var)))
}

pub fn encode_ctx(g: &TyCtx) -> TyCtx {
    TyCtx::from_entries(g.entries().iter().map(|(n, t)| (phi(n), encode_type(t)))).expect("renaming is injective")
}

/// Branches of one label, sends and receives apart, as indices into the
/// original branch list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelGroup {
    pub label: Label,
    pub sends: Vec<usize>,
    pub recvs: Vec<usize>,
}

/// Group a choice's branches by label, labels in order.
pub fn reorder_choice(bs: &[Branch]) -> Vec<LabelGroup> {
    let mut m: BTreeMap<Label, LabelGroup> = BTreeMap::new();
    for (i, b) in bs.iter().enumerate() {
        let g = m.entry(b.label.clone()).or_insert_with(|| LabelGroup { label: b.label.clone(), sends: vec![], recvs: vec![] });
        match b.pol {
            Pol::Out => g.sends.push(i),
            Pol::In => g.recvs.push(i),
        }
    }
    m.into_values().collect()
}

fn nd_labeled(stem: &str, ps: Vec<Cmv>, fresh: &mut Fresh) -> Cmv {
    let s = fresh.reserved("s");
    let t = fresh.reserved("t");
    let labels: Vec<Label> = (1..=ps.len()).map(|i| Label::new(&format!("{stem}{i}"))).collect();
    let ann = SessionType::Choice(Qual::Un, View::Ext, labels.iter().map(|l| (l.clone(), SessionType::End)).collect());
    let mut par = vec![Cmv::Branch(s.clone(), labels.iter().cloned().zip(ps).collect())];
    par.extend(labels.into_iter().map(|l| Cmv::sel(&t, l, Cmv::Inact)));
    Cmv::res(&s, &t, Some(ann), Cmv::Par(par))
}

/// `(νst)(s▷{opt_i: P_i} | Π t◁opt_i.0)`: reduces in one step to any `P_i`
/// plus garbage.
pub fn nd_choice(ps: Vec<Cmv>, fresh: &mut Fresh) -> Cmv {
    nd_labeled(OPT_STEM, ps, fresh)
}

#[derive(Clone, Debug, Serialize)]
pub struct NdChoiceReport {
    pub n: usize,
    pub steps: usize,
    pub pairwise_conflicting: bool,
    /// Reduct `j` against option `j`, which outputs on its own name `o{j}`.
    pub reducts: Vec<crate::equiv::Verdict>,
    /// With every option `0`, what each step leaves behind.
    pub junk_stuck: bool,
    pub junk_barb_free: bool,
}

impl NdChoiceReport {
    pub fn ok(&self) -> bool {
        self.steps == self.n
            && self.pairwise_conflicting
            && self.reducts.iter().all(|v| *v == crate::equiv::Verdict::Related)
            && self.junk_stuck
            && self.junk_barb_free
    }
}

/// Exercise the `n`-way gadget on pairwise distinguishable options.
pub fn check_nd_choice(n: usize, bounds: crate::lts::Bounds) -> NdChoiceReport {
    use crate::reduce::Process;
    let opts: Vec<Cmv> = (0..n).map(|j| Cmv::out(&Name::parse(&format!("o{j}")), Value::Unit, Cmv::Inact)).collect();
    let p = nd_choice(opts.clone(), &mut Fresh::new());
    let steps = p.steps();
    let pairwise_conflicting =
        steps.iter().enumerate().all(|(i, a)| steps[i + 1..].iter().all(|b| a.label.conflicts(&b.label)));
    // match each reduct to the option whose barb it shows
    let reducts = opts
        .iter()
        .map(|o| {
            let want = o.barbs();
            match steps.iter().find(|s| s.target.barbs() == want) {
                Some(s) => crate::equiv::weak_bisim(&s.target, o, bounds).verdict,
                None => crate::equiv::Verdict::NotRelated,
            }
        })
        .collect();
    let junk = nd_choice(vec![Cmv::Inact; n], &mut Fresh::new()).steps();
    NdChoiceReport {
        n,
        steps: steps.len(),
        pairwise_conflicting,
        reducts,
        junk_stuck: junk.iter().all(|s| s.target.steps().is_empty()),
        junk_barb_free: junk.iter().all(|s| s.target.barbs().is_empty()),
    }
}

struct Encoder {
    fresh: Fresh,
    prov: Vec<Provenance>,
}

fn unsupported<T>(what: impl fmt::Display) -> Result<T, EncodeError> {
    Err(EncodeError::Unsupported(what.to_string()))
}

impl Encoder {
    fn proc(&mut self, d: &Derivation) -> Result<Cmv, EncodeError> {
        let Subject::Mix(p) = &d.subject else { return unsupported(format!("unexpected judgement `{}`", d.subject)) };
        match (d.rule, p) {
            (Rule::Inact, _) => Ok(Cmv::Inact),
            (Rule::Par, _) => Ok(Cmv::Par(vec![self.proc(&d.premises[0])?, self.proc(&d.premises[1])?])),
            (Rule::Res, Mix::Res(x, y, _, _)) => {
                let Some(Note::Restriction { left, .. }) = &d.note else { return unsupported("restriction without types") };
                let body = self.proc(&d.premises[0])?;
                Ok(Cmv::res(&phi(x), &phi(y), Some(encode_type(left)), body))
            }
            (Rule::If, Mix::If(e, _, _)) => {
                let a = self.proc(&d.premises[1])?;
                let b = self.proc(&d.premises[2])?;
                Ok(Cmv::If(e.rename(&|n| Some(phi(n))), Box::new(a), Box::new(b)))
            }
            (Rule::Choice, Mix::Choice(q, x, bs)) => self.choice(d, *q, x, bs),
            (r, _) => unsupported(format!("rule {r} at `{p}`")),
        }
    }

    fn choice(&mut self, d: &Derivation, q: Qual, x: &Name, bs: &[Branch]) -> Result<Cmv, EncodeError> {
        let Some(Note::Endpoint { declared, .. }) = &d.note else { return unsupported("choice without endpoint type") };
        let (tq, view) = match declared.unfold() {
            SessionType::Mix(tq, v, _) => (tq, v),
            t => return unsupported(format!("choice on `{t}`")),
        };
        let case = match (q, tq, view) {
            (Qual::Lin, Qual::Lin, View::Int) => Case::LinInt,
            (Qual::Lin, Qual::Lin, View::Ext) => Case::LinExt,
            (Qual::Lin, Qual::Un, View::Int) => Case::LinOnUnInt,
            (Qual::Lin, Qual::Un, View::Ext) => Case::LinOnUnExt,
            (Qual::Un, Qual::Un, View::Int) => Case::UnInt,
            (Qual::Un, Qual::Un, View::Ext) => Case::UnExt,
            (Qual::Un, Qual::Lin, _) => return unsupported("unrestricted choice on a linear endpoint"),
        };
        let y = phi(x);
        let from = self.fresh.peek();

        let mut conts = Vec::with_capacity(bs.len());
        for pd in &d.premises {
            conts.push(self.proc(pd.premises.last().expect("branch has a continuation"))?);
        }
        // Replicated choices first re-arm themselves via `u`.
        let rearm = if q == Qual::Un {
            let u = self.fresh.reserved("u");
            let v = self.fresh.reserved("v");
            for c in conts.iter_mut() {
                let k = std::mem::replace(c, Cmv::Inact);
                *c = Cmv::Par(vec![Cmv::out(&u, Value::Unit, Cmv::Inact), k]);
            }
            Some((u, v))
        } else {
            None
        };

        let groups = reorder_choice(bs);
        let send = |on: &Name, i: usize, conts: &mut Vec<Cmv>| {
            Cmv::out(on, phi_value(&bs[i].arg), std::mem::replace(&mut conts[i], Cmv::Inact))
        };
        let recv = |on: &Name, i: usize, conts: &mut Vec<Cmv>| {
            let z = bs[i].bound_var().expect("receive binds");
            Cmv::inp(Qual::Lin, on, &phi(z), std::mem::replace(&mut conts[i], Cmv::Inact))
        };

        let body = match case {
            Case::LinInt => {
                let mut opts = Vec::new();
                for g in &groups {
                    if !g.sends.is_empty() {
                        let ps = g.sends.iter().map(|&i| send(&y, i, &mut conts)).collect();
                        opts.push(Cmv::sel(&y, g.label.mangled(Pol::Out), nd_choice(ps, &mut self.fresh)));
                    }
                    if !g.recvs.is_empty() {
                        let ps = g.recvs.iter().map(|&i| recv(&y, i, &mut conts)).collect();
                        opts.push(Cmv::sel(&y, g.label.mangled(Pol::In), nd_choice(ps, &mut self.fresh)));
                    }
                }
                nd_labeled(START_STEM, opts, &mut self.fresh)
            }
            Case::LinExt | Case::LinOnUnExt | Case::UnExt => {
                let on = if case == Case::LinExt { y.clone() } else { self.fresh.reserved("c") };
                let mut m = BTreeMap::new();
                for g in &groups {
                    if !g.sends.is_empty() {
                        let ps = g.sends.iter().map(|&i| send(&on, i, &mut conts)).collect();
                        m.insert(g.label.mangled(Pol::In), nd_choice(ps, &mut self.fresh));
                    }
                    if !g.recvs.is_empty() {
                        let ps = g.recvs.iter().map(|&i| recv(&on, i, &mut conts)).collect();
                        m.insert(g.label.mangled(Pol::Out), nd_choice(ps, &mut self.fresh));
                    }
                }
                let branch = Cmv::Branch(on.clone(), m);
                if case == Case::LinExt {
                    branch
                } else {
                    Cmv::inp(Qual::Lin, &y, &on, branch)
                }
            }
            Case::LinOnUnInt | Case::UnInt => {
                let ann = match declared.unfold() {
                    SessionType::Mix(_, v, tbs) => carrier(v, &tbs),
                    _ => unreachable!(),
                };
                let mut opts = Vec::new();
                for g in &groups {
                    for (pol, idx) in [(Pol::Out, &g.sends), (Pol::In, &g.recvs)] {
                        if idx.is_empty() {
                            continue;
                        }
                        let c = self.fresh.reserved("c");
                        let dd = self.fresh.reserved("d");
                        let ps = idx
                            .iter()
                            .map(|&i| if pol == Pol::Out { send(&dd, i, &mut conts) } else { recv(&dd, i, &mut conts) })
                            .collect();
                        let inner = Cmv::sel(&dd, g.label.mangled(pol), nd_choice(ps, &mut self.fresh));
                        opts.push(Cmv::res(&c, &dd, Some(ann.clone()), Cmv::out(&y, Value::Name(c.clone()), inner)));
                    }
                }
                nd_labeled(START_STEM, opts, &mut self.fresh)
            }
        };

        let term = match rearm {
            None => body,
            Some((u, v)) => {
                let ut = SessionType::rec("t", SessionType::com(Qual::Un, Pol::Out, SessionType::Unit, SessionType::var("t")));
                let waiting = Cmv::inp(Qual::Un, &v, &Name::plain("_"), body);
                Cmv::res(&u, &v, Some(ut), Cmv::Par(vec![Cmv::out(&u, Value::Unit, Cmv::Inact), waiting]))
            }
        };
        self.prov.push(Provenance {
            case,
            endpoint: x.clone(),
            source: Mix::Choice(q, x.clone(), bs.to_vec()).to_string(),
            fresh: (from, self.fresh.peek()),
        });
        Ok(term)
    }
}

/// Encode a well-typed mixed-session process.
pub fn encode(g: &TyCtx, p: &Mix) -> Result<Encoding, EncodeError> {
    let derivation = check_mix(g, p)?;
    encode_derivation(g, p, derivation)
}

pub fn encode_derivation(g: &TyCtx, p: &Mix, derivation: Derivation) -> Result<Encoding, EncodeError> {
    let mut enc = Encoder { fresh: Fresh::new(), prov: Vec::new() };
    let term = enc.proc(&derivation)?;
    Ok(Encoding { source: p.clone(), source_ctx: g.clone(), derivation, ctx: encode_ctx(g), term, provenance: enc.prov })
}

/// Steps of an encoding that commit to a source behaviour: picking an option
/// of the gadget in front of an internal choice, and conditionals.
pub fn is_starting_step(l: &StepLabel) -> bool {
    match l.kind {
        StepKind::IfTrue | StepKind::IfFalse => true,
        StepKind::Case => l
            .sides
            .iter()
            .any(|s| s.label.as_ref().is_some_and(|lb| lb.mangle.is_none() && lb.text.starts_with(START_STEM))),
        _ => false,
    }
}

fn map_kids(p: &Cmv, f: &mut dyn FnMut(&Cmv) -> Cmv) -> Cmv {
    match p {
        Cmv::Out(x, v, k) => Cmv::Out(x.clone(), v.clone(), Box::new(f(k))),
        Cmv::In(q, x, y, k) => Cmv::In(*q, x.clone(), y.clone(), Box::new(f(k))),
        Cmv::Sel(x, l, k) => Cmv::Sel(x.clone(), l.clone(), Box::new(f(k))),
        Cmv::Branch(x, m) => Cmv::Branch(x.clone(), m.iter().map(|(l, k)| (l.clone(), f(k))).collect()),
        Cmv::If(e, a, b) => Cmv::If(e.clone(), Box::new(f(a)), Box::new(f(b))),
        other => other.clone(),
    }
}

fn mentions(p: &Cmv, names: &[Name]) -> bool {
    let fv = p.free_names();
    names.iter().any(|n| fv.contains(n))
}

/// A gadget with one option, whose commit is the only thing it can do.
fn singleton(g: &Group<SessionType>, a: &Cmv, b: &Cmv) -> Option<Cmv> {
    let (Cmv::Branch(s, m), Cmv::Sel(t, l, k)) = (a, b) else { return None };
    if **k != Cmv::Inact || m.len() != 1 || s == t || !g.names.contains(s) || !g.names.contains(t) {
        return None;
    }
    let (l2, p) = m.iter().next()?;
    (l2 == l && !mentions(p, &g.names)).then(|| p.clone())
}

/// Restriction groups whose only uses are inert selections on one endpoint.
fn is_junk(g: &Group<SessionType>, users: &[&Cmv]) -> bool {
    let mut subj: BTreeSet<&Name> = BTreeSet::new();
    for a in users {
        match a {
            Cmv::Sel(x, _, k) if **k == Cmv::Inact && !mentions(k, &g.names) => {
                subj.insert(x);
            }
            _ => return false,
        }
    }
    subj.len() <= 1
}

fn tidy_block(p: &Cmv, fresh: &mut Fresh, settle: bool, gc: bool) -> Cmv {
    let mut groups = Vec::new();
    let mut atoms = Vec::new();
    p.clone().flatten(fresh, &mut groups, &mut atoms);
    let mut atoms: Vec<Cmv> = atoms.iter().map(|a| map_kids(a, &mut |k| tidy_block(k, fresh, settle, gc))).collect();
    loop {
        let mut changed = false;
        let mut gi = 0;
        while gi < groups.len() {
            let g = &groups[gi];
            let users: Vec<usize> = (0..atoms.len()).filter(|&i| mentions(&atoms[i], &g.names)).collect();
            if gc && is_junk(g, &users.iter().map(|&i| &atoms[i]).collect::<Vec<_>>()) {
                for &i in users.iter().rev() {
                    atoms.remove(i);
                }
                groups.remove(gi);
                changed = true;
                continue;
            }
            if settle && users.len() == 2 {
                let (a, b) = (&atoms[users[0]], &atoms[users[1]]);
                if let Some(k) = singleton(g, a, b).or_else(|| singleton(g, b, a)) {
                    atoms.remove(users[1]);
                    atoms.remove(users[0]);
                    groups.remove(gi);
                    k.flatten(fresh, &mut groups, &mut atoms);
                    changed = true;
                    continue;
                }
            }
            gi += 1;
        }
        if !changed {
            break;
        }
    }
    Cmv::build(groups, atoms)
}

fn tidy(p: &Cmv, settle: bool, gc: bool) -> Cmv {
    // Temporaries from one shared supply cannot capture each other.
    let mut fresh = Fresh::new();
    canonicalize(&tidy_block(&canonicalize(p), &mut fresh, settle, gc))
}

/// Drop garbage left behind by committed gadgets: `(νyz)(Π y◁l_i.0) ≡ 0`.
pub fn gc_junk(p: &Cmv) -> Cmv {
    tidy(p, false, true)
}

/// Collapse every one-option gadget to its option.
pub fn settle(p: &Cmv) -> Cmv {
    tidy(p, true, false)
}

/// Canonical form modulo garbage and one-option gadgets.
pub fn normal_key(p: &Cmv) -> Cmv {
    tidy(p, true, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_cmv, parse_mix, parse_type};
    use crate::reduce::steps_cmv;
    use crate::types::check_cmv;
    use std::collections::HashSet;

    #[test]
    fn nd_choice_reaches_each_option() {
        for n in [1usize, 2, 3, 5] {
            let opts: Vec<Cmv> = (0..n).map(|i| parse_cmv(&format!("o{i}!unit")).unwrap()).collect();
            let mut f = Fresh::new();
            let p = nd_choice(opts.clone(), &mut f);
            let steps = steps_cmv(&p);
            assert_eq!(steps.len(), n);
            let got: HashSet<Cmv> = steps.iter().map(|s| gc_junk(&s.target)).collect();
            let want: HashSet<Cmv> = opts.iter().map(canonicalize).collect();
            assert_eq!(got, want, "n = {n}");
        }
    }

    #[test]
    fn nd_choice_report() {
        for n in [1usize, 2, 3, 5] {
            let r = check_nd_choice(n, crate::lts::Bounds::default());
            assert!(r.ok(), "{r:?}");
        }
    }

    #[test]
    fn type_translation() {
        let t = parse_type("lin +{l!bool.end, l?unit.end}").unwrap();
        assert_eq!(encode_type(&t).to_string(), parse_type("lin +{l$snd: lin !bool.end, l$rcv: lin ?unit.end}").unwrap().to_string());
        let u = parse_type("rec t. un +{l!bool.t}").unwrap();
        assert_eq!(encode_type(&u), parse_type("rec t. un !(lin &{l$snd: lin ?bool.end}).t").unwrap());
    }

    #[test]
    fn lin_lin_encoding_typechecks() {
        let p = parse_mix("(new x y) (lin x(l!true.0 + m?(z).0) | lin y(l?(w).0 + m!false.0))").unwrap();
        let e = encode(&TyCtx::new(), &p).unwrap();
        check_cmv(&e.ctx, &e.term).unwrap().replay().unwrap();
        let cases: Vec<Case> = e.provenance.iter().map(|p| p.case).collect();
        assert!(cases.contains(&Case::LinInt) && cases.contains(&Case::LinExt));
    }

    #[test]
    fn settle_and_gc() {
        let mut f = Fresh::new();
        let p = nd_choice(vec![parse_cmv("a!unit").unwrap()], &mut f);
        assert_eq!(settle(&p), canonicalize(&parse_cmv("a!unit").unwrap()));
        let junk = parse_cmv("(new s t) (t<+opt2 | t<+opt3) | b!true").unwrap();
        assert_eq!(gc_junk(&junk), canonicalize(&parse_cmv("b!true").unwrap()));
        let live = parse_cmv("(new s t) (t<+opt2 | s>>{opt2: 0})").unwrap();
        assert_eq!(gc_junk(&live), canonicalize(&live));
    }
}
