//! Bounded certifiers for the mixed-to-classic encoding: operational
//! correspondence, barb sensitiveness, divergence reflection, name
//! invariance and structural preservation of distributability.
//!
//! The target side is explored modulo garbage collection of committed
//! gadgets, which keeps the replication loops of unrestricted choices
//! finite-state.

use crate::canon::canonicalize;
use crate::encode::{encode, encode_derivation, gc_junk, is_starting_step, phi, EncodeError};
use crate::equiv::{weak_bisim_classes, Verdict};
use crate::lts::{explore, explore_modulo, Bounds, Edge, Lts};
use crate::name::Name;
use crate::reduce::Barb;
use crate::syntax::cmv::Cmv;
use crate::syntax::mix::Mix;
use crate::syntax::{Subst, Value};
use crate::types::{check_mix, Derivation, Rule, Subject, TyCtx};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OcVerdict {
    Pass,
    Fail,
    UnknownBounded,
}

impl OcVerdict {
    fn from_parts(failed: bool, complete: bool) -> OcVerdict {
        match (failed, complete) {
            (true, true) => OcVerdict::Fail,
            (_, false) => OcVerdict::UnknownBounded,
            (false, true) => OcVerdict::Pass,
        }
    }

    pub fn and(self, other: OcVerdict) -> OcVerdict {
        use OcVerdict::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (UnknownBounded, _) | (_, UnknownBounded) => UnknownBounded,
            _ => Pass,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PathStep {
    pub from: usize,
    pub to: usize,
    pub label: String,
    pub starting: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompletenessFinding {
    pub source_from: usize,
    pub source_to: usize,
    pub source_step: String,
    /// Target state of the emulation, weakly bisimilar to the translated reduct.
    pub target_state: Option<usize>,
    pub emulation: Vec<PathStep>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct SoundnessFinding {
    pub target_state: usize,
    /// Source state whose translation the completion reaches.
    pub source_state: Option<usize>,
    pub completion: Vec<PathStep>,
    /// Whether the completion avoids starting steps.
    pub starting_free: bool,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct OcReport {
    pub source: String,
    pub bounds: Bounds,
    pub source_states: Vec<String>,
    pub source_complete: bool,
    /// Target states, the first being the translation of the source.
    pub target_states: Vec<String>,
    pub target_complete: bool,
    /// Index in `target_states` of the translation of each source state.
    pub translations: Vec<usize>,
    pub completeness: Vec<CompletenessFinding>,
    pub soundness: Vec<SoundnessFinding>,
    pub completeness_verdict: OcVerdict,
    pub soundness_verdict: OcVerdict,
    /// Soundness with completions restricted to non-starting steps.
    pub starting_free_verdict: OcVerdict,
    pub verdict: OcVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

fn path_steps(lts: &Lts<Cmv>, path: &[usize]) -> Vec<PathStep> {
    path.iter()
        .map(|&e| {
            let ed: &Edge = &lts.edges[e];
            PathStep { from: ed.src, to: ed.dst, label: ed.label.to_string(), starting: is_starting_step(&ed.label) }
        })
        .collect()
}

/// The source system and one exploration of the translations of all its
/// states. Emulations run from the translation of each source state, so the
/// depth bound applies per source state rather than to whole runs.
struct Systems {
    src: Lts<Mix>,
    tgt: Lts<Cmv>,
    /// Target index of the translation of each source state.
    ids: Vec<usize>,
}

impl Systems {
    fn new(g: &TyCtx, s: &Mix, bounds: Bounds) -> Result<Systems, EncodeError> {
        // The translation of the term as written, then of each reduct.
        let mut roots = vec![encode(g, s)?.term];
        let src = explore(s, bounds);
        for i in 1..src.len() {
            match encode(g, src.state(i)) {
                Ok(e) => roots.push(e.term),
                Err(e) => {
                    return Err(EncodeError::Unsupported(format!("reduct {} of the source: {e}", src.state(i))));
                }
            }
        }
        let (tgt, ids) = explore_modulo(&roots, bounds, &|p: Cmv| gc_junk(&p));
        Ok(Systems { src, tgt, ids })
    }

    fn complete(&self) -> bool {
        self.src.complete && self.tgt.complete
    }
}

/// Both directions of operational correspondence, up to weak bisimilarity.
pub fn check_operational_correspondence(g: &TyCtx, s: &Mix, bounds: Bounds) -> Result<OcReport, EncodeError> {
    Ok(correspondence(s, &Systems::new(g, s, bounds)?, bounds))
}

fn correspondence(s: &Mix, sys: &Systems, bounds: Bounds) -> OcReport {
    let (src, tgt, ids) = (&sys.src, &sys.tgt, sys.ids.clone());
    let reach = tgt.reach();
    let class = weak_bisim_classes(tgt, &reach);
    let complete = sys.complete();
    let mut witness = None;

    let mut completeness = Vec::new();
    for e in &src.edges {
        // Prefer reaching the translated reduct itself over a bisimilar state.
        let want = class[ids[e.dst]];
        let path = tgt
            .path_by(ids[e.src], |t| t == ids[e.dst], |_| true)
            .or_else(|| tgt.path_by(ids[e.src], |t| class[t] == want, |_| true));
        let verdict = match (&path, complete) {
            (Some(_), true) => Verdict::Related,
            (_, false) => Verdict::UnknownBounded,
            (None, true) => Verdict::NotRelated,
        };
        if verdict == Verdict::NotRelated && witness.is_none() {
            witness = Some(format!("source step {} -> {} ({}) is not emulated", e.src, e.dst, e.label));
        }
        completeness.push(CompletenessFinding {
            source_from: e.src,
            source_to: e.dst,
            source_step: e.label.to_string(),
            target_state: path.as_ref().map(|p| p.last().map_or(ids[e.src], |&l| tgt.edges[l].dst)),
            emulation: path.map(|p| path_steps(tgt, &p)).unwrap_or_default(),
            verdict,
        });
    }

    // Every source state is reachable from the source, so any translation
    // is an admissible end point of a completion.
    let mut good: BTreeMap<u32, usize> = BTreeMap::new();
    for (i, &id) in ids.iter().enumerate() {
        good.entry(class[id]).or_insert(i);
    }
    let mut soundness = Vec::new();
    let mut any_miss = false;
    let mut any_starting = false;
    for t in reach[ids[0]].ones() {
        let free = tgt.path_by(t, |u| good.contains_key(&class[u]), |e| !is_starting_step(&e.label));
        let (path, starting_free) = match free {
            Some(p) => (Some(p), true),
            None => (tgt.path_by(t, |u| good.contains_key(&class[u]), |_| true), false),
        };
        let end = path.as_ref().map(|p| p.last().map_or(t, |&l| tgt.edges[l].dst));
        let verdict = match (&path, complete) {
            (Some(_), true) => Verdict::Related,
            (_, false) => Verdict::UnknownBounded,
            (None, true) => Verdict::NotRelated,
        };
        if path.is_none() {
            any_miss = true;
            if complete && witness.is_none() {
                witness = Some(format!("target state {t} cannot complete to a translated source state: {}", tgt.state(t)));
            }
        } else if !starting_free {
            any_starting = true;
            if complete && witness.is_none() {
                witness = Some(format!("target state {t} needs a starting step to complete: {}", tgt.state(t)));
            }
        }
        soundness.push(SoundnessFinding {
            target_state: t,
            source_state: end.map(|u| good[&class[u]]),
            completion: path.map(|p| path_steps(tgt, &p)).unwrap_or_default(),
            starting_free,
            verdict,
        });
    }

    let completeness_verdict =
        OcVerdict::from_parts(completeness.iter().any(|f| f.verdict != Verdict::Related), complete);
    let soundness_verdict = OcVerdict::from_parts(any_miss, complete);
    let starting_free_verdict = OcVerdict::from_parts(any_miss || any_starting, complete);
    let verdict = completeness_verdict.and(soundness_verdict).and(starting_free_verdict);
    OcReport {
        source: s.to_string(),
        bounds,
        source_states: src.states().map(|p| p.to_string()).collect(),
        source_complete: src.complete,
        target_states: tgt.states().map(|p| p.to_string()).collect(),
        target_complete: tgt.complete,
        translations: ids,
        completeness,
        soundness,
        completeness_verdict,
        soundness_verdict,
        starting_free_verdict,
        verdict,
        witness: if verdict == OcVerdict::Fail { witness } else { None },
    }
}

fn phi_barbs(bs: &BTreeSet<Barb>) -> BTreeSet<Barb> {
    bs.iter()
        .map(|b| match b {
            Barb::In(n) => Barb::In(phi(n)),
            Barb::Out(n) => Barb::Out(phi(n)),
            Barb::End(n) => Barb::End(phi(n)),
        })
        .collect()
}

fn show(bs: &BTreeSet<Barb>) -> Vec<String> {
    bs.iter().map(|b| b.to_string()).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct BarbReport {
    /// Weak barbs of the source, renamed.
    pub source: Vec<String>,
    pub target: Vec<String>,
    /// Immediate barbs. The gadget in front of an internal choice hides the
    /// endpoint until it commits, so these may legitimately differ.
    pub source_now: Vec<String>,
    pub target_now: Vec<String>,
    pub verdict: OcVerdict,
}

/// Weak barbs of the source and of its translation agree up to renaming.
pub fn check_barb_sensitiveness(g: &TyCtx, s: &Mix, bounds: Bounds) -> Result<BarbReport, EncodeError> {
    Ok(barb_sensitiveness(&Systems::new(g, s, bounds)?))
}

fn barb_sensitiveness(sys: &Systems) -> BarbReport {
    let (ls, lt, t0) = (&sys.src, &sys.tgt, sys.ids[0]);
    let ws = phi_barbs(&ls.weak_barbs(&ls.reach())[0]);
    let wt = lt.weak_barbs(&lt.reach())[t0].clone();
    BarbReport {
        source: show(&ws),
        target: show(&wt),
        source_now: show(&phi_barbs(&ls.barbs[0])),
        target_now: show(&lt.barbs[t0]),
        verdict: OcVerdict::from_parts(ws != wt, sys.complete()),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DivergenceReport {
    pub source_divergent: bool,
    pub target_divergent: bool,
    /// A target state on a reachable cycle, when there is one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_cycle: Option<String>,
    pub verdict: OcVerdict,
}

/// An infinite run of the translation implies one of the source.
pub fn check_divergence_reflection(g: &TyCtx, s: &Mix, bounds: Bounds) -> Result<DivergenceReport, EncodeError> {
    Ok(divergence_reflection(&Systems::new(g, s, bounds)?))
}

fn divergence_reflection(sys: &Systems) -> DivergenceReport {
    let (ls, lt, t0) = (&sys.src, &sys.tgt, sys.ids[0]);
    let source_divergent = ls.divergent(&ls.reach(), 0);
    let rt = lt.reach();
    let target_divergent = lt.divergent(&rt, t0);
    let cyc = lt.cyclic_states();
    let target_cycle = rt[t0].ones().find(|u| cyc.contains(u)).map(|u| lt.state(u).to_string());
    DivergenceReport {
        source_divergent,
        target_divergent,
        target_cycle,
        verdict: OcVerdict::from_parts(target_divergent && !source_divergent, sys.complete()),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NameInvarianceFinding {
    pub renaming: BTreeMap<String, String>,
    pub equal: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub left: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub right: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum RenamingError {
    #[error("renaming is not injective on the free names: {0}")]
    NotInjective(String),
    #[error("renaming target `{0}` is reserved for the encoder")]
    Reserved(String),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

/// `⟦Sσ⟧` and `⟦S⟧σ'` have the same canonical text, where `σ'` renames
/// the translated names.
pub fn check_name_invariance(
    g: &TyCtx,
    s: &Mix,
    sigma: &BTreeMap<Name, Name>,
) -> Result<NameInvarianceFinding, RenamingError> {
    let mut free: BTreeSet<Name> = s.free_names();
    free.extend(g.names().cloned());
    let image = |n: &Name| sigma.get(n).cloned().unwrap_or_else(|| n.clone());
    let mut seen = BTreeMap::new();
    for n in &free {
        let m = image(n);
        if m.is_reserved_text() {
            return Err(RenamingError::Reserved(m.to_string()));
        }
        if let Some(prev) = seen.insert(m.clone(), n.clone()) {
            return Err(RenamingError::NotInjective(format!("{prev} and {n} both map to {m}")));
        }
    }
    let on_source: Subst = free.iter().map(|n| (n.clone(), Value::Name(image(n)))).collect();
    let on_target: Subst = free.iter().map(|n| (phi(n), Value::Name(phi(&image(n))))).collect();
    let g2 = TyCtx::from_entries(g.entries().iter().map(|(n, t)| (image(n), t.clone())))
        .map_err(|e| RenamingError::NotInjective(e.to_string()))?;
    let left = canonicalize(&encode(&g2, &s.subst(&on_source))?.term).to_string();
    let right = canonicalize(&encode(g, s)?.term.subst(&on_target)).to_string();
    let equal = left == right;
    Ok(NameInvarianceFinding {
        renaming: sigma.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        equal,
        left: (!equal).then_some(left),
        right: (!equal).then_some(right),
    })
}

/// A random injective renaming of `names` onto plain or indexed names that
/// avoid the encoder's reserved stems.
pub fn random_renaming(names: &BTreeSet<Name>, rng: &mut ChaCha8Rng) -> BTreeMap<Name, Name> {
    const STEMS: [&str; 8] = ["a", "b", "k", "m", "p", "q", "r", "w"];
    let mut used = BTreeSet::new();
    let mut out = BTreeMap::new();
    for n in names {
        loop {
            let stem = STEMS.choose(rng).expect("non-empty");
            let m = match rng.gen_range(0..4) {
                0 => Name::parse(stem),
                _ => Name::parse(&format!("{stem}{}", rng.gen_range(0..10))),
            };
            if used.insert(m.clone()) {
                out.insert(n.clone(), m);
                break;
            }
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct NameInvarianceReport {
    pub seed: u64,
    pub renamings: usize,
    pub equal: usize,
    pub failures: Vec<NameInvarianceFinding>,
    pub verdict: OcVerdict,
}

/// `count` seeded random renamings of the free names.
pub fn check_name_invariance_random(g: &TyCtx, s: &Mix, count: usize, seed: u64) -> Result<NameInvarianceReport, RenamingError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut free = s.free_names();
    free.extend(g.names().cloned());
    let mut rep = NameInvarianceReport { seed, renamings: count, equal: 0, failures: vec![], verdict: OcVerdict::Pass };
    for _ in 0..count {
        let sigma = random_renaming(&free, &mut rng);
        let f = check_name_invariance(g, s, &sigma)?;
        if f.equal {
            rep.equal += 1;
        } else {
            rep.failures.push(f);
        }
    }
    if !rep.failures.is_empty() {
        rep.verdict = OcVerdict::Fail;
    }
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct DistributabilityReport {
    /// Parallel compositions checked, one per `T-Par` node.
    pub pairs: usize,
    pub failures: Vec<String>,
    pub verdict: OcVerdict,
}

/// The translation of every parallel composition in the derivation is the
/// parallel composition of the translations of its parts.
pub fn check_distributability_structural(g: &TyCtx, s: &Mix) -> Result<DistributabilityReport, EncodeError> {
    let d = check_mix(g, s)?;
    let mut rep = DistributabilityReport { pairs: 0, failures: vec![], verdict: OcVerdict::Pass };
    let mut stack = vec![&d];
    while let Some(n) = stack.pop() {
        stack.extend(n.premises.iter());
        if n.rule != Rule::Par {
            continue;
        }
        let whole = encoded(n)?;
        let parts: Vec<Cmv> = n.premises.iter().map(encoded).collect::<Result<_, _>>()?;
        rep.pairs += 1;
        let (a, b) = (canonicalize(&whole), canonicalize(&Cmv::par(parts)));
        if a != b {
            rep.failures.push(format!("{}: {a} vs {b}", n.subject));
        }
    }
    if !rep.failures.is_empty() {
        rep.verdict = OcVerdict::Fail;
    }
    Ok(rep)
}

fn encoded(d: &Derivation) -> Result<Cmv, EncodeError> {
    let Subject::Mix(p) = &d.subject else {
        return Err(EncodeError::Unsupported(format!("not a process judgement: {}", d.subject)));
    };
    Ok(encode_derivation(&d.ctx, p, d.clone())?.term)
}

/// Options of a full certification run.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OcOptions {
    pub bounds: Bounds,
    pub renamings: usize,
    pub seed: u64,
}

impl Default for OcOptions {
    fn default() -> OcOptions {
        OcOptions { bounds: Bounds::default(), renamings: 100, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub correspondence: OcReport,
    pub barbs: BarbReport,
    pub divergence: DivergenceReport,
    pub names: NameInvarianceReport,
    pub distributability: DistributabilityReport,
    pub verdict: OcVerdict,
}

/// All criteria for one source term.
pub fn certify(g: &TyCtx, s: &Mix, opts: OcOptions) -> Result<Certificate, RenamingError> {
    let sys = Systems::new(g, s, opts.bounds)?;
    let correspondence = correspondence(s, &sys, opts.bounds);
    let barbs = barb_sensitiveness(&sys);
    let divergence = divergence_reflection(&sys);
    let names = check_name_invariance_random(g, s, opts.renamings, opts.seed)?;
    let distributability = check_distributability_structural(g, s)?;
    let verdict = correspondence
        .verdict
        .and(barbs.verdict)
        .and(divergence.verdict)
        .and(names.verdict)
        .and(distributability.verdict);
    Ok(Certificate { correspondence, barbs, divergence, names, distributability, verdict })
}

/// Literal intermediate states of the translation of the worked example,
/// in the target's naming: `T1` is the translation with its one-option
/// gadgets collapsed, `T2` has committed the sender to `l$snd`, `T3` has
/// passed the private session to the first receiver, `T4` has finished
/// the exchange on it.
pub const WORKED_TARGETS: [(&str, &str); 4] = [
    (
        "T1",
        "(new n_x n_y : rec t. un !(lin &{l$snd: lin ?bool.end, l$rcv: lin !bool.end}).t) (
           (new s t : un &{init1: end, init2: end}) (
               s>>{init1: (new c d : lin &{l$snd: lin ?bool.end, l$rcv: lin !bool.end}) n_x!c.d<+l$snd.d!true,
                   init2: (new c d : lin &{l$snd: lin ?bool.end, l$rcv: lin !bool.end}) n_x!c.d<+l$rcv.lin d?z}
             | t<+init1 | t<+init2)
         | Y2 | Y4)",
    ),
    (
        "T2",
        "(new n_x n_y : rec t. un !(lin &{l$snd: lin ?bool.end, l$rcv: lin !bool.end}).t) (
           (new c d : lin &{l$snd: lin ?bool.end, l$rcv: lin !bool.end}) n_x!c.d<+l$snd.d!true
         | Y2 | Y4)",
    ),
    (
        "T3",
        "(new n_x n_y : rec t. un !(lin &{l$snd: lin ?bool.end, l$rcv: lin !bool.end}).t) (
           (new c d : lin &{l$snd: lin ?bool.end, l$rcv: lin !bool.end}) (
               c>>{l$snd: lin c?z.O2, l$rcv: c!false.O1} | d<+l$snd.d!true)
         | Y4)",
    ),
    ("T4", "(new n_x n_y : rec t. un !(lin &{l$snd: lin ?bool.end, l$rcv: lin !bool.end}).t) (O2 | Y4)"),
];

fn worked_target(src: &str) -> Result<Cmv, crate::parse::ParseError> {
    let obs = |i: u32| format!("((new c d : lin &{{done$snd: lin ?unit.end}}) n_o{i}!c.d<+done$snd.d!unit)");
    let recv = |a: u32, b: u32| format!("lin n_y?c.c>>{{l$snd: lin c?z.{}, l$rcv: c!false.{}}}", obs(a), obs(b));
    let text = src.replace("Y2", &recv(2, 1)).replace("Y4", &recv(4, 3)).replace("O2", &obs(2)).replace("O1", &obs(1));
    crate::parse::parse_cmv(&text)
}

#[derive(Clone, Debug, Serialize)]
pub struct WorkedMatch {
    pub name: &'static str,
    /// State of the translation's system matching modulo junk and
    /// collapsed one-option gadgets.
    pub state: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WorkedReport {
    pub states: usize,
    pub complete: bool,
    pub matches: Vec<WorkedMatch>,
    pub t3_vs_reduct: Verdict,
    pub t4_vs_reduct: Verdict,
    pub t2_vs_source: Verdict,
    /// `T2` against the translation of each one-step reduct of the source.
    pub t2_vs_successors: Vec<Verdict>,
    #[serde(skip_serializing)]
    pub millis: u128,
}

impl WorkedReport {
    pub fn ok(&self) -> bool {
        self.complete
            && self.matches.iter().all(|m| m.state.is_some())
            && self.t3_vs_reduct == Verdict::Related
            && self.t4_vs_reduct == Verdict::Related
            && self.t2_vs_source == Verdict::NotRelated
            && !self.t2_vs_successors.is_empty()
            && self.t2_vs_successors.iter().all(|v| *v == Verdict::NotRelated)
    }
}

/// Walk the translation of the worked example through `T1..T4`.
pub fn check_worked_example(bounds: Bounds) -> Result<WorkedReport, EncodeError> {
    use crate::encode::normal_key;
    use crate::equiv::weak_bisim;
    let start = std::time::Instant::now();
    let (g, s) = crate::examples::translation();
    let (g2, s2) = crate::examples::translation_s2();
    let top = encode(&g, &s)?.term;
    let reduct = encode(&g2, &s2)?.term;
    let lts = explore(&top, bounds);
    let keys: Vec<Cmv> = lts.states().map(normal_key).collect();
    let mut found = Vec::new();
    let mut matches = Vec::new();
    for (name, src) in WORKED_TARGETS {
        let t = worked_target(src).map_err(|e| EncodeError::Unsupported(format!("{name}: {e}")))?;
        let k = normal_key(&t);
        let state = keys.iter().position(|x| *x == k);
        found.push(state.map(|i| lts.state(i).clone()).unwrap_or(t));
        matches.push(WorkedMatch { name, state });
    }
    let wb = |a: &Cmv, b: &Cmv| weak_bisim(a, b, bounds).verdict;
    let succ = explore(&s, Bounds::new(1, bounds.max_states));
    let mut t2_vs_successors = Vec::new();
    for e in succ.out_edges(0) {
        t2_vs_successors.push(wb(&found[1], &encode(&g, succ.state(e.dst))?.term));
    }
    Ok(WorkedReport {
        states: lts.len(),
        complete: lts.complete,
        matches,
        t3_vs_reduct: wb(&found[2], &reduct),
        t4_vs_reduct: wb(&found[3], &reduct),
        t2_vs_source: wb(&found[1], &top),
        t2_vs_successors,
        millis: start.elapsed().as_millis(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::translation;
    use crate::parse::parse_mix;

    #[test]
    fn worked_example_walkthrough() {
        let r = check_worked_example(Bounds::default()).unwrap();
        assert!(r.ok(), "{r:?}");
        assert_eq!(r.matches[0].state, Some(0));
    }

    #[test]
    fn nil_passes_vacuously() {
        let r = check_operational_correspondence(&TyCtx::new(), &Mix::Inact, Bounds::default()).unwrap();
        assert_eq!(r.verdict, OcVerdict::Pass);
        assert!(r.completeness.is_empty());
        assert_eq!(r.soundness.len(), 1);
    }

    #[test]
    fn worked_example_corresponds() {
        let (g, s) = translation();
        let r = check_operational_correspondence(&g, &s, Bounds::default()).unwrap();
        assert_eq!(r.verdict, OcVerdict::Pass, "{:?}", r.witness);
        assert!(r.soundness.iter().all(|f| f.starting_free));
        // the translation of the source needs no completion
        assert!(r.soundness.iter().find(|f| f.target_state == 0).unwrap().completion.is_empty());
    }

    #[test]
    fn conditional_is_one_starting_step() {
        let p = parse_mix("(new x y : lin +{l!bool.end}) if true then (lin x(l!true) | lin y(l?(z))) else (lin x(l!false) | lin y(l?(z)))").unwrap();
        let r = check_operational_correspondence(&TyCtx::new(), &p, Bounds::default()).unwrap();
        assert_eq!(r.verdict, OcVerdict::Pass, "{:?}", r.witness);
        let first = r.completeness.iter().find(|f| f.source_from == 0).unwrap();
        assert_eq!(first.emulation.len(), 1);
        assert!(first.emulation[0].starting);
    }

    #[test]
    fn renaming_checks() {
        let (g, s) = translation();
        let mut sigma = BTreeMap::new();
        sigma.insert(Name::parse("o1"), Name::parse("o2"));
        assert!(matches!(check_name_invariance(&g, &s, &sigma), Err(RenamingError::NotInjective(_))));
        sigma.insert(Name::parse("o2"), Name::parse("o1"));
        assert!(check_name_invariance(&g, &s, &sigma).unwrap().equal);
        let r = check_name_invariance_random(&g, &s, 20, 3).unwrap();
        assert_eq!(r.equal, 20);
    }

    #[test]
    fn free_endpoint_barbs_survive() {
        let g = TyCtx::from_entries([(Name::parse("y"), crate::parse::parse_type("lin +{l!bool.end}").unwrap())]).unwrap();
        let p = parse_mix("lin y(l!true)").unwrap();
        let r = check_barb_sensitiveness(&g, &p, Bounds::default()).unwrap();
        assert_eq!(r.verdict, OcVerdict::Pass);
        assert_eq!(r.source, vec!["n_y".to_string()]);
        let d = check_divergence_reflection(&g, &p, Bounds::default()).unwrap();
        assert!(!d.target_divergent);
    }

    #[test]
    fn parallel_is_homomorphic() {
        let (g, s) = translation();
        let r = check_distributability_structural(&g, &s).unwrap();
        assert_eq!(r.pairs, 2);
        assert_eq!(r.verdict, OcVerdict::Pass, "{:?}", r.failures);
    }
}
