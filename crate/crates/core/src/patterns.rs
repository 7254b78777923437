//! Synchronisation patterns, confluence, symmetry and leader election.
//!
//! Two co-initial steps conflict when they consume a common occurrence and
//! are distributable otherwise. An M is three steps `a # b # c` with `a`
//! and `c` distributable; a ★ is five steps in a cycle of conflicts where
//! non-neighbours are distributable, i.e. an induced pentagon.

use crate::canon::canonicalize;
use crate::lts::{explore, Bounds, Lts};
use crate::name::Name;
use crate::parse::parse_type;
use crate::reduce::{Barb, Process, StepLabel};
use crate::syntax::mix::{Branch, Mix};
use crate::syntax::pi::Pi;
use crate::syntax::{Qual, Value};
use crate::types::{check_mix, SessionType, TyCtx};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::time::Instant;

pub fn conflict_matrix(steps: &[StepLabel]) -> Vec<Vec<bool>> {
    steps.iter().map(|a| steps.iter().map(|b| a.conflicts(b)).collect()).collect()
}

/// Indices `[a, b, c]` of an M among co-initial steps.
pub fn find_m(steps: &[StepLabel]) -> Option<[usize; 3]> {
    let c = conflict_matrix(steps);
    let n = steps.len();
    for b in 0..n {
        for a in 0..n {
            if a == b || !c[a][b] {
                continue;
            }
            for x in a + 1..n {
                if x != b && c[b][x] && !c[a][x] {
                    return Some([a, b, x]);
                }
            }
        }
    }
    None
}

/// Indices of an induced five-cycle of conflicts, in cycle order.
pub fn find_star(steps: &[StepLabel]) -> Option<[usize; 5]> {
    let c = conflict_matrix(steps);
    let n = steps.len();
    let adj = |i: usize, j: usize| i != j && c[i][j];
    for a in 0..n {
        for b in (a + 1)..n {
            if !adj(a, b) {
                continue;
            }
            for cc in (a + 1)..n {
                if cc == b || !adj(b, cc) || adj(a, cc) {
                    continue;
                }
                for d in (a + 1)..n {
                    if d == b || d == cc || !adj(cc, d) || adj(a, d) || adj(b, d) {
                        continue;
                    }
                    for e in (b + 1)..n {
                        if e == cc || e == d || !adj(d, e) || !adj(e, a) || adj(b, e) || adj(cc, e) {
                            continue;
                        }
                        return Some([a, b, cc, d, e]);
                    }
                }
            }
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PatternWitness {
    pub pattern: &'static str,
    pub state: usize,
    pub term: String,
    /// The steps making up the pattern, in pattern order.
    pub steps: Vec<String>,
    /// Interaction channels of those steps.
    pub channels: Vec<Vec<Name>>,
}

fn witness_in<P: Process>(
    lts: &Lts<P>,
    pattern: &'static str,
    find: impl Fn(&[StepLabel]) -> Option<Vec<usize>> + Sync,
) -> Option<PatternWitness> {
    (0..lts.len()).find_map(|s| {
        let labels: Vec<StepLabel> = lts.out_edges(s).map(|e| e.label.clone()).collect();
        find(&labels).map(|ix| PatternWitness {
            pattern,
            state: s,
            term: lts.state(s).to_string(),
            steps: ix.iter().map(|&i| labels[i].to_string()).collect(),
            channels: ix.iter().map(|&i| labels[i].channel.clone()).collect(),
        })
    })
}

pub fn detect_m_lts<P: Process>(lts: &Lts<P>) -> Option<PatternWitness> {
    witness_in(lts, "M", |l| find_m(l).map(|x| x.to_vec()))
}

pub fn detect_star_lts<P: Process>(lts: &Lts<P>) -> Option<PatternWitness> {
    witness_in(lts, "star", |l| find_star(l).map(|x| x.to_vec()))
}

pub fn detect_m<P: Process>(p: &P, bounds: Bounds) -> Option<PatternWitness> {
    detect_m_lts(&explore(p, bounds))
}

pub fn detect_star<P: Process>(p: &P, bounds: Bounds) -> Option<PatternWitness> {
    detect_star_lts(&explore(p, bounds))
}

/// Size limits of the exhaustive search over small mixed-session networks.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EnumBounds {
    /// Parallel choices under one restriction.
    pub max_components: usize,
    pub explore: Bounds,
}

impl Default for EnumBounds {
    fn default() -> EnumBounds {
        EnumBounds { max_components: 5, explore: Bounds::new(6, 2_000) }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EnumReport {
    pub bounds: EnumBounds,
    pub candidates: usize,
    pub well_typed: usize,
    pub states: usize,
    pub with_m: usize,
    pub with_star: usize,
    pub first_m: Option<PatternWitness>,
    pub first_star: Option<PatternWitness>,
    #[serde(skip_serializing)]
    pub millis: u128,
}

/// Endpoint types tried for the single restricted channel.
const ENUM_TYPES: [&str; 6] = [
    "lin +{l!bool.end}",
    "lin +{l!bool.end, l?bool.end}",
    "lin &{l!bool.end, l?bool.end}",
    "un +{l!bool.end, l?bool.end}",
    "rec t. un +{l!bool.t, l?bool.t}",
    "rec t. un +{l!bool.t}",
];

fn enum_components() -> Vec<Mix> {
    let branches = [Branch::send("l", Value::True, Mix::Inact), Branch::send("l", Value::False, Mix::Inact), Branch::recv("l", "z", Mix::Inact)];
    let mut out = Vec::new();
    for ep in ["x", "y"] {
        for q in [Qual::Lin, Qual::Un] {
            for mask in 1u32..8 {
                let bs: Vec<Branch> = (0..3).filter(|i| mask & (1 << i) != 0).map(|i| branches[i].clone()).collect();
                out.push(Mix::Choice(q, Name::parse(ep), bs));
            }
        }
    }
    out
}

fn multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(n, k, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, k, 0, &mut Vec::new(), &mut out);
    out
}

/// Every network `(new x y : T)(C1 | … | Ck)` of single choices on `x`/`y`
/// with `k ≤ max_components`, kept when it typechecks, explored and
/// searched for M and ★ in every reachable state.
pub fn enumerate_mixed(bounds: EnumBounds) -> EnumReport {
    let start = Instant::now();
    let comps = enum_components();
    let types: Vec<SessionType> = ENUM_TYPES.iter().map(|s| parse_type(s).expect("fixed type parses")).collect();
    let mut jobs = Vec::new();
    for k in 2..=bounds.max_components {
        for ms in multisets(comps.len(), k) {
            for t in &types {
                jobs.push((ms.clone(), t.clone()));
            }
        }
    }
    let candidates = jobs.len();
    let results: Vec<Option<(usize, Option<PatternWitness>, Option<PatternWitness>)>> = jobs
        .par_iter()
        .map(|(ms, t)| {
            let body = Mix::Par(ms.iter().map(|&i| comps[i].clone()).collect());
            let p = Mix::res("x", "y", Some(t.clone()), body);
            check_mix(&TyCtx::new(), &p).ok()?;
            let lts = explore(&p, bounds.explore);
            Some((lts.len(), detect_m_lts(&lts), detect_star_lts(&lts)))
        })
        .collect();
    let mut rep = EnumReport {
        bounds,
        candidates,
        well_typed: 0,
        states: 0,
        with_m: 0,
        with_star: 0,
        first_m: None,
        first_star: None,
        millis: 0,
    };
    for (n, m, s) in results.into_iter().flatten() {
        rep.well_typed += 1;
        rep.states += n;
        if m.is_some() {
            rep.with_m += 1;
            rep.first_m = rep.first_m.or(m);
        }
        if s.is_some() {
            rep.with_star += 1;
            rep.first_star = rep.first_star.or(s);
        }
    }
    rep.millis = start.elapsed().as_millis();
    rep
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ConfluenceReport {
    pub terms: usize,
    pub diamonds: usize,
    pub closed: usize,
    /// Co-initial pairs reducing a common choice occurrence: outside the
    /// diamond property, reported but never counted as refutations.
    pub precondition_violations: usize,
    pub failures: Vec<String>,
}

impl ConfluenceReport {
    pub fn all_closed(&self) -> bool {
        self.diamonds == self.closed
    }

    fn absorb(&mut self, other: ConfluenceReport) {
        self.terms += other.terms;
        self.diamonds += other.diamonds;
        self.closed += other.closed;
        self.precondition_violations += other.precondition_violations;
        self.failures.extend(other.failures);
    }
}

/// For each explored state and each pair of distinct co-initial steps,
/// check that the two targets have a common one-step successor. Pairs that
/// share a consumed occurrence do not meet the precondition and are only
/// counted.
pub fn confluence_check<P: Process>(lts: &Lts<P>, limit: usize) -> ConfluenceReport {
    let mut rep = ConfluenceReport { terms: 1, ..Default::default() };
    for s in 0..lts.len() {
        let edges: Vec<_> = lts.out_edges(s).collect();
        for (i, a) in edges.iter().enumerate() {
            for b in &edges[i + 1..] {
                if a.dst == b.dst {
                    continue;
                }
                if a.label.conflicts(&b.label) {
                    rep.precondition_violations += 1;
                    continue;
                }
                if rep.diamonds >= limit {
                    return rep;
                }
                if !lts.expanded[a.dst] || !lts.expanded[b.dst] {
                    continue;
                }
                rep.diamonds += 1;
                let sa: HashSet<usize> = lts.successors(a.dst).collect();
                if lts.successors(b.dst).any(|t| sa.contains(&t)) {
                    rep.closed += 1;
                } else {
                    rep.failures.push(format!("{} : [{}] vs [{}]", lts.state(s), a.label, b.label));
                }
            }
        }
    }
    rep
}

/// A random network over two restricted channels, `(new x1 y1 : T1)(new x2
/// y2 : T2)(C1 | … | Ck)`, each `Ci` a single choice on one of the four
/// endpoints. Not necessarily well typed.
pub fn random_mix(rng: &mut ChaCha8Rng) -> Mix {
    let eps = ["x1", "y1", "x2", "y2"];
    let branches = [Branch::send("l", Value::True, Mix::Inact), Branch::send("l", Value::False, Mix::Inact), Branch::recv("l", "z", Mix::Inact)];
    let k = rng.gen_range(2..=6);
    let parts: Vec<Mix> = (0..k)
        .map(|_| {
            let ep = *eps.choose(rng).unwrap();
            let q = if rng.gen_bool(0.6) { Qual::Lin } else { Qual::Un };
            let mask = rng.gen_range(1u32..8);
            let bs = (0..3).filter(|i| mask & (1 << i) != 0).map(|i| branches[i].clone()).collect();
            Mix::Choice(q, Name::parse(ep), bs)
        })
        .collect();
    let ty = |rng: &mut ChaCha8Rng| parse_type(ENUM_TYPES.choose(rng).unwrap()).expect("fixed type parses");
    let (t1, t2) = (ty(rng), ty(rng));
    Mix::res("x1", "y1", Some(t1), Mix::res("x2", "y2", Some(t2), Mix::Par(parts)))
}

/// Close diamonds on random well-typed networks until `target` have been
/// checked.
pub fn confluence_random(seed: u64, target: usize) -> ConfluenceReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = ConfluenceReport::default();
    let mut tries = 0;
    while rep.diamonds < target && tries < 1000 * target {
        tries += 1;
        let p = random_mix(&mut rng);
        if check_mix(&TyCtx::new(), &p).is_err() {
            continue;
        }
        let lts = explore(&p, Bounds::new(3, 500));
        rep.absorb(confluence_check(&lts, target - rep.diamonds));
    }
    rep
}

/// Top-level restricted names and parallel components, in source order.
pub fn components(p: &Pi) -> (Vec<Name>, Vec<Pi>) {
    fn go(p: &Pi, names: &mut Vec<Name>, out: &mut Vec<Pi>) {
        match p {
            Pi::Res(x, q) => {
                names.push(x.clone());
                go(q, names, out);
            }
            Pi::Par(ps) => ps.iter().for_each(|q| go(q, names, out)),
            q if q.is_nil() => {}
            q => out.push(q.clone()),
        }
    }
    let mut names = Vec::new();
    let mut out = Vec::new();
    go(p, &mut names, &mut out);
    (names, out)
}

/// Components as nodes; each name is a hyperedge on the components where
/// it occurs free.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Hypergraph {
    pub nodes: usize,
    pub edges: BTreeMap<Name, BTreeSet<usize>>,
}

pub fn hypergraph(parts: &[Pi]) -> Hypergraph {
    let mut edges: BTreeMap<Name, BTreeSet<usize>> = BTreeMap::new();
    for (i, c) in parts.iter().enumerate() {
        for n in c.free_names() {
            edges.entry(n).or_default().insert(i);
        }
    }
    Hypergraph { nodes: parts.len(), edges }
}

impl Hypergraph {
    fn edge_multiset(&self, perm: &[usize]) -> Vec<Vec<usize>> {
        let mut es: Vec<Vec<usize>> =
            self.edges.values().map(|e| { let mut v: Vec<usize> = e.iter().map(|&i| perm[i]).collect(); v.sort(); v }).collect();
        es.sort();
        es
    }

    pub fn is_automorphism(&self, perm: &[usize]) -> bool {
        let id: Vec<usize> = (0..self.nodes).collect();
        self.edge_multiset(perm) == self.edge_multiset(&id)
    }

    /// All node permutations preserving the edge multiset (small graphs).
    pub fn automorphisms(&self) -> Vec<Vec<usize>> {
        fn perms(n: usize) -> Vec<Vec<usize>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in perms(n - 1) {
                for i in 0..n {
                    let mut q = p.clone();
                    q.insert(i, n - 1);
                    out.push(q);
                }
            }
            out
        }
        assert!(self.nodes <= 8, "automorphism search is exhaustive");
        let mut all: Vec<Vec<usize>> = perms(self.nodes).into_iter().filter(|p| self.is_automorphism(p)).collect();
        all.sort();
        all
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryReport {
    /// `component_map[i] = j` when renaming component `i` by σ gives `j`.
    pub component_map: Option<Vec<usize>>,
    /// σ maps every hyperedge `n` onto the hyperedge `σ(n)`.
    pub preserves_edges: bool,
    pub automorphism: bool,
    /// Orbit of component 0 under the induced permutation, 1-based.
    pub orbit: Vec<usize>,
    pub automorphism_count: usize,
}

impl SymmetryReport {
    pub fn symmetric(&self) -> bool {
        self.component_map.is_some() && self.preserves_edges && self.automorphism && self.orbit.len() > 1
    }
}

pub fn check_symmetry(p: &Pi, sigma: &[(Name, Name)]) -> SymmetryReport {
    let (_, parts) = components(p);
    let h = hypergraph(&parts);
    let sub: crate::syntax::Subst = sigma.iter().map(|(a, b)| (a.clone(), Value::Name(b.clone()))).collect();
    let canon: Vec<Pi> = parts.iter().map(canonicalize).collect();
    let component_map: Option<Vec<usize>> = parts
        .iter()
        .map(|c| {
            let img = canonicalize(&c.subst(&sub));
            canon.iter().position(|d| *d == img)
        })
        .collect();
    let map_name = |n: &Name| sigma.iter().find(|(a, _)| a == n).map(|(_, b)| b.clone()).unwrap_or_else(|| n.clone());
    let (preserves_edges, automorphism, orbit) = match &component_map {
        Some(m) => {
            let pres = h.edges.iter().all(|(n, e)| {
                let img: BTreeSet<usize> = e.iter().map(|&i| m[i]).collect();
                h.edges.get(&map_name(n)) == Some(&img)
            });
            let mut orbit = vec![0usize];
            let mut cur = m[0];
            while cur != 0 && orbit.len() <= m.len() {
                orbit.push(cur);
                cur = m[cur];
            }
            orbit.sort();
            (pres, h.is_automorphism(m), orbit.into_iter().map(|i| i + 1).collect())
        }
        None => (false, false, vec![]),
    };
    SymmetryReport { component_map, preserves_edges, automorphism, orbit, automorphism_count: h.automorphisms().len() }
}

#[derive(Clone, Debug, Serialize)]
pub struct ElectionReport {
    pub states: usize,
    pub complete: bool,
    pub acyclic: bool,
    /// Maximal executions, as distinct state sequences.
    pub executions: u64,
    /// Leader announced at the end of each execution, sorted.
    pub leaders: Vec<u64>,
    /// Every final state announces exactly one numeral.
    pub single_leader: bool,
    #[serde(skip_serializing)]
    pub millis: u128,
}

impl ElectionReport {
    pub fn ok(&self) -> bool {
        self.complete && self.acyclic && self.single_leader && self.executions > 0
    }
}

/// Explore, count maximal runs to deadlock and read the announced leader of
/// each from the numeral output barb of its final state.
pub fn electoral_check(p: &Pi, bounds: Bounds) -> ElectionReport {
    let start = Instant::now();
    let lts = explore(p, bounds);
    let acyclic = lts.is_acyclic();
    let leader_of = |s: usize| -> Vec<u64> {
        lts.barbs[s]
            .iter()
            .filter_map(|b| match b {
                Barb::Out(n) => n.numeral_value(),
                _ => None,
            })
            .collect()
    };
    let mut executions = 0u64;
    let mut leaders = Vec::new();
    let mut single = true;
    if acyclic {
        // paths per (state, final) over distinct successor states
        let mut memo: Vec<Option<BTreeMap<usize, u64>>> = vec![None; lts.len()];
        fn ends<P: Process>(lts: &Lts<P>, s: usize, memo: &mut Vec<Option<BTreeMap<usize, u64>>>) -> BTreeMap<usize, u64> {
            if let Some(m) = &memo[s] {
                return m.clone();
            }
            let succ: BTreeSet<usize> = lts.successors(s).collect();
            let mut out = BTreeMap::new();
            if succ.is_empty() {
                out.insert(s, 1);
            }
            for t in succ {
                for (f, c) in ends(lts, t, memo) {
                    *out.entry(f).or_insert(0) += c;
                }
            }
            memo[s] = Some(out.clone());
            out
        }
        for (f, c) in ends(&lts, 0, &mut memo) {
            executions += c;
            let ls = leader_of(f);
            if ls.len() != 1 {
                single = false;
            }
            for _ in 0..c {
                leaders.extend(ls.iter().copied());
            }
        }
        leaders.sort();
    }
    ElectionReport {
        states: lts.len(),
        complete: lts.complete,
        acyclic,
        executions,
        leaders,
        single_leader: single,
        millis: start.elapsed().as_millis(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;
    use crate::parse::parse_pi;

    #[test]
    fn star_in_the_pentagon() {
        let w = detect_star(&examples::pi_star(), Bounds::default()).expect("star");
        let mut chans: Vec<String> = w.channels.iter().map(|c| c[0].to_string()).collect();
        chans.sort();
        assert_eq!(chans, ["a", "b", "c", "d", "e"]);
        assert!(detect_m(&examples::pi_star(), Bounds::default()).is_some());
    }

    #[test]
    fn m_in_the_mixed_example() {
        let w = detect_m(&examples::mixed_m(), Bounds::default()).expect("M");
        assert_eq!(w.state, 0);
        assert!(detect_star(&examples::mixed_m(), Bounds::default()).is_none());
    }

    #[test]
    fn no_pattern_without_conflict() {
        let p = parse_pi("a! | a? | b! | b?").unwrap();
        assert!(detect_m(&p, Bounds::default()).is_none());
    }

    #[test]
    fn election_elects() {
        let r = electoral_check(&examples::leader_election(), Bounds::default());
        assert!(r.ok(), "{r:?}");
        assert_eq!(r.executions, 10);
        assert_eq!(r.leaders, vec![1, 1, 2, 2, 3, 3, 4, 4, 5, 5]);
    }

    #[test]
    fn rotation_is_a_symmetry() {
        let r = check_symmetry(&examples::leader_election(), &examples::leader_election_rotation());
        assert!(r.symmetric(), "{r:?}");
        assert_eq!(r.orbit, vec![1, 2, 3, 4, 5]);
        assert_eq!(r.component_map, Some(vec![1, 2, 3, 4, 0]));
    }

    #[test]
    fn small_confluence_run() {
        let r = confluence_random(7, 50);
        assert_eq!(r.diamonds, 50);
        assert!(r.all_closed(), "{:?}", r.failures);
    }

    #[test]
    fn racing_sends_violate_the_precondition() {
        let p = crate::parse::parse_mix("(new x y) (lin x(l!true) | lin x(l!false) | lin y(l?(z)))").unwrap();
        let r = confluence_check(&explore(&p, Bounds::default()), 10);
        assert_eq!((r.diamonds, r.precondition_violations), (0, 1));
    }

    #[test]
    fn tiny_enumeration() {
        let r = enumerate_mixed(EnumBounds { max_components: 3, explore: Bounds::new(4, 200) });
        assert!(r.well_typed > 0);
        assert_eq!(r.with_star, 0);
    }
}
