//! Weak barbed bisimilarity and coupled similarity on bounded LTSs.
//!
//! Both relations are computed on the disjoint union of the two explored
//! systems, using reflexive-transitive reachability for weak moves. When
//! either exploration was truncated the verdict is `UnknownBounded`.

use crate::lts::{explore, Bounds, Lts};
use crate::reduce::{Barb, Process};
use fixedbitset::FixedBitSet;
use serde::Serialize;
use std::collections::{BTreeSet, HashMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Related,
    NotRelated,
    UnknownBounded,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RelationResult {
    pub relation: &'static str,
    pub verdict: Verdict,
    /// Sizes of the left and right systems.
    pub states: (usize, usize),
    /// Why the terms are told apart, when they are.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl RelationResult {
    pub fn related(&self) -> bool {
        self.verdict == Verdict::Related
    }
}

struct Union {
    na: usize,
    reach: Vec<FixedBitSet>,
    wbarbs: Vec<BTreeSet<Barb>>,
    names: Vec<String>,
    complete: bool,
}

fn union<P: Process>(a: &Lts<P>, b: &Lts<P>) -> Union {
    let (na, nb) = (a.len(), b.len());
    let n = na + nb;
    let ra = a.reach();
    let rb = b.reach();
    let mut reach = Vec::with_capacity(n);
    for r in &ra {
        let mut s = FixedBitSet::with_capacity(n);
        s.extend(r.ones());
        reach.push(s);
    }
    for r in &rb {
        let mut s = FixedBitSet::with_capacity(n);
        s.extend(r.ones().map(|i| i + na));
        reach.push(s);
    }
    let mut wbarbs = a.weak_barbs(&ra);
    wbarbs.extend(b.weak_barbs(&rb));
    let names = a.states().map(|p| format!("L: {p}")).chain(b.states().map(|p| format!("R: {p}"))).collect();
    Union { na, reach, wbarbs, names, complete: a.complete && b.complete }
}

fn show_barbs(bs: &BTreeSet<Barb>) -> String {
    let v: Vec<String> = bs.iter().map(|b| b.to_string()).collect();
    format!("{{{}}}", v.join(", "))
}

/// Partition refinement: start from weak-barb classes, split by the set of
/// classes reachable in zero or more steps, until stable.
fn refine(reach: &[FixedBitSet], wbarbs: &[BTreeSet<Barb>]) -> Vec<u32> {
    let mut ids: HashMap<&BTreeSet<Barb>, u32> = HashMap::new();
    let mut block: Vec<u32> = wbarbs
        .iter()
        .map(|bs| {
            let k = ids.len() as u32;
            *ids.entry(bs).or_insert(k)
        })
        .collect();
    let mut count = ids.len();
    loop {
        let mut sig_ids: HashMap<(u32, Vec<u32>), u32> = HashMap::new();
        let next: Vec<u32> = (0..reach.len())
            .map(|s| {
                let mut reach_blocks: Vec<u32> = reach[s].ones().map(|t| block[t]).collect();
                reach_blocks.sort_unstable();
                reach_blocks.dedup();
                let k = sig_ids.len() as u32;
                *sig_ids.entry((block[s], reach_blocks)).or_insert(k)
            })
            .collect();
        let c = sig_ids.len();
        block = next;
        if c == count {
            return block;
        }
        count = c;
    }
}

/// Weak bisimilarity classes of the states of one system. Only meaningful
/// for classes of states whose reachable part was fully expanded.
pub fn weak_bisim_classes<P: Process>(lts: &Lts<P>, reach: &[FixedBitSet]) -> Vec<u32> {
    refine(reach, &lts.weak_barbs(reach))
}

/// Weak barbed bisimilarity of two explored systems, by partition
/// refinement: start from weak-barb classes, split by the set of classes
/// reachable in zero or more steps.
pub fn weak_bisim_lts<P: Process>(a: &Lts<P>, b: &Lts<P>) -> RelationResult {
    let u = union(a, b);
    let (a0, b0) = (0, u.na);
    let block = refine(&u.reach, &u.wbarbs);
    let related = block[a0] == block[b0];
    let witness = if related { None } else { Some(bisim_witness(&u, &block, a0, b0)) };
    let verdict = match (related, u.complete) {
        (_, false) => Verdict::UnknownBounded,
        (true, true) => Verdict::Related,
        (false, true) => Verdict::NotRelated,
    };
    RelationResult { relation: "weak-bisimilarity", verdict, states: (a.len(), b.len()), witness }
}

fn bisim_witness(u: &Union, block: &[u32], a0: usize, b0: usize) -> String {
    if u.wbarbs[a0] != u.wbarbs[b0] {
        return format!(
            "weak barbs differ: left {} vs right {}",
            show_barbs(&u.wbarbs[a0]),
            show_barbs(&u.wbarbs[b0])
        );
    }
    let blocks_of = |s: usize| -> BTreeSet<u32> { u.reach[s].ones().map(|t| block[t]).collect() };
    let (ba, bb) = (blocks_of(a0), blocks_of(b0));
    for (from, mine, theirs) in [(a0, &ba, &bb), (b0, &bb, &ba)] {
        if let Some(t) = u.reach[from].ones().find(|&t| mine.contains(&block[t]) && !theirs.contains(&block[t])) {
            let side = if from == a0 { "left" } else { "right" };
            return format!(
                "{side} reaches a state the other side cannot match: {} with weak barbs {}",
                u.names[t],
                show_barbs(&u.wbarbs[t])
            );
        }
    }
    "classes split by deeper behaviour".to_string()
}

/// Coupled similarity: the largest relation `R` over the union such that
/// `(p, q) ∈ R` implies every `p ⇒ p'` is matched by some `q ⇒ q'` with
/// `(p', q') ∈ R`, some `q ⇒ q''` has `(q'', p) ∈ R`, and the weak barbs
/// of `p` are among those of `q`. The two systems are coupled similar when
/// both initial pairs survive.
pub fn coupled_sim_lts<P: Process>(a: &Lts<P>, b: &Lts<P>) -> RelationResult {
    let u = union(a, b);
    let n = u.reach.len();
    let side = |s: usize| s >= u.na;
    // rel[p] = set of q (on the other side) with (p, q) ∈ R.
    let mut rel: Vec<FixedBitSet> = (0..n)
        .map(|p| {
            let mut row = FixedBitSet::with_capacity(n);
            for q in (0..n).filter(|&q| side(q) != side(p)) {
                if u.wbarbs[p].is_subset(&u.wbarbs[q]) {
                    row.insert(q);
                }
            }
            row
        })
        .collect();
    loop {
        let mut changed = false;
        for p in 0..n {
            let qs: Vec<usize> = rel[p].ones().collect();
            for q in qs {
                let simulates = u.reach[p].ones().all(|p2| !rel[p2].is_disjoint(&u.reach[q]));
                let coupled = u.reach[q].ones().any(|q2| rel[q2].contains(p));
                if !(simulates && coupled) {
                    rel[p].set(q, false);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let (a0, b0) = (0, u.na);
    let fwd = rel[a0].contains(b0);
    let bwd = rel[b0].contains(a0);
    let related = fwd && bwd;
    let witness = if related {
        None
    } else if u.wbarbs[a0] != u.wbarbs[b0] {
        Some(format!("weak barbs differ: left {} vs right {}", show_barbs(&u.wbarbs[a0]), show_barbs(&u.wbarbs[b0])))
    } else if !fwd {
        Some("right does not coupled-simulate left".to_string())
    } else {
        Some("left does not coupled-simulate right".to_string())
    };
    let verdict = match (related, u.complete) {
        (_, false) => Verdict::UnknownBounded,
        (true, true) => Verdict::Related,
        (false, true) => Verdict::NotRelated,
    };
    RelationResult { relation: "coupled-similarity", verdict, states: (a.len(), b.len()), witness }
}

pub fn weak_bisim<P: Process>(p: &P, q: &P, bounds: Bounds) -> RelationResult {
    weak_bisim_lts(&explore(p, bounds), &explore(q, bounds))
}

pub fn coupled_sim<P: Process>(p: &P, q: &P, bounds: Bounds) -> RelationResult {
    coupled_sim_lts(&explore(p, bounds), &explore(q, bounds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_cmv, parse_pi};

    fn wb(a: &str, b: &str) -> Verdict {
        weak_bisim(&parse_pi(a).unwrap(), &parse_pi(b).unwrap(), Bounds::default()).verdict
    }

    fn cs(a: &str, b: &str) -> Verdict {
        coupled_sim(&parse_pi(a).unwrap(), &parse_pi(b).unwrap(), Bounds::default()).verdict
    }

    #[test]
    fn tau_is_invisible() {
        assert_eq!(wb("tau.a!", "a!"), Verdict::Related);
        assert_eq!(wb("tau.tau.a!", "a!"), Verdict::Related);
        assert_eq!(wb("a!", "b!"), Verdict::NotRelated);
    }

    #[test]
    fn preemption_is_observed() {
        // a choice that may lose `b` is not bisimilar to one that always offers it
        assert_eq!(wb("tau.a! + tau.b!", "a! | b!"), Verdict::NotRelated);
        assert_eq!(wb("tau.a! + tau.b!", "tau.a! + tau.b! + tau.(tau.a! + tau.b!)"), Verdict::Related);
    }

    #[test]
    fn gradual_commitment_is_coupled_but_not_bisimilar() {
        let one_shot = "tau.a! + tau.b! + tau.c!";
        let staged = "tau.a! + tau.(tau.b! + tau.c!)";
        assert_eq!(wb(one_shot, staged), Verdict::NotRelated);
        assert_eq!(cs(one_shot, staged), Verdict::Related);
        assert_eq!(cs("a!", "b!"), Verdict::NotRelated);
    }

    #[test]
    fn truncation_is_reported() {
        let p = parse_pi("!tau.a!").unwrap();
        let r = weak_bisim(&p, &p, Bounds::new(2, 100));
        assert_eq!(r.verdict, Verdict::UnknownBounded);
        let junk = parse_cmv("(new s t) (t<+opt1) | o!unit").unwrap();
        let clean = parse_cmv("o!unit").unwrap();
        assert!(weak_bisim(&junk, &clean, Bounds::default()).related());
    }
}
