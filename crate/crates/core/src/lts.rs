//! Bounded labelled transition systems over canonical states.

use crate::canon::canonicalize;
use crate::reduce::{Barb, Process, Step, StepLabel};
use crate::syntax::Calculus;
use fixedbitset::FixedBitSet;
use indexmap::IndexSet;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeSet;
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Bounds {
    pub max_depth: usize,
    pub max_states: usize,
}

impl Default for Bounds {
    fn default() -> Bounds {
        Bounds { max_depth: 12, max_states: 20_000 }
    }
}

impl Bounds {
    pub fn new(max_depth: usize, max_states: usize) -> Bounds {
        Bounds { max_depth, max_states }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub label: StepLabel,
}

/// Answer to a question that a truncated exploration may not settle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tri {
    Yes,
    No,
    Unknown,
}

#[derive(Clone, Debug)]
pub struct Lts<P> {
    pub calculus: Calculus,
    states: IndexSet<P>,
    pub edges: Vec<Edge>,
    pub barbs: Vec<BTreeSet<Barb>>,
    pub depth: Vec<usize>,
    /// Whether all steps of the state are present.
    pub expanded: Vec<bool>,
    pub complete: bool,
    pub bounds: Bounds,
    out: Vec<Vec<usize>>,
}

/// Breadth-first exploration from the canonical form of `p`. Successors of
/// one level are computed in parallel and merged in state order, so the
/// numbering is the same as a sequential run.
pub fn explore<P: Process>(p: &P, bounds: Bounds) -> Lts<P> {
    explore_many(std::slice::from_ref(p), bounds).0
}

/// One exploration shared by several roots, so that states reachable from
/// more than one of them get a single index. Returns the index of each root;
/// the first root is state 0. Depth counts from the nearest root.
pub fn explore_many<P: Process>(roots: &[P], bounds: Bounds) -> (Lts<P>, Vec<usize>) {
    explore_modulo(roots, bounds, &|p: P| p)
}

/// Like [`explore_many`], with every state passed through `norm`, which
/// must return a canonical term of the same behaviour.
pub fn explore_modulo<P: Process>(roots: &[P], bounds: Bounds, norm: &(dyn Fn(P) -> P + Sync)) -> (Lts<P>, Vec<usize>) {
    let mut lts = Lts {
        calculus: P::CALCULUS,
        states: IndexSet::new(),
        edges: Vec::new(),
        barbs: Vec::new(),
        depth: Vec::new(),
        expanded: Vec::new(),
        complete: true,
        bounds,
        out: Vec::new(),
    };
    let mut frontier = Vec::new();
    let mut ids = Vec::with_capacity(roots.len());
    for r in roots {
        let c = norm(canonicalize(r));
        let id = match lts.states.get_index_of(&c) {
            Some(i) => i,
            None => {
                let i = lts.add(c, 0);
                frontier.push(i);
                i
            }
        };
        ids.push(id);
    }
    let mut level = 0;
    while !frontier.is_empty() {
        let succs: Vec<Vec<_>> = frontier
            .par_iter()
            .map(|&s| {
                let steps = lts.states[s].steps().into_iter();
                steps.map(|st| Step { label: st.label, target: norm(st.target) }).collect()
            })
            .collect();
        if level >= bounds.max_depth {
            if succs.iter().any(|v| !v.is_empty()) {
                lts.complete = false;
            }
            for (&s, v) in frontier.iter().zip(&succs) {
                lts.expanded[s] = v.is_empty();
            }
            break;
        }
        let mut next = Vec::new();
        for (&s, steps) in frontier.iter().zip(succs) {
            let mut full = true;
            for st in steps {
                let dst = match lts.states.get_index_of(&st.target) {
                    Some(d) => d,
                    None if lts.states.len() < bounds.max_states => {
                        let d = lts.add(st.target, level + 1);
                        next.push(d);
                        d
                    }
                    None => {
                        full = false;
                        lts.complete = false;
                        continue;
                    }
                };
                lts.out[s].push(lts.edges.len());
                lts.edges.push(Edge { src: s, dst, label: st.label });
            }
            lts.expanded[s] = full;
        }
        frontier = next;
        level += 1;
    }
    (lts, ids)
}

impl<P: Process> Lts<P> {
    fn add(&mut self, p: P, depth: usize) -> usize {
        self.barbs.push(p.barbs());
        let (i, _) = self.states.insert_full(p);
        self.depth.push(depth);
        self.expanded.push(false);
        self.out.push(Vec::new());
        i
    }
}

impl<P: Process> Lts<P> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn initial(&self) -> usize {
        0
    }

    pub fn state(&self, i: usize) -> &P {
        &self.states[i]
    }

    pub fn states(&self) -> impl Iterator<Item = &P> {
        self.states.iter()
    }

    pub fn index_of(&self, p: &P) -> Option<usize> {
        self.states.get_index_of(&canonicalize(p))
    }

    pub fn out_edges(&self, s: usize) -> impl Iterator<Item = &Edge> {
        self.out[s].iter().map(move |&e| &self.edges[e])
    }

    pub fn successors(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        self.out_edges(s).map(|e| e.dst)
    }

    /// Expanded states without outgoing edges.
    pub fn deadlocks(&self) -> Vec<usize> {
        (0..self.len()).filter(|&s| self.expanded[s] && self.out[s].is_empty()).collect()
    }

    fn graph(&self) -> DiGraph<(), ()> {
        let mut g = DiGraph::with_capacity(self.len(), self.edges.len());
        for _ in 0..self.len() {
            g.add_node(());
        }
        for e in &self.edges {
            g.add_edge((e.src as u32).into(), (e.dst as u32).into(), ());
        }
        g
    }

    /// Reflexive-transitive reachability, one bitset per state.
    pub fn reach(&self) -> Vec<FixedBitSet> {
        self.reach_by(|_| true)
    }

    /// Reachability along the edges accepted by `keep` only.
    pub fn reach_by(&self, keep: impl Fn(&Edge) -> bool) -> Vec<FixedBitSet> {
        let n = self.len();
        let mut g = DiGraph::<(), ()>::with_capacity(n, self.edges.len());
        for _ in 0..n {
            g.add_node(());
        }
        for e in self.edges.iter().filter(|e| keep(e)) {
            g.add_edge((e.src as u32).into(), (e.dst as u32).into(), ());
        }
        let mut out = vec![FixedBitSet::with_capacity(n); n];
        // SCCs come sinks first, so successors are done before their sources.
        for scc in tarjan_scc(&g) {
            let mut set = FixedBitSet::with_capacity(n);
            for v in &scc {
                set.insert(v.index());
            }
            for v in &scc {
                for w in self.out_edges(v.index()).filter(|e| keep(e)).map(|e| e.dst) {
                    if !set.contains(w) {
                        set.union_with(&out[w]);
                    }
                }
            }
            for v in &scc {
                out[v.index()] = set.clone();
            }
        }
        out
    }

    /// Barbs reachable from each state (`P ⇓ β`).
    pub fn weak_barbs(&self, reach: &[FixedBitSet]) -> Vec<BTreeSet<Barb>> {
        reach.iter().map(|r| r.ones().flat_map(|t| self.barbs[t].iter().cloned()).collect()).collect()
    }

    /// Does state `s` reach a state with barb `b`? Unknown when the answer
    /// is no within the explored part but some reachable state is unexpanded.
    pub fn weak_barb(&self, reach: &[FixedBitSet], s: usize, b: &Barb) -> Tri {
        if reach[s].ones().any(|t| self.barbs[t].contains(b)) {
            Tri::Yes
        } else if reach[s].ones().all(|t| self.expanded[t]) {
            Tri::No
        } else {
            Tri::Unknown
        }
    }

    /// States lying on a cycle (including self-loops).
    pub fn cyclic_states(&self) -> BTreeSet<usize> {
        let g = self.graph();
        let mut out = BTreeSet::new();
        for scc in tarjan_scc(&g) {
            if scc.len() > 1 {
                out.extend(scc.iter().map(|v| v.index()));
            } else {
                let v = scc[0].index();
                if self.successors(v).any(|w| w == v) {
                    out.insert(v);
                }
            }
        }
        out
    }

    /// Whether state `s` can reach a cycle, i.e. has an infinite run.
    pub fn divergent(&self, reach: &[FixedBitSet], s: usize) -> bool {
        let cyc = self.cyclic_states();
        reach[s].ones().any(|t| cyc.contains(&t))
    }

    pub fn is_acyclic(&self) -> bool {
        self.cyclic_states().is_empty()
    }

    /// A shortest edge path from `from` to `to`, as edge indices.
    pub fn path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        self.path_by(from, |s| s == to, |_| true)
    }

    /// A shortest path from `from` to some state satisfying `goal`, using
    /// only edges accepted by `keep`.
    pub fn path_by(&self, from: usize, goal: impl Fn(usize) -> bool, keep: impl Fn(&Edge) -> bool) -> Option<Vec<usize>> {
        let mut prev: Vec<Option<usize>> = vec![None; self.len()];
        let mut seen = FixedBitSet::with_capacity(self.len());
        let mut queue = std::collections::VecDeque::from([from]);
        seen.insert(from);
        while let Some(s) = queue.pop_front() {
            if goal(s) {
                let mut path = Vec::new();
                let mut cur = s;
                while let Some(e) = prev[cur] {
                    path.push(e);
                    cur = self.edges[e].src;
                }
                path.reverse();
                return Some(path);
            }
            for &e in &self.out[s] {
                let d = self.edges[e].dst;
                if keep(&self.edges[e]) && !seen.contains(d) {
                    seen.insert(d);
                    prev[d] = Some(e);
                    queue.push_back(d);
                }
            }
        }
        None
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct State<'a> {
            id: usize,
            term: String,
            depth: usize,
            expanded: bool,
            barbs: &'a BTreeSet<Barb>,
        }
        let states: Vec<State> = (0..self.len())
            .map(|i| State {
                id: i,
                term: self.states[i].to_string(),
                depth: self.depth[i],
                expanded: self.expanded[i],
                barbs: &self.barbs[i],
            })
            .collect();
        serde_json::json!({
            "calculus": self.calculus,
            "initial": 0,
            "complete": self.complete,
            "bounds": self.bounds,
            "states": states,
            "edges": self.edges,
        })
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph lts {\n  node [shape=box, fontname=\"monospace\"];\n");
        for i in 0..self.len() {
            let barbs: Vec<String> = self.barbs[i].iter().map(|b| b.to_string()).collect();
            let term = self.states[i].to_string();
            let label = format!("{i}: {}\\n{{{}}}", escape(&term), escape(&barbs.join(", ")));
            let style = if i == 0 { ", penwidth=2" } else { "" };
            let _ = writeln!(s, "  s{i} [label=\"{label}\"{style}];");
        }
        for e in &self.edges {
            let _ = writeln!(s, "  s{} -> s{} [label=\"{}\"];", e.src, e.dst, escape(&e.label.to_string()));
        }
        s.push_str("}\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_mix, parse_pi};
    use crate::syntax::pi::Pi;

    #[test]
    fn nil_explores_to_one_state() {
        let l = explore(&Pi::nil(), Bounds::default());
        assert_eq!((l.len(), l.edges.len(), l.complete), (1, 0, true));
        assert_eq!(l.deadlocks(), vec![0]);
    }

    #[test]
    fn un_self_loop_is_divergent() {
        let p = parse_mix("(new y z) (un y(l!true) | un z(l?(x)))").unwrap();
        let l = explore(&p, Bounds::default());
        assert_eq!(l.len(), 1);
        assert!(l.complete);
        let r = l.reach();
        assert!(l.divergent(&r, 0));
    }

    #[test]
    fn bounds_clear_completeness() {
        let p = parse_pi("!tau.a!").unwrap();
        let l = explore(&p, Bounds::new(3, 100));
        assert!(!l.complete);
        let l2 = explore(&p, Bounds::new(100, 2));
        assert!(!l2.complete);
        assert_eq!(l2.len(), 2);
        let r = l2.reach();
        assert_eq!(l2.weak_barb(&r, 0, &Barb::Out("a".into())), Tri::Yes);
        assert_eq!(l2.weak_barb(&r, 0, &Barb::Out("b".into())), Tri::Unknown);
    }

    #[test]
    fn weak_barbs_follow_reachability() {
        let p = parse_pi("(nu a) (a! | a?.b!)").unwrap();
        let l = explore(&p, Bounds::default());
        let r = l.reach();
        let wb = l.weak_barbs(&r);
        assert!(wb[0].contains(&Barb::Out("b".into())));
        assert!(l.barbs[0].is_empty());
        assert!(l.to_dot().contains("s0 -> s1"));
        assert_eq!(l.path(0, 1).unwrap().len(), 1);
    }
}
