use mixsess_core::canon::{alpha_eq, canonicalize};
use mixsess_core::corpus::encoding_corpus;
use mixsess_core::encode::encode;
use mixsess_core::equiv::{coupled_sim, weak_bisim, Verdict};
use mixsess_core::lts::{explore, Bounds};
use mixsess_core::name::Name;
use mixsess_core::parse::{parse_cmv, parse_mix, parse_pi};
use mixsess_core::patterns::{confluence_check, random_mix};
use mixsess_core::reduce::{Process, StepKind};
use mixsess_core::syntax::pi::{Prefix, Pi};
use mixsess_core::types::{check_cmv, check_mix, TyCtx};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const NAMES: [&str; 4] = ["a", "b", "e", "f"];

fn name() -> impl Strategy<Value = Name> {
    prop::sample::select(&NAMES[..]).prop_map(Name::parse)
}

fn prefix() -> impl Strategy<Value = Prefix> {
    prop_oneof![
        (name(), name()).prop_map(|(y, z)| Prefix::Out(y, z)),
        (name(), name()).prop_map(|(y, x)| Prefix::In(y, x)),
        Just(Prefix::Tau),
    ]
}

/// Small pi terms; `bang` toggles replication.
fn pi_term(bang: bool) -> impl Strategy<Value = Pi> {
    let leaf = prop_oneof![Just(Pi::nil()), prefix().prop_map(|p| Pi::Sum(vec![(p, Pi::nil())]))];
    leaf.prop_recursive(4, 24, 3, move |inner| {
        let mut arms = vec![
            (prefix(), inner.clone()).prop_map(|(p, q)| Pi::Sum(vec![(p, q)])).boxed(),
            prop::collection::vec((prefix(), inner.clone()), 2..=3).prop_map(Pi::Sum).boxed(),
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Pi::Par).boxed(),
            (name(), inner.clone()).prop_map(|(x, p)| Pi::Res(x, Box::new(p))).boxed(),
        ];
        if bang {
            arms.push(inner.prop_map(|p| Pi::Bang(Box::new(p))).boxed());
        }
        prop::strategy::Union::new(arms)
    })
}

fn fresh_binder(k: u8) -> Name {
    Name::parse(&format!("g{k}"))
}

/// Apply one structural-congruence axiom somewhere inside `p`, steered by
/// `pick`. Returns `None` when the chosen axiom does not apply there.
fn axiom(p: &Pi, pick: &[u8]) -> Option<Pi> {
    let (&here, rest) = pick.split_first()?;
    // descend first when asked
    if here % 3 == 0 {
        match p {
            Pi::Par(ps) if !ps.is_empty() => {
                let i = rest.first().copied().unwrap_or(0) as usize % ps.len();
                let mut ps = ps.clone();
                ps[i] = axiom(&ps[i], rest.get(1..).unwrap_or(&[]))?;
                return Some(Pi::Par(ps));
            }
            Pi::Res(x, q) => return Some(Pi::Res(x.clone(), Box::new(axiom(q, rest)?))),
            Pi::Sum(bs) if !bs.is_empty() => {
                let i = rest.first().copied().unwrap_or(0) as usize % bs.len();
                let mut bs = bs.clone();
                bs[i].1 = axiom(&bs[i].1, rest.get(1..).unwrap_or(&[]))?;
                return Some(Pi::Sum(bs));
            }
            Pi::Bang(q) => return Some(Pi::Bang(Box::new(axiom(q, rest)?))),
            _ => {}
        }
    }
    let k = rest.first().copied().unwrap_or(0);
    match (here / 3) % 7 {
        0 => Some(Pi::Par(vec![p.clone(), Pi::nil()])),
        1 => match p {
            Pi::Par(ps) => Some(Pi::Par(ps.iter().rev().cloned().collect())),
            _ => None,
        },
        2 => match p {
            Pi::Par(ps) if ps.len() >= 2 => {
                let cut = 1 + k as usize % (ps.len() - 1);
                Some(Pi::Par(vec![Pi::Par(ps[..cut].to_vec()), Pi::Par(ps[cut..].to_vec())]))
            }
            _ => None,
        },
        3 => match p {
            Pi::Sum(bs) => Some(Pi::Sum(bs.iter().rev().cloned().collect())),
            _ => None,
        },
        // (nu g) P = P when g is not free
        4 => Some(Pi::Res(fresh_binder(k), Box::new(p.clone()))),
        5 => match p {
            Pi::Res(x, q) => match &**q {
                Pi::Res(y, r) => Some(Pi::Res(y.clone(), Box::new(Pi::Res(x.clone(), r.clone())))),
                // scope extrusion over the components not mentioning x
                Pi::Par(ps) => {
                    let (with, without): (Vec<Pi>, Vec<Pi>) = ps.iter().cloned().partition(|c| c.free_names().contains(x));
                    let mut out = vec![Pi::Res(x.clone(), Box::new(Pi::Par(with)))];
                    out.extend(without);
                    Some(Pi::Par(out))
                }
                _ => None,
            },
            _ => None,
        },
        _ => match p {
            // alpha conversion of a restriction to a fresh name
            Pi::Res(x, q) => {
                let g = fresh_binder(k);
                let sigma = [(x.clone(), mixsess_core::syntax::Value::Name(g.clone()))].into_iter().collect();
                Some(Pi::Res(g, Box::new(q.subst(&sigma))))
            }
            _ => None,
        },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1200))]

    #[test]
    fn canon_respects_congruence_axioms(p in pi_term(true), pick in prop::collection::vec(any::<u8>(), 1..8)) {
        if let Some(q) = axiom(&p, &pick) {
            prop_assert_eq!(canonicalize(&p), canonicalize(&q), "{} vs {}", p, q);
        }
    }

    #[test]
    fn canon_is_idempotent(p in pi_term(true)) {
        let c = canonicalize(&p);
        prop_assert_eq!(canonicalize(&c), c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn pi_print_parse_round_trip(p in pi_term(true)) {
        let back = parse_pi(&p.to_string()).unwrap();
        prop_assert!(alpha_eq(&back, &p), "{} reparsed as {}", p, back);
    }

    #[test]
    fn bisimilar_implies_coupled_similar(p in pi_term(false), q in pi_term(false)) {
        let b = Bounds::new(12, 2000);
        if weak_bisim(&p, &q, b).verdict == Verdict::Related {
            prop_assert_eq!(coupled_sim(&p, &q, b).verdict, Verdict::Related);
        }
        // a term and a congruent rearrangement are always related
        let r = Pi::Par(vec![Pi::nil(), q.clone()]);
        prop_assert_eq!(weak_bisim(&q, &r, b).verdict, Verdict::Related);
    }

    #[test]
    fn random_networks_round_trip_and_step_canonically(seed in any::<u64>()) {
        let p = random_mix(&mut ChaCha8Rng::seed_from_u64(seed));
        let back = parse_mix(&p.to_string()).unwrap();
        prop_assert!(alpha_eq(&back, &p));
        let c = canonicalize(&p);
        prop_assert_eq!(canonicalize(&c), c.clone());
        // congruent terms have the same reducts
        let mut a: Vec<String> = p.steps().into_iter().map(|s| s.target.to_string()).collect();
        let mut b: Vec<String> = c.steps().into_iter().map(|s| s.target.to_string()).collect();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn replication_is_not_unfolded_by_canon() {
    let bang = parse_pi("!a!<b>").unwrap();
    let unfolded = parse_pi("a!<b> | !a!<b>").unwrap();
    assert_ne!(canonicalize(&bang), canonicalize(&unfolded));
}

fn corpus_bounds() -> Bounds {
    Bounds::new(12, 5000)
}

#[test]
fn corpus_round_trips() {
    for (name, g, s) in encoding_corpus() {
        let back = parse_mix(&s.to_string()).unwrap();
        assert!(alpha_eq(&back, &s), "{name}");
        let t = encode(&g, &s).unwrap().term;
        let back = parse_cmv(&t.to_string()).unwrap();
        assert!(alpha_eq(&back, &t), "{name}: {t}");
    }
}

#[test]
fn subject_reduction_on_corpus() {
    for (name, g, s) in encoding_corpus() {
        let lts = explore(&s, corpus_bounds());
        for (i, st) in lts.states().enumerate() {
            assert!(check_mix(&g, st).is_ok(), "{name}: state {i} `{st}` is ill typed");
        }
    }
}

#[test]
fn encoded_subject_reduction_on_corpus() {
    for (name, g, s) in encoding_corpus() {
        let e = encode(&g, &s).unwrap();
        let lts = explore(&e.term, Bounds::new(8, 5000));
        for (i, st) in lts.states().enumerate() {
            assert!(check_cmv(&e.ctx, st).is_ok(), "{name}: target state {i} `{st}` is ill typed");
        }
    }
}

#[test]
fn bisimilar_encoded_pairs_are_coupled_similar() {
    let b = Bounds::new(12, 5000);
    let mut related = 0;
    for (_, g, s) in encoding_corpus() {
        let t = encode(&g, &s).unwrap().term;
        let lts = explore(&t, Bounds::new(2, 50));
        for j in lts.successors(0).collect::<Vec<_>>() {
            let u = lts.state(j).clone();
            let wb = weak_bisim(&t, &u, b).verdict;
            let cs = coupled_sim(&t, &u, b).verdict;
            if wb == Verdict::Related {
                related += 1;
                assert_eq!(cs, Verdict::Related, "{t} vs {u}");
            }
        }
    }
    assert!(related > 0);
}

/// Every session communication in a mixed-session term happens between the
/// two distinct endpoints of one channel, and co-initial communications on
/// disjoint occurrences commute.
#[test]
fn communications_use_both_endpoints_and_commute() {
    let empty = TyCtx::new();
    let mut terms: Vec<_> = encoding_corpus().into_iter().map(|(_, _, s)| s).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    while terms.len() < 400 {
        let p = random_mix(&mut rng);
        if check_mix(&empty, &p).is_ok() {
            terms.push(p);
        }
    }
    let mut pairs = 0;
    for s in &terms {
        let lts = explore(s, corpus_bounds());
        for e in &lts.edges {
            if matches!(e.label.kind, StepKind::LinLin | StepKind::LinUn | StepKind::UnLin | StepKind::UnUn) {
                assert_eq!(e.label.sides.len(), 2);
                assert_eq!(e.label.channel.len(), 2, "{}: {}", lts.state(e.src), e.label);
                assert_ne!(e.label.sides[0].path, e.label.sides[1].path);
            }
        }
        let rep = confluence_check(&lts, usize::MAX);
        assert!(rep.failures.is_empty(), "{:?}", rep.failures);
        pairs += rep.diamonds;
    }
    assert!(pairs > 0);
}
