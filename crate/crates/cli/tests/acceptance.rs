//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness so the lines come out in order and unfiltered.

use mixsess_core::corpus::encoding_corpus;
use mixsess_core::encode::{check_nd_choice, encode, Case};
use mixsess_core::examples;
use mixsess_core::lts::Bounds;
use mixsess_core::name::Name;
use mixsess_core::oc::{certify, check_worked_example, OcOptions, OcVerdict};
use mixsess_core::patterns::{check_symmetry, confluence_random, detect_star, electoral_check, enumerate_mixed, EnumBounds};
use mixsess_core::syntax::mix::Mix;
use mixsess_core::types::{check_cmv, check_mix, dual, Rule, TyCtx};
use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(start: Instant, limit: Duration) -> Result<Duration, String> {
    let t = start.elapsed();
    if t < limit {
        Ok(t)
    } else {
        Err(format!("took {t:?}, limit {limit:?}"))
    }
}

fn election() -> Check {
    let start = Instant::now();
    let r = electoral_check(&examples::leader_election(), Bounds::default());
    let t = within(start, Duration::from_secs(10))?;
    ensure(
        r.ok() && r.executions == 10 && r.leaders == vec![1, 1, 2, 2, 3, 3, 4, 4, 5, 5],
        format!("{} executions, leaders {:?}, {t:?}", r.executions, r.leaders),
    )
}

fn symmetry() -> Check {
    let start = Instant::now();
    let s = check_symmetry(&examples::leader_election(), &examples::leader_election_rotation());
    let t = within(start, Duration::from_secs(10))?;
    ensure(
        s.symmetric() && s.automorphism && s.orbit == vec![1, 2, 3, 4, 5],
        format!("orbit {:?}, {} automorphisms, {t:?}", s.orbit, s.automorphism_count),
    )
}

fn star_and_m() -> Check {
    let w = detect_star(&examples::pi_star(), Bounds::default()).ok_or("no star in the pi network")?;
    let chans: BTreeSet<Name> = w.channels.iter().flatten().cloned().collect();
    let want: BTreeSet<Name> = ["a", "b", "c", "d", "e"].into_iter().map(Name::parse).collect();
    if chans != want {
        return Err(format!("star on {chans:?}"));
    }
    let start = Instant::now();
    let r = enumerate_mixed(EnumBounds::default());
    let t = within(start, Duration::from_secs(600))?;
    ensure(
        r.with_star == 0 && r.with_m >= 1,
        format!("{} typed networks, {} with M, {} with star, {t:?}", r.well_typed, r.with_m, r.with_star),
    )
}

fn typing() -> Check {
    let (t1, t2) = examples::mixed_m_types();
    let pm = match examples::mixed_m() {
        Mix::Res(x, y, _, body) => Mix::Res(x, y, Some(t1.clone()), body),
        _ => return Err("unexpected shape of the mixed example".into()),
    };
    let d = check_mix(&TyCtx::new(), &pm).map_err(|e| e.to_string())?;
    d.replay().map_err(|e| e.to_string())?;
    let leaves_ok = d.leaves().iter().all(|r| matches!(r, Rule::True | Rule::False | Rule::In | Rule::Out | Rule::Inact));
    ensure(
        d.rule == Rule::Res && d.count_rule(Rule::Par) == 3 && d.count_rule(Rule::Choice) == 4 && leaves_ok && dual(&t1, &t2),
        format!("skeleton {}", d.skeleton()),
    )
}

fn confluence() -> Check {
    let r = confluence_random(42, 1000);
    ensure(
        r.diamonds >= 1000 && r.all_closed() && r.failures.is_empty(),
        format!("{} networks, {}/{} diamonds closed, {} precondition violations", r.terms, r.closed, r.diamonds, r.precondition_violations),
    )
}

fn worked_example() -> Check {
    let start = Instant::now();
    let r = check_worked_example(Bounds::default()).map_err(|e| e.to_string())?;
    let t = within(start, Duration::from_secs(60))?;
    let states: Vec<_> = r.matches.iter().map(|m| (m.name, m.state)).collect();
    ensure(r.ok(), format!("matches {states:?}, T2 vs {} successors, {t:?}", r.t2_vs_successors.len()))
}

fn correspondence() -> Check {
    let corpus = encoding_corpus();
    let mut cases = BTreeSet::new();
    let mut failed = Vec::new();
    for (name, g, s) in &corpus {
        let e = encode(g, s).map_err(|e| format!("{name}: {e}"))?;
        cases.extend(e.provenance.iter().map(|p| p.case));
        let c = certify(g, s, OcOptions::default()).map_err(|e| format!("{name}: {e}"))?;
        let ok = c.verdict == OcVerdict::Pass
            && c.correspondence.starting_free_verdict == OcVerdict::Pass
            && c.names.renamings == 100
            && c.names.equal == 100;
        if !ok {
            failed.push(name.clone());
        }
    }
    let all = [Case::LinInt, Case::LinExt, Case::LinOnUnInt, Case::LinOnUnExt, Case::UnInt, Case::UnExt];
    ensure(
        corpus.len() >= 50 && failed.is_empty() && all.iter().all(|c| cases.contains(c)),
        format!("{} terms, {} cases covered, failing {failed:?}", corpus.len(), cases.len()),
    )
}

fn nd_choice() -> Check {
    let bad: Vec<usize> = [1, 2, 3, 5].into_iter().filter(|&n| !check_nd_choice(n, Bounds::default()).ok()).collect();
    ensure(bad.is_empty(), format!("n in {{1,2,3,5}}, failing {bad:?}"))
}

fn type_preservation() -> Check {
    let corpus = encoding_corpus();
    let mut failed = Vec::new();
    for (name, g, s) in &corpus {
        let e = encode(g, s).map_err(|e| format!("{name}: {e}"))?;
        if check_cmv(&e.ctx, &e.term).and_then(|d| d.replay()).is_err() {
            failed.push(name.clone());
        }
    }
    ensure(failed.is_empty(), format!("{} encoded terms, failing {failed:?}", corpus.len()))
}

fn determinism() -> Check {
    let runs: [&[&str]; 5] = [
        &["confluence", "--count", "200"],
        &["election"],
        &["oc-check", "@translation", "--renamings", "20"],
        &["explore", "@mixed-m"],
        &["pattern", "star", "@star"],
    ];
    for args in runs {
        let once = || {
            Command::new(env!("CARGO_BIN_EXE_mixsess"))
                .args(args)
                .args(["--seed", "17"])
                .output()
                .map_err(|e| e.to_string())
        };
        let (a, b) = (once()?, once()?);
        if a.stdout.is_empty() || a.stdout != b.stdout {
            return Err(format!("`{}` differs between runs", args.join(" ")));
        }
        serde_json::from_slice::<serde_json::Value>(&a.stdout).map_err(|e| format!("`{}`: {e}", args.join(" ")))?;
    }
    Ok(format!("{} commands byte-identical", runs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("leader election", election),
        ("symmetry", symmetry),
        ("star in pi, none in mixed sessions", star_and_m),
        ("typing of the mixed example", typing),
        ("confluence", confluence),
        ("worked translation", worked_example),
        ("bounded operational correspondence", correspondence),
        ("nondeterministic choice gadget", nd_choice),
        ("type preservation", type_preservation),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(d) => println!("PASS {:>2} {name}: {d}", i + 1),
            Err(d) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {d}", i + 1);
            }
        }
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
