use clap::{Args, Parser, Subcommand, ValueEnum};
use mixsess_core::canon::canonicalize;
use mixsess_core::corpus::{load_mixed, ENCODING_CORPUS};
use mixsess_core::encode::encode;
use mixsess_core::equiv::{coupled_sim, weak_bisim, RelationResult, Verdict};
use mixsess_core::examples;
use mixsess_core::lts::{explore, Bounds, Lts};
use mixsess_core::oc::{certify, check_worked_example, OcOptions, OcVerdict};
use mixsess_core::parse::{parse_file, SourceFile};
use mixsess_core::patterns::{
    check_symmetry, confluence_check, confluence_random, detect_m_lts, detect_star_lts, electoral_check,
    enumerate_mixed, EnumBounds,
};
use mixsess_core::reduce::Process;
use mixsess_core::syntax::{Calculus, Term};
use mixsess_core::types::{check_cmv, check_mix, Derivation, TyCtx, TypeError};
use serde_json::{json, Value};
use std::io::Read;
use std::process::ExitCode;

/// Workbench for the pi-calculus, mixed sessions and classic sessions.
///
/// A FILE argument is a path, `-` for standard input, or one of the built-in
/// examples `@election`, `@star`, `@mixed-m`, `@translation`,
/// `@translation-s2`.
#[derive(Parser)]
#[command(name = "mixsess", version)]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Opts {
    /// Calculus of inputs without a `#calculus` line.
    #[arg(long, global = true)]
    calculus: Option<Calculus>,
    #[arg(long, global = true, default_value_t = 12)]
    depth: usize,
    #[arg(long = "max-states", global = true, default_value_t = 20_000)]
    max_states: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<std::path::PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and pretty-print a term with its canonical form.
    Parse { file: String },
    /// Type a mixed-session or classic-session term and print the derivation.
    Typecheck { file: String },
    /// List the one-step reductions.
    Step { file: String },
    /// Explore the state space within the bounds.
    Explore { file: String },
    /// Translate a mixed-session term into classic sessions.
    Encode { file: String },
    /// Weak barbed bisimilarity of two terms.
    Bisim { left: String, right: String },
    /// Coupled similarity of two terms.
    Coupledsim { left: String, right: String },
    /// Search the state space for a synchronisation pattern.
    Pattern {
        pattern: PatternKind,
        /// Omit with `--enumerate`.
        file: Option<String>,
        /// Search all small well-typed mixed-session networks instead.
        #[arg(long)]
        enumerate: bool,
        #[arg(long = "max-components", default_value_t = 5)]
        max_components: usize,
    },
    /// Close diamonds of co-initial steps, in one term or in random networks.
    Confluence {
        file: Option<String>,
        /// Number of diamonds to check on random networks.
        #[arg(long, default_value_t = 1000)]
        count: usize,
    },
    /// Check that every maximal run announces exactly one leader.
    Election { file: Option<String> },
    /// Certify the encoding on one term or a corpus.
    OcCheck {
        file: Option<String>,
        /// A corpus file of `==== name` entries; the built-in one by default.
        #[arg(long)]
        corpus: Option<String>,
        #[arg(long, default_value_t = 100)]
        renamings: usize,
        /// Walk the translation of `@translation` through its intermediate states.
        #[arg(long = "worked-example")]
        worked_example: bool,
    },
    /// Export the explored state space.
    Export {
        file: String,
        #[arg(long, conflicts_with = "json")]
        dot: bool,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PatternKind {
    M,
    Star,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Status {
    Ok,
    Violated,
    Unknown,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Violated => 1,
            Status::Unknown => 3,
        }
    }

    fn of_verdict(v: Verdict) -> Status {
        match v {
            Verdict::Related => Status::Ok,
            Verdict::NotRelated => Status::Violated,
            Verdict::UnknownBounded => Status::Unknown,
        }
    }

    fn of_oc(v: OcVerdict) -> Status {
        match v {
            OcVerdict::Pass => Status::Ok,
            OcVerdict::Fail => Status::Violated,
            OcVerdict::UnknownBounded => Status::Unknown,
        }
    }

    fn check(ok: bool, complete: bool) -> Status {
        match (ok, complete) {
            (true, _) => Status::Ok,
            (false, true) => Status::Violated,
            (false, false) => Status::Unknown,
        }
    }
}

enum Output {
    Json(Value),
    Text(String),
}

type Outcome = Result<(Status, Output), String>;

fn read_input(arg: &str, calculus: Option<Calculus>) -> Result<SourceFile, String> {
    let text = match arg {
        "@election" => examples::LEADER_ELECTION.to_string(),
        "@star" => examples::PI_STAR.to_string(),
        "@mixed-m" => examples::MIXED_M.to_string(),
        "@translation" => examples::TRANSLATION.to_string(),
        "@translation-s2" => examples::TRANSLATION_S2.to_string(),
        "-" => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map_err(|e| format!("stdin: {e}"))?;
            s
        }
        path if path.starts_with('@') => return Err(format!("unknown built-in example `{path}`")),
        path => std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?,
    };
    parse_file(&text, calculus).map_err(|e| format!("{arg}:{e}"))
}

fn derivation_json(d: Result<Derivation, TypeError>) -> (Status, Value) {
    match d {
        Ok(d) => {
            let replay = d.replay();
            let status = if replay.is_ok() { Status::Ok } else { Status::Violated };
            (
                status,
                json!({
                    "well_typed": true,
                    "skeleton": d.skeleton(),
                    "replayed": replay.is_ok(),
                    "derivation": d.to_json(),
                }),
            )
        }
        Err(e) => (Status::Violated, json!({ "well_typed": false, "error": e.to_string() })),
    }
}

fn steps_json<P: Process>(p: &P) -> Value {
    let steps: Vec<Value> = p
        .steps()
        .into_iter()
        .map(|s| {
            json!({
                "label": s.label.to_string(),
                "kind": s.label.kind,
                "consumed": s.label.consumed,
                "channel": s.label.channel,
                "target": s.target.to_string(),
            })
        })
        .collect();
    json!({ "term": canonicalize(p).to_string(), "barbs": p.barbs(), "steps": steps })
}

fn lts_summary<P: Process>(lts: &Lts<P>) -> Value {
    json!({
        "states": lts.len(),
        "edges": lts.edges.len(),
        "complete": lts.complete,
        "deadlocks": lts.deadlocks(),
        "acyclic": lts.is_acyclic(),
        "lts": lts.to_json(),
    })
}

fn relation(r: RelationResult) -> (Status, Output) {
    (Status::of_verdict(r.verdict), Output::Json(json!(r)))
}

fn relate<P: Process>(p: &P, q: &P, bounds: Bounds, coupled: bool) -> RelationResult {
    if coupled {
        coupled_sim(p, q, bounds)
    } else {
        weak_bisim(p, q, bounds)
    }
}

fn pair(left: &str, right: &str, o: &Opts, coupled: bool) -> Outcome {
    let (a, b) = (read_input(left, o.calculus)?.term, read_input(right, o.calculus)?.term);
    let bounds = Bounds::new(o.depth, o.max_states);
    match (a, b) {
        (Term::Pi(p), Term::Pi(q)) => Ok(relation(relate(&p, &q, bounds, coupled))),
        (Term::Mix(p), Term::Mix(q)) => Ok(relation(relate(&p, &q, bounds, coupled))),
        (Term::Cmv(p), Term::Cmv(q)) => Ok(relation(relate(&p, &q, bounds, coupled))),
        (a, b) => Err(format!("cannot compare a {} term with a {} term", a.calculus(), b.calculus())),
    }
}

/// Run `$e` with `$p` bound to the process, whatever its calculus.
macro_rules! on_term {
    ($t:expr, $p:ident => $e:expr) => {
        match $t {
            Term::Pi($p) => $e,
            Term::Mix($p) => $e,
            Term::Cmv($p) => $e,
        }
    };
}

fn pattern<P: Process>(p: &P, kind: PatternKind, bounds: Bounds) -> (Status, Output) {
    let lts = explore(p, bounds);
    let w = match kind {
        PatternKind::M => detect_m_lts(&lts),
        PatternKind::Star => detect_star_lts(&lts),
    };
    // an absent pattern is only certain on a complete exploration
    let status = if w.is_some() || lts.complete { Status::Ok } else { Status::Unknown };
    (status, Output::Json(json!({ "found": w.is_some(), "witness": w, "states": lts.len(), "complete": lts.complete })))
}

fn oc_corpus(entries: Vec<(String, TyCtx, mixsess_core::syntax::mix::Mix)>, opts: OcOptions) -> Outcome {
    let mut status = OcVerdict::Pass;
    let mut out = Vec::new();
    for (name, g, s) in entries {
        let typed = encode(&g, &s).map(|e| check_cmv(&e.ctx, &e.term).is_ok()).map_err(|e| format!("{name}: {e}"))?;
        let cert = certify(&g, &s, opts).map_err(|e| format!("{name}: {e}"))?;
        let v = if typed { cert.verdict } else { OcVerdict::Fail };
        status = status.and(v);
        out.push(json!({ "name": name, "verdict": v, "target_typechecks": typed, "certificate": cert }));
    }
    Ok((Status::of_oc(status), Output::Json(json!({ "terms": out.len(), "verdict": status, "results": out }))))
}

fn run(cli: Cli) -> Outcome {
    let o = cli.opts;
    let bounds = Bounds::new(o.depth, o.max_states);
    match cli.cmd {
        Cmd::Parse { file } => {
            let f = read_input(&file, o.calculus)?;
            let canon = on_term!(&f.term, p => canonicalize(p).to_string());
            Ok((
                Status::Ok,
                Output::Json(json!({
                    "calculus": f.calculus,
                    "free": f.free,
                    "term": f.term.to_string(),
                    "canonical": canon,
                    "free_names": f.term.free_names(),
                })),
            ))
        }
        Cmd::Typecheck { file } => {
            let f = read_input(&file, o.calculus)?;
            let (status, mut v) = match &f.term {
                Term::Mix(p) => derivation_json(check_mix(&f.free, p)),
                Term::Cmv(p) => derivation_json(check_cmv(&f.free, p)),
                Term::Pi(_) => return Err("the pi-calculus is untyped".into()),
            };
            v["calculus"] = json!(f.calculus);
            Ok((status, Output::Json(v)))
        }
        Cmd::Step { file } => {
            let f = read_input(&file, o.calculus)?;
            Ok((Status::Ok, Output::Json(on_term!(&f.term, p => steps_json(p)))))
        }
        Cmd::Explore { file } => {
            let f = read_input(&file, o.calculus)?;
            let (complete, v) = on_term!(&f.term, p => {
                let l = explore(p, bounds);
                (l.complete, lts_summary(&l))
            });
            Ok((truncated(complete), Output::Json(v)))
        }
        Cmd::Encode { file } => {
            let f = read_input(&file, o.calculus.or(Some(Calculus::CmvPlus)))?;
            let Term::Mix(p) = &f.term else { return Err(format!("expected a cmv+ term, got {}", f.calculus)) };
            let e = encode(&f.free, p).map_err(|e| e.to_string())?;
            let typed = check_cmv(&e.ctx, &e.term);
            let status = if typed.is_ok() { Status::Ok } else { Status::Violated };
            Ok((
                status,
                Output::Json(json!({
                    "source": e.source.to_string(),
                    "target": e.term.to_string(),
                    "ctx": e.ctx,
                    "provenance": e.provenance,
                    "target_typechecks": typed.is_ok(),
                    "target_type_error": typed.err().map(|e| e.to_string()),
                })),
            ))
        }
        Cmd::Bisim { left, right } => pair(&left, &right, &o, false),
        Cmd::Coupledsim { left, right } => pair(&left, &right, &o, true),
        Cmd::Pattern { pattern: kind, file, enumerate, max_components } => {
            if enumerate {
                let r = enumerate_mixed(EnumBounds { max_components, explore: bounds });
                let ok = r.with_star == 0 && r.with_m > 0;
                return Ok((if ok { Status::Ok } else { Status::Violated }, Output::Json(json!(r))));
            }
            let file = file.ok_or("pattern needs a FILE or --enumerate")?;
            let f = read_input(&file, o.calculus)?;
            Ok(on_term!(&f.term, p => pattern(p, kind, bounds)))
        }
        Cmd::Confluence { file, count } => {
            let r = match file {
                None => confluence_random(o.seed, count),
                Some(file) => {
                    let f = read_input(&file, o.calculus)?;
                    on_term!(&f.term, p => confluence_check(&explore(p, bounds), usize::MAX))
                }
            };
            Ok((if r.failures.is_empty() { Status::Ok } else { Status::Violated }, Output::Json(json!(r))))
        }
        Cmd::Election { file } => {
            let builtin = file.is_none();
            let f = read_input(file.as_deref().unwrap_or("@election"), o.calculus)?;
            let Term::Pi(p) = &f.term else { return Err("election needs a pi-calculus network".into()) };
            let r = electoral_check(p, bounds);
            let mut v = json!({ "electoral": r.ok(), "report": r });
            let mut ok = r.ok();
            if builtin {
                let s = check_symmetry(p, &examples::leader_election_rotation());
                ok &= s.symmetric();
                v["symmetric"] = json!(s.symmetric());
                v["symmetry"] = json!(s);
            }
            Ok((Status::check(ok, r.complete), Output::Json(v)))
        }
        Cmd::OcCheck { file, corpus, renamings, worked_example } => {
            let opts = OcOptions { bounds, renamings, seed: o.seed };
            if worked_example {
                let r = check_worked_example(bounds).map_err(|e| e.to_string())?;
                return Ok((Status::check(r.ok(), r.complete), Output::Json(json!({ "ok": r.ok(), "report": r }))));
            }
            let entries = match (file, corpus) {
                (Some(_), Some(_)) => return Err("give either FILE or --corpus".into()),
                (Some(file), None) => {
                    let f = read_input(&file, o.calculus.or(Some(Calculus::CmvPlus)))?;
                    let Term::Mix(p) = f.term else { return Err(format!("expected a cmv+ term, got {}", f.calculus)) };
                    vec![(file, f.free, p)]
                }
                (None, Some(path)) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))?;
                    load_mixed(&text).map_err(|e| format!("{path}: {e}"))?
                }
                (None, None) => load_mixed(ENCODING_CORPUS).map_err(|e| e.to_string())?,
            };
            oc_corpus(entries, opts)
        }
        Cmd::Export { file, dot, json: _ } => {
            let f = read_input(&file, o.calculus)?;
            let (complete, out) = on_term!(&f.term, p => {
                let l = explore(p, bounds);
                (l.complete, export(&l, dot))
            });
            Ok((truncated(complete), out))
        }
    }
}

fn export<P: Process>(l: &Lts<P>, dot: bool) -> Output {
    if dot {
        Output::Text(l.to_dot())
    } else {
        Output::Json(l.to_json())
    }
}

/// Exploration commands succeed but flag a truncated state space.
fn truncated(complete: bool) -> Status {
    if complete {
        Status::Ok
    } else {
        Status::Unknown
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out_path = cli.opts.out.clone();
    match run(cli) {
        Ok((status, out)) => {
            let text = match out {
                Output::Json(v) => serde_json::to_string_pretty(&v).expect("reports serialise") + "\n",
                Output::Text(t) => t,
            };
            let written = match &out_path {
                Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            match written {
                Ok(()) => ExitCode::from(status.code()),
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
