//! The worked examples used throughout the test-suite and the CLI.

use crate::name::Name;
use crate::parse::{parse_file, parse_mix, parse_pi, parse_type};
use crate::syntax::mix::Mix;
use crate::syntax::pi::Pi;
use crate::syntax::Term;
use crate::types::{SessionType, TyCtx};

/// Five-node leader election in the pi-calculus: two stages of mixed
/// choices, first on `a..e`, then on `v..z`.
pub const LEADER_ELECTION: &str = "\
#calculus pi
#def S1 = e! + a?.(x! + v?.1!)
#def S2 = a! + b?.(y! + w?.2!)
#def S3 = b! + c?.(z! + x?.3!)
#def S4 = c! + d?.(v! + y?.4!)
#def S5 = d! + e?.(w! + z?.5!)
(nu a b c d e v w x y z) (S1 | S2 | S3 | S4 | S5)
";

/// A five-cycle of conflicting steps in the pi-calculus.
pub const PI_STAR: &str = "\
#calculus pi
a! + b?.o_b! | b! + c?.o_c! | c! + d?.o_d! | d! + e?.o_e! | e! + a?.o_a!
";

/// Two pairs of dual mixed choices on one channel.
pub const MIXED_M: &str = "\
#calculus cmv+
(new x y : un +{l!bool.end, l?bool.end}) (
    lin x(l!true.0 + l?(z).0) | lin x(l!false.0 + l?(z).0)
  | lin y(l?(z).0 + l!true.0) | lin y(l?(z).0 + l!false.0))
";

/// Protocol of the observation endpoints `o1..o4`.
pub const OBS_TYPE: &str = "rec t. un +{done!unit.t}";

/// Three choices on one channel, continuations announcing on `o1..o4`.
pub const TRANSLATION: &str = "\
#calculus cmv+
#free o1 : rec t. un +{done!unit.t}
#free o2 : rec t. un +{done!unit.t}
#free o3 : rec t. un +{done!unit.t}
#free o4 : rec t. un +{done!unit.t}
#def S1 = lin o1(done!unit)
#def S2 = lin o2(done!unit)
#def S3 = lin o3(done!unit)
#def S4 = lin o4(done!unit)
(new x y : rec t. un +{l!bool.t, l?bool.t}) (
    lin y(l!false.S1 + l?(z).S2)
  | lin x(l!true + l?(z))
  | lin y(l!false.S3 + l?(z).S4))
";

/// The step of `TRANSLATION` where `true` reaches `S2`.
pub const TRANSLATION_S2: &str = "\
#calculus cmv+
#free o1 : rec t. un +{done!unit.t}
#free o2 : rec t. un +{done!unit.t}
#free o3 : rec t. un +{done!unit.t}
#free o4 : rec t. un +{done!unit.t}
(new x y : rec t. un +{l!bool.t, l?bool.t}) (
    lin o2(done!unit)
  | lin y(l!false.lin o3(done!unit) + l?(z).lin o4(done!unit)))
";

fn pi_of(src: &str) -> Pi {
    match parse_file(src, None).expect("built-in example parses").term {
        Term::Pi(p) => p,
        _ => unreachable!(),
    }
}

fn mix_of(src: &str) -> (TyCtx, Mix) {
    let f = parse_file(src, None).expect("built-in example parses");
    match f.term {
        Term::Mix(p) => (f.free, p),
        _ => unreachable!(),
    }
}

pub fn leader_election() -> Pi {
    pi_of(LEADER_ELECTION)
}

/// The five components of the election network, without the restriction.
pub fn leader_election_components() -> Vec<Pi> {
    [
        "e! + a?.(x! + v?.1!)",
        "a! + b?.(y! + w?.2!)",
        "b! + c?.(z! + x?.3!)",
        "c! + d?.(v! + y?.4!)",
        "d! + e?.(w! + z?.5!)",
    ]
    .iter()
    .map(|s| parse_pi(s).unwrap())
    .collect()
}

/// Names restricted around the election network.
pub fn leader_election_restricted() -> Vec<Name> {
    "a b c d e v w x y z".split(' ').map(Name::parse).collect()
}

/// The rotation `a→b→…→e→a`, `v→w→…→z→v`, `1→2→…→5→1`.
pub fn leader_election_rotation() -> Vec<(Name, Name)> {
    let cycle = |xs: &[&str]| -> Vec<(Name, Name)> {
        (0..xs.len()).map(|i| (Name::parse(xs[i]), Name::parse(xs[(i + 1) % xs.len()]))).collect()
    };
    let mut out = cycle(&["a", "b", "c", "d", "e"]);
    out.extend(cycle(&["v", "w", "x", "y", "z"]));
    out.extend(cycle(&["1", "2", "3", "4", "5"]));
    out
}

pub fn pi_star() -> Pi {
    pi_of(PI_STAR)
}

pub fn mixed_m() -> Mix {
    mix_of(MIXED_M).1
}

pub fn mixed_m_types() -> (SessionType, SessionType) {
    (parse_type("un +{l!bool.end, l?bool.end}").unwrap(), parse_type("un &{l?bool.end, l!bool.end}").unwrap())
}

pub fn translation() -> (TyCtx, Mix) {
    mix_of(TRANSLATION)
}

pub fn translation_s2() -> (TyCtx, Mix) {
    mix_of(TRANSLATION_S2)
}

/// A small mixed-session process used by the help texts.
pub fn tiny_mix() -> Mix {
    parse_mix("(new x y) (lin x(l!true.0) | lin y(l?(z).0))").unwrap()
}
