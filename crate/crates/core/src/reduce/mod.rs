//! One-step reduction for the three calculi, with step identities.
//!
//! Every engine works on the canonical form of its input. Paths in step
//! labels index the top-level atoms of that canonical form: `[i]` is the
//! `i`-th atom, `[i, c, j]` is atom `j` of copy `c` of the replication at `i`.

pub(crate) mod cmv;
mod mix;
mod pi;

use crate::canon::{canonicalize, Canon, Group};
use crate::name::Name;
use crate::syntax::{Calculus, Label, Path, Pol, Qual};
use serde::Serialize;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::Hash;

pub use cmv::{barbs_cmv, steps_cmv};
pub use mix::{barbs_mix, steps_mix};
pub use pi::{barbs_pi, steps_pi};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    Com,
    Tau,
    LinLin,
    LinUn,
    UnLin,
    UnUn,
    LinCom,
    UnCom,
    Case,
    IfTrue,
    IfFalse,
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepKind::Com => "com",
            StepKind::Tau => "tau",
            StepKind::LinLin => "lin-lin",
            StepKind::LinUn => "lin-un",
            StepKind::UnLin => "un-lin",
            StepKind::UnUn => "un-un",
            StepKind::LinCom => "lin-com",
            StepKind::UnCom => "un-com",
            StepKind::Case => "case",
            StepKind::IfTrue => "if-true",
            StepKind::IfFalse => "if-false",
        })
    }
}

/// One participant of a step.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Side {
    pub path: Path,
    pub subject: Option<Name>,
    pub label: Option<Label>,
    pub pol: Option<Pol>,
    pub qual: Option<Qual>,
    /// Index of the summand or branch used, when the occurrence is a choice.
    pub branch: Option<u32>,
}

impl Side {
    pub(crate) fn at(path: Path) -> Side {
        Side { path, subject: None, label: None, pol: None, qual: None, branch: None }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct StepLabel {
    pub calculus: Calculus,
    pub kind: StepKind,
    /// Occurrences removed or reduced by the step; conflict is overlap here.
    pub consumed: Vec<Path>,
    /// Occurrences of replicated processes that were copied, not consumed.
    pub persistent: Vec<Path>,
    /// The channel (pi) or the two endpoints (sessions) that interact.
    pub channel: Vec<Name>,
    pub sides: Vec<Side>,
}

impl StepLabel {
    pub(crate) fn new(calculus: Calculus, kind: StepKind, sides: Vec<Side>, persistent: Vec<Path>) -> StepLabel {
        let mut consumed: Vec<Path> = sides.iter().map(|s| s.path.clone()).filter(|p| !persistent.contains(p)).collect();
        consumed.sort();
        consumed.dedup();
        let mut channel: Vec<Name> = Vec::new();
        for s in &sides {
            if let Some(n) = &s.subject {
                if !channel.contains(n) {
                    channel.push(n.clone());
                }
            }
        }
        StepLabel { calculus, kind, consumed, persistent, channel, sides }
    }

    /// Two co-initial steps conflict when they consume a common occurrence.
    pub fn conflicts(&self, other: &StepLabel) -> bool {
        self.consumed.iter().any(|p| other.consumed.contains(p))
    }

    fn sort_key(&self) -> (Vec<Path>, Vec<Path>, Vec<Side>, StepKind) {
        (self.consumed.clone(), self.persistent.clone(), self.sides.clone(), self.kind)
    }
}

impl fmt::Display for StepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        for n in &self.channel {
            write!(f, " {n}")?;
        }
        if let Some(l) = self.sides.iter().find_map(|s| s.label.as_ref()) {
            write!(f, " {l}")?;
        }
        Ok(())
    }
}

/// Observable capability on a free name.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Barb {
    /// pi input barb `y`
    In(Name),
    /// pi output barb `ȳ`
    Out(Name),
    /// session endpoint barb
    End(Name),
}

impl Barb {
    pub fn name(&self) -> &Name {
        match self {
            Barb::In(n) | Barb::Out(n) | Barb::End(n) => n,
        }
    }
}

impl fmt::Display for Barb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Barb::In(n) => write!(f, "{n}?"),
            Barb::Out(n) => write!(f, "{n}!"),
            Barb::End(n) => write!(f, "{n}"),
        }
    }
}

impl Serialize for Barb {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step<P> {
    pub label: StepLabel,
    /// Canonical reduct.
    pub target: P,
}

/// What the explorer and the analyses need from a calculus.
pub trait Process: Canon + Eq + Hash + Send + Sync + fmt::Debug + 'static {
    const CALCULUS: Calculus;
    fn steps(&self) -> Vec<Step<Self>>;
    fn barbs(&self) -> BTreeSet<Barb>;
}

impl Process for crate::syntax::pi::Pi {
    const CALCULUS: Calculus = Calculus::Pi;
    fn steps(&self) -> Vec<Step<Self>> {
        steps_pi(self)
    }
    fn barbs(&self) -> BTreeSet<Barb> {
        barbs_pi(self)
    }
}

impl Process for crate::syntax::mix::Mix {
    const CALCULUS: Calculus = Calculus::CmvPlus;
    fn steps(&self) -> Vec<Step<Self>> {
        steps_mix(self)
    }
    fn barbs(&self) -> BTreeSet<Barb> {
        barbs_mix(self)
    }
}

impl Process for crate::syntax::cmv::Cmv {
    const CALCULUS: Calculus = Calculus::Cmv;
    fn steps(&self) -> Vec<Step<Self>> {
        steps_cmv(self)
    }
    fn barbs(&self) -> BTreeSet<Barb> {
        barbs_cmv(self)
    }
}

/// Rebuild from groups and atoms, canonicalise, and sort steps by their
/// consumed paths.
pub(crate) fn finish<P: Canon>(mut raw: Vec<(StepLabel, Vec<Group<P::Ann>>, Vec<P>)>) -> Vec<Step<P>> {
    raw.sort_by_cached_key(|(l, _, _)| l.sort_key());
    raw.into_iter()
        .map(|(label, groups, atoms)| Step { label, target: canonicalize(&P::build(groups, atoms)) })
        .collect()
}
