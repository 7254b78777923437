//! Names: channels, endpoints, variables, numeric leader ids and the
//! encoder's reserved names.

use serde::{Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

/// Texts the encoder keeps for itself.
pub const RESERVED: [&str; 6] = ["c", "d", "u", "v", "s", "t"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum NameKind {
    Channel,
    Endpoint,
    Variable,
    Numeral,
    Reserved,
}

/// A name is a text plus an optional index; it displays as the text followed
/// by the index digits. Equality ignores `kind`, which is only a hint.
#[derive(Clone, Debug)]
pub struct Name {
    pub kind: NameKind,
    pub text: Arc<str>,
    pub index: Option<u32>,
}

impl Name {
    /// Build a name from its display form. Trailing digits become the index
    /// when that split is reversible (non-empty stem, no leading zero).
    pub fn parse(s: &str) -> Name {
        if !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) {
            return Name { kind: NameKind::Numeral, text: s.into(), index: None };
        }
        let stem_len = s.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        let digits = &s[stem_len..];
        if stem_len > 0 && !digits.is_empty() && (digits == "0" || !digits.starts_with('0')) {
            if let Ok(i) = digits.parse::<u32>() {
                return Name::indexed(&s[..stem_len], i);
            }
        }
        Name::plain(s)
    }

    pub fn plain(text: &str) -> Name {
        Name { kind: guess_kind(text), text: text.into(), index: None }
    }

    pub fn indexed(text: &str, index: u32) -> Name {
        Name { kind: guess_kind(text), text: text.into(), index: Some(index) }
    }

    pub fn numeral(n: u64) -> Name {
        Name { kind: NameKind::Numeral, text: n.to_string().into(), index: None }
    }

    pub fn with_kind(mut self, kind: NameKind) -> Name {
        self.kind = kind;
        self
    }

    pub fn is_numeral(&self) -> bool {
        self.index.is_none() && !self.text.is_empty() && self.text.bytes().all(|b| b.is_ascii_digit())
    }

    pub fn numeral_value(&self) -> Option<u64> {
        if self.is_numeral() {
            self.text.parse().ok()
        } else {
            None
        }
    }

    pub fn is_reserved_text(&self) -> bool {
        RESERVED.contains(&&*self.text)
    }

    pub fn is_wildcard(&self) -> bool {
        &*self.text == "_" && self.index.is_none()
    }
}

fn guess_kind(text: &str) -> NameKind {
    if !text.is_empty() && text.bytes().all(|b| b.is_ascii_digit()) {
        NameKind::Numeral
    } else if RESERVED.contains(&text) {
        NameKind::Reserved
    } else {
        NameKind::Channel
    }
}

impl PartialEq for Name {
    fn eq(&self, other: &Self) -> bool {
        self.index == other.index && self.text == other.text
    }
}
impl Eq for Name {}

impl Hash for Name {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.text.hash(state);
        self.index.hash(state);
    }
}

impl Ord for Name {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.numeral_value(), other.numeral_value()) {
            (Some(a), Some(b)) => a.cmp(&b).then_with(|| self.text.cmp(&other.text)),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => self.text.cmp(&other.text).then_with(|| self.index.cmp(&other.index)),
        }
    }
}
impl PartialOrd for Name {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "{}{}", self.text, i),
            None => write!(f, "{}", self.text),
        }
    }
}

impl Serialize for Name {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Name {
        Name::parse(s)
    }
}

/// Generator for names guaranteed not to clash with a given avoid set.
#[derive(Debug, Default, Clone)]
pub struct Fresh {
    next: u32,
}

impl Fresh {
    pub fn new() -> Fresh {
        Fresh { next: 0 }
    }

    pub fn starting_at(next: u32) -> Fresh {
        Fresh { next }
    }

    /// Temporary binder names; the section sign never appears in parsed input.
    pub fn temp(&mut self) -> Name {
        let n = Name { kind: NameKind::Variable, text: "\u{a7}".into(), index: Some(self.next) };
        self.next += 1;
        n
    }

    pub fn reserved(&mut self, text: &str) -> Name {
        let n = Name { kind: NameKind::Reserved, text: text.into(), index: Some(self.next) };
        self.next += 1;
        n
    }

    pub fn peek(&self) -> u32 {
        self.next
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerals_sort_first_and_numerically() {
        let mut v: Vec<Name> = ["b", "10", "a", "2", "a1"].iter().map(|s| Name::parse(s)).collect();
        v.sort();
        let shown: Vec<String> = v.iter().map(|n| n.to_string()).collect();
        assert_eq!(shown, vec!["2", "10", "a", "a1", "b"]);
    }

    #[test]
    fn display_roundtrips_through_parse() {
        for s in ["x", "x1", "x01", "b'3", "c0", "17", "o_a", "n_y"] {
            let n = Name::parse(s);
            assert_eq!(n.to_string(), s);
            assert_eq!(Name::parse(&n.to_string()), n);
        }
    }

    #[test]
    fn kind_is_not_part_of_identity() {
        let a = Name::plain("x").with_kind(NameKind::Endpoint);
        let b = Name::plain("x").with_kind(NameKind::Variable);
        assert_eq!(a, b);
    }

    #[test]
    fn reserved_detection() {
        assert!(Name::parse("c").is_reserved_text());
        assert!(Name::parse("c3").is_reserved_text());
        assert!(!Name::parse("cd").is_reserved_text());
    }
}
