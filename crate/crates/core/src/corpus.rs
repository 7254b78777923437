//! Corpus files: several named source files in one text file, each
//! introduced by a `==== name` line. Lines before the first entry are
//! comments.

use crate::parse::{parse_file, ParseError};
use crate::syntax::mix::Mix;
use crate::syntax::{Calculus, Term};
use crate::types::TyCtx;

/// The built-in corpus of well-typed mixed-session terms.
pub const ENCODING_CORPUS: &str = include_str!("../corpus/encoding.corpus");

#[derive(Clone, Debug)]
pub struct Entry {
    pub name: String,
    pub source: String,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("entry `{name}`: {error}")]
    Parse { name: String, error: ParseError },
    #[error("entry `{0}` is not a mixed-session term")]
    NotMixed(String),
    #[error("corpus has no entries")]
    Empty,
}

pub fn split(text: &str) -> Vec<Entry> {
    let mut out: Vec<Entry> = Vec::new();
    for line in text.lines() {
        if let Some(name) = line.strip_prefix("====") {
            out.push(Entry { name: name.trim().to_string(), source: String::new() });
        } else if let Some(e) = out.last_mut() {
            e.source.push_str(line);
            e.source.push('\n');
        }
    }
    out
}

/// Parse every entry as a mixed-session source, defaulting the calculus.
pub fn load_mixed(text: &str) -> Result<Vec<(String, TyCtx, Mix)>, CorpusError> {
    let entries = split(text);
    if entries.is_empty() {
        return Err(CorpusError::Empty);
    }
    entries
        .into_iter()
        .map(|e| {
            let f = parse_file(&e.source, Some(Calculus::CmvPlus))
                .map_err(|error| CorpusError::Parse { name: e.name.clone(), error })?;
            match f.term {
                Term::Mix(p) => Ok((e.name, f.free, p)),
                _ => Err(CorpusError::NotMixed(e.name)),
            }
        })
        .collect()
}

pub fn encoding_corpus() -> Vec<(String, TyCtx, Mix)> {
    load_mixed(ENCODING_CORPUS).expect("built-in corpus parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::check_mix;

    #[test]
    fn built_in_corpus_is_well_typed() {
        let c = encoding_corpus();
        assert!(c.len() >= 50);
        for (name, g, p) in &c {
            assert!(check_mix(g, p).is_ok(), "{name}");
        }
    }

    #[test]
    fn splitting() {
        let es = split("# header\n==== a\n0\n==== b\n0 | 0\n");
        assert_eq!(es.len(), 2);
        assert_eq!((es[1].name.as_str(), es[1].source.as_str()), ("b", "0 | 0\n"));
        assert!(matches!(load_mixed("# nothing"), Err(CorpusError::Empty)));
    }
}
