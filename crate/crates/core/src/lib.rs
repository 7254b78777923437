//! Executable π-calculus with mixed choice, mixed sessions and classic
//! sessions: syntax, reduction, typing, the mixed-to-classic encoding,
//! behavioural equivalences and synchronisation-pattern analyses.

pub mod canon;
pub mod corpus;
pub mod encode;
pub mod equiv;
pub mod examples;
pub mod lts;
pub mod name;
pub mod oc;
pub mod parse;
pub mod patterns;
pub mod reduce;
pub mod syntax;
pub mod types;
