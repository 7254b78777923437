//! Session types, contexts, and the two typecheckers.

mod check_cmv;
mod check_mix;
mod ctx;
mod deriv;
mod ops;
mod ty;

pub use check_cmv::check_cmv;
pub use check_mix::check_mix;
pub use ctx::{un_ctx, AddError, TyCtx};
pub use deriv::{Derivation, Note, Rule, Split, Subject, TypeError};
pub use ops::{dual, dualize, subtype, type_equiv, un_pred, TypeOpError};
pub use ty::{SessionType, TBranch};
