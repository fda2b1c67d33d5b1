//! Integer interval analysis for a small imperative language.
//!
//! The crate bundles an interval domain, a worklist abstract interpreter
//! with widening and narrowing, HC4-style forward/backward contractors,
//! interval-driven program rewriting, invariant instrumentation and an
//! exhaustive concrete-execution oracle for checking all of the above.

pub mod absint;
pub mod contractor;
pub mod generate;
pub mod instrument;
pub mod interval;
pub mod lang;
pub mod optimize;
pub mod oracle;

#[doc(hidden)]
pub mod fault;

pub use interval::{ArithMode, ArithOp, CmpOp, ExtInt, Interval, LogicOp, Truth3};
