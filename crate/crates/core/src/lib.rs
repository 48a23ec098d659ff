//! Exact exponential sums over smooth (friable) integers, the combinatorial
//! identities that decompose them, the bound envelopes they are measured
//! against, and the exponent calculus behind the non-triviality regions.

pub mod arith;
pub mod bounds;
pub mod decomp;
pub mod error;
pub mod optimizer;
pub mod sieve;
pub mod sums;

pub use error::{Error, Result};
