//! Exact-arithmetic laboratory for incompressible sets and trees.
//!
//! Everything is measured against [`machine::ReferenceMachine`], a prefix-free
//! machine made of a literal branch plus explicitly registered codebooks, so
//! description complexity is exactly computable. Measures are [`Dyadic`]
//! rationals and never rounded.

pub mod adversaries;
pub mod bitcore;
pub mod classes_games;
pub mod constructions;
pub mod functional;
pub mod kcl;
pub mod machine;
pub mod order;
pub mod trees;

pub use bitcore::{bits, BitString, ClopenSet, Dyadic, OracleStream};
pub use machine::{PrefixFreeCodebook, ReferenceMachine};
